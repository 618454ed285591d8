#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pinnburn/grid_data.hpp"
#include "pinnburn/pinn.hpp"

namespace pinnburn {

class DistributionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tail probability 1 - pu * [1 + xi (y - u) / (sigma + xi u)]^(-1/xi), for y > u.
double gpd_cdf(double y, double u, double pu, double sigma, double xi);

/// Inverse of gpd_cdf on [1 - pu, 1).
double gpd_quantile(double p, double u, double pu, double sigma, double xi);

/// Pooled empirical distribution of non-zero spread used below the threshold.
struct EmpiricalBulk {
  std::vector<double> pooled_sorted;  // all pooled positive responses, ascending
  std::size_t n_nonexceedances = 0;   // pooled cells with y <= u

  /// Builds from the cells where mask != 0 and y > 0.
  static EmpiricalBulk build(std::span<const double> y, std::span<const double> u,
                             std::span<const std::uint8_t> mask);
  std::size_t count_at_most(double y) const;
  bool operator==(const EmpiricalBulk&) const = default;
};

/// (1 - pu) * #{pooled <= y} / #{pooled non-exceedances}.
double bulk_cdf(double y, const EmpiricalBulk& bulk, double pu);

/// Parameters of the mixture at one cell.
struct CellParameters {
  double p0 = 0.0;
  double u = 0.0;
  double pu = 0.0;
  double sigma = 0.0;
  double xi = 0.0;
};

/// CDF of non-zero spread Y | Y > 0: capped bulk below u, GPD tail from u up.
double spread_cdf(double y, const CellParameters& cp, const EmpiricalBulk& bulk);

/// Generalized inverse of spread_cdf.
double conditional_spread_quantile(double p, const CellParameters& cp, const EmpiricalBulk& bulk);

/// 1 - p0 + p0 * spread_cdf(y); the atom at zero has mass 1 - p0.
double full_cdf(double y, const CellParameters& cp, const EmpiricalBulk& bulk);

/// Generalized inverse of full_cdf; returns 0 for p <= 1 - p0.
double full_quantile(double p, const CellParameters& cp, const EmpiricalBulk& bulk);

/// -log(1 - F(y)) with F capped at 1 - 1e-10.
double exp_margin_transform(double y, const CellParameters& cp, const EmpiricalBulk& bulk);

/// Fitted model for burnt area: occurrence, threshold, exceedance probability,
/// GPD scale surfaces, scalar shape and the pooled bulk, plus the predictor
/// standardization they were trained under.
struct FullBurntAreaModel {
  ParameterSurfaceModel p0;
  ParameterSurfaceModel u;
  ParameterSurfaceModel pu;
  ParameterSurfaceModel sigma;
  double xi = 0.5;
  EmpiricalBulk bulk;
  StandardizationSpec standardization;

  bool operator==(const FullBurntAreaModel&) const = default;
};

/// Per-cell parameter surfaces of a fitted model over a raw dataset.
struct ParameterFields {
  std::vector<double> p0;
  std::vector<double> u;
  std::vector<double> pu;
  std::vector<double> sigma;
  double xi = 0.0;

  CellParameters at(std::size_t cell) const { return {p0[cell], u[cell], pu[cell], sigma[cell], xi}; }
};

/// Standardizes `raw` with the model's spec and evaluates all four surfaces on every cell.
ParameterFields predict_fields(const FullBurntAreaModel& model, const GridDataset& raw);

/// Prepared (burnable-augmented, standardized) copy of a raw dataset.
GridDataset prepare_for_model(const GridDataset& raw, const StandardizationSpec& spec);

}  // namespace pinnburn
