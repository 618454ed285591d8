#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pinnburn/grid_data.hpp"

namespace pinnburn {

/// One synthetic predictor: a separable-GP anomaly plus a seasonal cycle and
/// a per-site linear trend.
struct PredictorGenerator {
  std::string name;
  PredictorRole role = PredictorRole::noninterpreted;
  double mean = 0.0;
  double sd = 1.0;  // GP anomaly scale
  double range_s_km = 300.0;
  double range_t_months = 3.0;
  double seasonal_amplitude = 0.0;
  double trend_mean = 0.0;  // per year
  double trend_sd = 0.0;
};

/// eta = intercept + sum_j linear[j] * x_j + sum_j saturating[j] * tanh(x_j),
/// with x_j the raw predictor values. Missing coefficient entries count as 0.
struct TrueSurface {
  double intercept = 0.0;
  std::vector<double> linear;
  std::vector<double> saturating;

  double eta(std::span<const double> x) const;
};

struct GeneratorSpec {
  int rows = 20;
  int cols = 20;
  int months = 120;
  int start_year = 2001;
  int start_month = 1;
  double lon0 = 0.0;
  double lat0 = 45.0;
  double spacing_deg = 0.25;
  std::vector<PredictorGenerator> predictors;
  TrueSurface p0;     // logit p0
  TrueSurface pu;     // logit p_u
  TrueSurface u;      // log(u / lambda)
  TrueSurface sigma;  // log(sigma / lambda)
  double xi = 0.3;
  double bulk_alpha = 2.0;  // Beta law of y/u below the threshold
  double bulk_beta = 1.5;
  double lambda_min = 50.0;
  double lambda_max = 700.0;
  double zero_lambda_fraction = 0.03;  // sites with no burnable area
  double missing_fraction = 0.0;       // responses dropped at random
  std::uint64_t seed = 1;

  void validate() const;
};

/// The surfaces the data were drawn from, per cell (time-major).
struct SyntheticTruth {
  std::vector<double> p0;
  std::vector<double> u;
  std::vector<double> pu;
  std::vector<double> sigma;
  double xi = 0.0;
  double bulk_alpha = 0.0;
  double bulk_beta = 0.0;
  std::size_t n_rejected = 0;

  /// tau-quantile of the non-zero spread at one cell.
  double spread_quantile(std::size_t cell, double tau) const;
};

struct SyntheticPanel {
  GridDataset data;
  SyntheticTruth truth;
};

/// Panel with interpreted predictors t2m, vpd, spi and non-interpreted wind,
/// scaled so the 0.4-quantile of non-zero spread lies above the GPD threshold.
GeneratorSpec default_generator(int rows, int cols, int months, std::uint64_t seed);

/// Draws every cell: fire with probability p0; given fire, u + GPD(sigma + xi*u, xi)
/// with probability p_u, else u times a Beta draw. Draws above the burnable
/// area are redrawn; more than 1% redraws is an error.
SyntheticPanel generate(const GeneratorSpec& spec);

/// truth.csv (per-cell surfaces) and truth.json (scalars) in `dir`.
void write_truth(const SyntheticPanel& panel, const std::filesystem::path& dir);

}  // namespace pinnburn
