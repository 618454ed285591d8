#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pinnburn {

class SplineError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One-dimensional thin-plate spline m(x) = linear * x + sum_k radial[k] * |x - knots[k]|^3.
/// There is no intercept; the network bias carries the level.
struct SplineTerm {
  std::vector<double> knots;
  double linear = 0.0;
  std::vector<double> radial;

  std::size_t n_coefficients() const { return 1 + radial.size(); }
  bool operator==(const SplineTerm&) const = default;
};

/// Additive block of splines, one term per interpreted predictor.
struct SplineBlock {
  std::vector<SplineTerm> terms;

  std::size_t n_coefficients() const;
  void validate() const;
  bool operator==(const SplineBlock&) const = default;
};

/// Type-7 empirical quantile of an unsorted sample.
double empirical_quantile(std::vector<double> values, double prob);

/// Knots at the empirical quantiles with probabilities i / (K + 1), i = 1..K.
std::vector<double> place_knots(std::span<const double> values, int k);

/// Term with the given knots and zero coefficients.
SplineTerm make_term(std::vector<double> knots);

double eval_spline(const SplineBlock& block, std::size_t j, double x);

/// Basis values [x, |x - k_1|^3, ..., |x - k_K|^3]; also the gradient of
/// eval_spline with respect to [linear, radial...].
void spline_basis(const SplineTerm& term, double x, std::span<double> out);

/// x -> m_j(x) - m_j(median).
std::function<double(double)> center_at_median(const SplineBlock& block, std::size_t j, double median);

/// Flattened coefficients, term by term: [linear_j, radial_j...].
void pack_coefficients(const SplineBlock& block, std::span<double> out);
void unpack_coefficients(SplineBlock& block, std::span<const double> in);

}  // namespace pinnburn
