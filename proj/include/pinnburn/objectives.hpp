#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace pinnburn {

class LossError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Loss summed over contributing cells. `clamped` counts log arguments that
/// hit the 1e-12 floor; a fit whose selected epoch has clamped > 0 is rejected.
struct MaskedLossValue {
  double total = 0.0;
  std::size_t n_contributing = 0;
  std::size_t clamped = 0;

  double mean() const { return n_contributing ? total / static_cast<double>(n_contributing) : 0.0; }
};

inline constexpr double kLogFloor = 1e-12;

/// -sum [z log p + (1 - z) log(1 - p)] over cells with mask != 0.
/// `grad_p`, when non-empty, receives d total / d p (zero elsewhere).
MaskedLossValue bernoulli_loss(std::span<const double> p, std::span<const double> indicator,
                               std::span<const std::uint8_t> mask, std::span<double> grad_p = {});

/// Tilted (pinball) loss sum max{tau (y - u), (tau - 1)(y - u)} over masked
/// cells with y > 0. The subgradient at y == u is taken as 0.
MaskedLossValue quantile_loss(std::span<const double> u, std::span<const double> y, double tau,
                              std::span<const std::uint8_t> mask, std::span<double> grad_u = {});

/// Gradients of the GPD negative log-likelihood; any member may be empty/null.
struct GpdGradients {
  std::span<double> sigma;
  std::span<double> u;
  double* xi = nullptr;
};

/// sum [log sigma_u + (1/xi + 1) log(1 + xi (y - u) / sigma_u)] over masked
/// cells with y > u, where sigma_u = sigma + xi * u.
MaskedLossValue gpd_nll(std::span<const double> y, std::span<const double> u, std::span<const double> sigma,
                        double xi, std::span<const std::uint8_t> mask, GpdGradients grads = {});

/// xi = logistic(raw), a smooth monotone map onto (0, 1).
double shape_from_raw(double raw);
double raw_from_shape(double xi);
/// d xi / d raw.
double shape_raw_derivative(double raw);

}  // namespace pinnburn
