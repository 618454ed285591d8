#include "pinnburn/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pinnburn {

namespace {

void check_sizes(std::size_t n, std::size_t a, std::size_t b) {
  if (a != n || b != n) throw std::invalid_argument("loss inputs have mismatched lengths");
}

double floored_log(double x, std::size_t& clamped) {
  if (x < kLogFloor) {
    ++clamped;
    return std::log(kLogFloor);
  }
  return std::log(x);
}

}  // namespace

MaskedLossValue bernoulli_loss(std::span<const double> p, std::span<const double> indicator,
                               std::span<const std::uint8_t> mask, std::span<double> grad_p) {
  check_sizes(p.size(), indicator.size(), mask.size());
  MaskedLossValue out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!mask[i]) continue;
    const double pi = p[i];
    if (!(pi >= 0.0 && pi <= 1.0))
      throw LossError("Bernoulli probability outside (0,1) at cell " + std::to_string(i));
    const double z = indicator[i];
    if (z > 0.0) out.total -= z * floored_log(pi, out.clamped);
    if (z < 1.0) out.total -= (1.0 - z) * floored_log(1.0 - pi, out.clamped);
    ++out.n_contributing;
    if (!grad_p.empty())
      grad_p[i] = -z / std::max(pi, kLogFloor) + (1.0 - z) / std::max(1.0 - pi, kLogFloor);
  }
  return out;
}

MaskedLossValue quantile_loss(std::span<const double> u, std::span<const double> y, double tau,
                              std::span<const std::uint8_t> mask, std::span<double> grad_u) {
  check_sizes(u.size(), y.size(), mask.size());
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
  MaskedLossValue out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!mask[i] || !(y[i] > 0.0)) continue;
    const double r = y[i] - u[i];
    out.total += std::max(tau * r, (tau - 1.0) * r);
    ++out.n_contributing;
    if (!grad_u.empty()) grad_u[i] = r > 0.0 ? -tau : (r < 0.0 ? 1.0 - tau : 0.0);
  }
  return out;
}

MaskedLossValue gpd_nll(std::span<const double> y, std::span<const double> u, std::span<const double> sigma,
                        double xi, std::span<const std::uint8_t> mask, GpdGradients grads) {
  check_sizes(y.size(), u.size(), sigma.size());
  if (mask.size() != y.size()) throw std::invalid_argument("loss inputs have mismatched lengths");
  if (!(xi > 0.0 && xi < 1.0)) throw LossError("GPD shape must lie in (0,1)");
  MaskedLossValue out;
  double d_xi = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!mask[i] || !(y[i] > u[i])) continue;
    const double su = sigma[i] + xi * u[i];
    if (!(su > 0.0)) throw LossError("GPD scale sigma + xi*u is not positive at cell " + std::to_string(i));
    const double z = y[i] - u[i];
    const double w = 1.0 + xi * z / su;
    if (!(w > 0.0)) throw LossError("GPD support violated at cell " + std::to_string(i));
    const double log_w = std::log(w);
    out.total += floored_log(su, out.clamped) + (1.0 / xi + 1.0) * log_w;
    ++out.n_contributing;
    const double d_su = 1.0 / su - (1.0 + xi) * z / (su * su * w);
    if (!grads.sigma.empty()) grads.sigma[i] = d_su;
    if (!grads.u.empty()) grads.u[i] = d_su * xi - (1.0 + xi) / (su * w);
    d_xi += -log_w / (xi * xi) + (1.0 / xi + 1.0) * (z / su) / w + d_su * u[i];
  }
  if (grads.xi) *grads.xi = d_xi;
  return out;
}

double shape_from_raw(double raw) { return 0.5 + 0.5 * std::tanh(0.5 * raw); }

double raw_from_shape(double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("shape must lie in (0,1)");
  return std::log(xi / (1.0 - xi));
}

double shape_raw_derivative(double raw) {
  const double x = shape_from_raw(raw);
  return x * (1.0 - x);
}

}  // namespace pinnburn
