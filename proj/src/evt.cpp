#include "pinnburn/evt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pinnburn {

namespace {

void check_tail_params(double u, double pu, double sigma, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw DistributionError("shape must lie in (0,1)");
  if (!(pu >= 0.0 && pu <= 1.0)) throw DistributionError("exceedance probability must lie in [0,1]");
  if (!(sigma + xi * u > 0.0)) throw DistributionError("sigma + xi*u must be positive");
}

}  // namespace

double gpd_cdf(double y, double u, double pu, double sigma, double xi) {
  check_tail_params(u, pu, sigma, xi);
  if (!(y > u)) throw DistributionError("gpd_cdf needs y > u; route y <= u to the bulk");
  const double su = sigma + xi * u;
  return 1.0 - pu * std::pow(1.0 + xi * (y - u) / su, -1.0 / xi);
}

double gpd_quantile(double p, double u, double pu, double sigma, double xi) {
  check_tail_params(u, pu, sigma, xi);
  if (!(p >= 1.0 - pu && p < 1.0)) throw DistributionError("gpd_quantile needs p in [1 - pu, 1)");
  const double su = sigma + xi * u;
  return u + su / xi * (std::pow((1.0 - p) / pu, -xi) - 1.0);
}

EmpiricalBulk EmpiricalBulk::build(std::span<const double> y, std::span<const double> u,
                                   std::span<const std::uint8_t> mask) {
  if (y.size() != u.size() || y.size() != mask.size()) throw std::invalid_argument("bulk inputs differ in length");
  EmpiricalBulk b;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!mask[i] || !(y[i] > 0.0)) continue;
    b.pooled_sorted.push_back(y[i]);
    if (y[i] <= u[i]) ++b.n_nonexceedances;
  }
  std::sort(b.pooled_sorted.begin(), b.pooled_sorted.end());
  return b;
}

std::size_t EmpiricalBulk::count_at_most(double y) const {
  return static_cast<std::size_t>(std::upper_bound(pooled_sorted.begin(), pooled_sorted.end(), y) -
                                  pooled_sorted.begin());
}

double bulk_cdf(double y, const EmpiricalBulk& bulk, double pu) {
  if (bulk.n_nonexceedances == 0) throw DistributionError("empirical bulk has no pooled non-exceedances");
  return (1.0 - pu) * static_cast<double>(bulk.count_at_most(y)) / static_cast<double>(bulk.n_nonexceedances);
}

double spread_cdf(double y, const CellParameters& cp, const EmpiricalBulk& bulk) {
  if (!(y > 0.0)) return 0.0;
  if (y > cp.u) return gpd_cdf(y, cp.u, cp.pu, cp.sigma, cp.xi);
  if (y == cp.u) return 1.0 - cp.pu;
  return std::min(bulk_cdf(y, bulk, cp.pu), 1.0 - cp.pu);
}

double conditional_spread_quantile(double p, const CellParameters& cp, const EmpiricalBulk& bulk) {
  if (!(p > 0.0 && p < 1.0)) throw DistributionError("quantile level must lie in (0,1)");
  const double cap = 1.0 - cp.pu;
  if (p > cap) return gpd_quantile(p, cp.u, cp.pu, cp.sigma, cp.xi);
  if (bulk.n_nonexceedances == 0) throw DistributionError("empirical bulk has no pooled non-exceedances");
  // Smallest pooled value whose bulk probability reaches p.
  const double d = static_cast<double>(bulk.n_nonexceedances);
  auto k = static_cast<std::size_t>(std::ceil(p * d / cap));
  while (k > 1 && cap * static_cast<double>(k - 1) / d >= p) --k;
  while (cap * static_cast<double>(k) / d < p) ++k;
  if (k == 0) k = 1;
  if (k > bulk.pooled_sorted.size()) return cp.u;
  const double v = bulk.pooled_sorted[k - 1];
  return v < cp.u ? v : cp.u;
}

double full_cdf(double y, const CellParameters& cp, const EmpiricalBulk& bulk) {
  if (y < 0.0) return 0.0;
  return 1.0 - cp.p0 + cp.p0 * spread_cdf(y, cp, bulk);
}

double full_quantile(double p, const CellParameters& cp, const EmpiricalBulk& bulk) {
  if (!(p > 0.0 && p < 1.0)) throw DistributionError("quantile level must lie in (0,1)");
  if (p <= 1.0 - cp.p0) return 0.0;
  double q = (p - (1.0 - cp.p0)) / cp.p0;
  q = std::clamp(q, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  return conditional_spread_quantile(q, cp, bulk);
}

double exp_margin_transform(double y, const CellParameters& cp, const EmpiricalBulk& bulk) {
  const double f = std::min(spread_cdf(y, cp, bulk), 1.0 - 1e-10);
  return -std::log1p(-f);
}

GridDataset prepare_for_model(const GridDataset& raw, const StandardizationSpec& spec) {
  return apply_standardization(with_burnable_predictor(raw), spec);
}

ParameterFields predict_fields(const FullBurntAreaModel& model, const GridDataset& raw) {
  const GridDataset ds = prepare_for_model(raw, model.standardization);
  ParameterFields f;
  auto eval = [&](const ParameterSurfaceModel& m) {
    const SurfaceEval ev = evaluate_surface(m, gather_all(m, ds));
    return std::vector<double>(ev.theta.data(), ev.theta.data() + ev.theta.size());
  };
  f.p0 = eval(model.p0);
  f.u = eval(model.u);
  f.pu = eval(model.pu);
  f.sigma = eval(model.sigma);
  f.xi = model.xi;
  return f;
}

}  // namespace pinnburn
