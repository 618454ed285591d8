#include "pinnburn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pinnburn/spline.hpp"

namespace pinnburn {

TrendField fit_trend(const GridDataset& raw, const std::string& predictor, int month, int radius) {
  if (month < 1 || month > 12) throw std::invalid_argument("month must lie in 1..12");
  if (radius < 0) throw std::invalid_argument("pooling radius must be >= 0");
  const auto& field = raw.predictors[raw.predictor_index(predictor)];
  std::vector<std::size_t> times;
  for (std::size_t t = 0; t < raw.n_times(); ++t)
    if (raw.calendar_month(t) == month) times.push_back(t);

  TrendField tf;
  tf.slope.resize(raw.n_sites());
  tf.intercept.resize(raw.n_sites());
  tf.n_pooled.resize(raw.n_sites());
  for (std::size_t s = 0; s < raw.n_sites(); ++s) {
    const int r0 = raw.sites[s].row, c0 = raw.sites[s].col;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    int min_year = std::numeric_limits<int>::max(), max_year = std::numeric_limits<int>::min();
    for (int dr = -radius; dr <= radius; ++dr)
      for (int dc = -radius; dc <= radius; ++dc) {
        const int r = r0 + dr, c = c0 + dc;
        if (r < 0 || r >= raw.rows || c < 0 || c >= raw.cols) continue;
        const auto site = static_cast<std::size_t>(r * raw.cols + c);
        for (std::size_t t : times) {
          const double v = field[raw.cell(t, site)];
          if (!std::isfinite(v)) continue;
          const double x = raw.year(t);
          sx += x;
          sy += v;
          sxx += x * x;
          sxy += x * v;
          n += 1;
          min_year = std::min(min_year, raw.year(t));
          max_year = std::max(max_year, raw.year(t));
        }
      }
    if (n == 0) throw std::runtime_error("trend neighbourhood of site " + std::to_string(s) + " has no data");
    if (min_year == max_year)
      throw std::runtime_error("trend needs at least 2 distinct years at site " + std::to_string(s));
    // Centered sums keep the normal equations well conditioned for calendar years.
    const double mx = sx / n, my = sy / n;
    const double cxx = sxx - n * mx * mx, cxy = sxy - n * mx * my;
    tf.slope[s] = cxy / cxx;
    tf.intercept[s] = my - tf.slope[s] * mx;
    tf.n_pooled[s] = static_cast<std::size_t>(n);
  }
  return tf;
}

GridDataset perturb_predictor(const GridDataset& raw, const std::string& predictor, std::size_t t0,
                              const TrendField& trend, double horizon) {
  if (t0 >= raw.n_times()) throw std::invalid_argument("reference time position out of range");
  if (trend.slope.size() != raw.n_sites()) throw std::invalid_argument("trend field does not match the grid");
  GridDataset out = raw;
  auto& field = out.predictors[out.predictor_index(predictor)];
  for (std::size_t s = 0; s < raw.n_sites(); ++s) {
    if (!std::isfinite(trend.slope[s])) throw std::invalid_argument("trend slope is not finite");
    field[out.cell(t0, s)] += trend.slope[s] * horizon;
  }
  return out;
}

namespace {

MetricDelta make_delta(std::vector<double> base, std::vector<double> pert) {
  MetricDelta d;
  d.absolute.resize(base.size());
  d.relative.resize(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    d.absolute[i] = pert[i] - base[i];
    d.relative[i] = base[i] > 0.0 ? d.absolute[i] / base[i] : std::numeric_limits<double>::quiet_NaN();
  }
  d.baseline = std::move(base);
  d.perturbed = std::move(pert);
  return d;
}

}  // namespace

ScenarioDelta scenario_delta(const FullBurntAreaModel& model, const GridDataset& baseline,
                             const GridDataset& perturbed, std::size_t t0, double quantile_level) {
  const std::size_t pos[] = {t0};
  const ParameterFields fb = predict_fields(model, resample_times(baseline, pos));
  const ParameterFields fp = predict_fields(model, resample_times(perturbed, pos));
  const std::size_t ns = baseline.n_sites();
  std::vector<double> qb(ns, std::numeric_limits<double>::quiet_NaN()), qp = qb;
  for (std::size_t s = 0; s < ns; ++s) {
    // No burnable area means no spread distribution to take a quantile of.
    if (!(baseline.burnable[baseline.cell(t0, s)] > 0.0)) continue;
    CellParameters cb = fb.at(s);
    CellParameters cp = fp.at(s);
    cp.pu = cb.pu;
    qb[s] = conditional_spread_quantile(quantile_level, cb, model.bulk);
    qp[s] = conditional_spread_quantile(quantile_level, cp, model.bulk);
  }
  ScenarioDelta d;
  d.p0 = make_delta(fb.p0, fp.p0);
  d.spread_quantile = make_delta(std::move(qb), std::move(qp));
  return d;
}

Envelope nan_envelope(const std::vector<std::vector<double>>& fields, double lower, double upper) {
  Envelope env;
  if (fields.empty()) return env;
  const std::size_t n = fields.front().size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  env.median.assign(n, nan);
  env.lower.assign(n, nan);
  env.upper.assign(n, nan);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col;
    for (const auto& f : fields)
      if (std::isfinite(f[i])) col.push_back(f[i]);
    if (col.empty()) continue;
    env.median[i] = empirical_quantile(col, 0.5);
    env.lower[i] = empirical_quantile(col, lower);
    env.upper[i] = empirical_quantile(col, upper);
  }
  return env;
}

ScenarioResult perturb_and_compare(const BootstrapEnsemble& ensemble, const GridDataset& raw, std::size_t t0,
                                   const std::string& predictor, const TrendField& trend, double horizon,
                                   double quantile_level) {
  const GridDataset perturbed = perturb_predictor(raw, predictor, t0, trend, horizon);
  ScenarioResult res;
  const auto& orig = raw.predictors[raw.predictor_index(predictor)];
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t c = 0; c < raw.n_cells(); ++c)
    if (raw.observed[c] && std::isfinite(orig[c])) {
      lo = std::min(lo, orig[c]);
      hi = std::max(hi, orig[c]);
    }
  const auto& moved = perturbed.predictors[perturbed.predictor_index(predictor)];
  for (std::size_t s = 0; s < raw.n_sites(); ++s) {
    const double v = moved[raw.cell(t0, s)];
    if (v < lo || v > hi) ++res.n_extrapolated;
  }

  std::vector<std::vector<double>> p0a, p0r, qa, qr;
  for (const auto& rep : ensemble.replicates) {
    if (!rep.ok()) continue;
    ScenarioDelta d = scenario_delta(*rep.model, raw, perturbed, t0, quantile_level);
    p0a.push_back(d.p0.absolute);
    p0r.push_back(d.p0.relative);
    qa.push_back(d.spread_quantile.absolute);
    qr.push_back(d.spread_quantile.relative);
    res.replicate_ids.push_back(rep.index);
    res.deltas.push_back(std::move(d));
  }
  if (res.deltas.empty()) throw std::runtime_error("ensemble has no fitted replicates");
  res.summary = {nan_envelope(p0a), nan_envelope(p0r), nan_envelope(qa), nan_envelope(qr)};
  return res;
}

}  // namespace pinnburn
