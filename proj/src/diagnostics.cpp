#include "pinnburn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pinnburn/spline.hpp"

namespace pinnburn {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask) {
  if (scores.size() != labels.size() || scores.size() != mask.size())
    throw std::invalid_argument("auc inputs differ in length");
  std::vector<std::pair<double, bool>> rows;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) rows.emplace_back(scores[i], labels[i] != 0);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Twice the Mann-Whitney U, counted in integers so ties are exact.
  unsigned long long twice_u = 0, n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    unsigned long long pos = 0, neg = 0;
    while (j < rows.size() && rows[j].first == rows[i].first) {
      (rows[j].second ? pos : neg) += 1;
      ++j;
    }
    twice_u += 2 * pos * n_neg + pos * neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc needs both classes among the masked cells");
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double twcrps_raw_weight(double x) { return 1.0 - std::pow(1.0 + (x + 1.0) * (x + 1.0) / 10000.0, -0.25); }

std::vector<double> twcrps_weights(std::span<const double> thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("twCRPS needs at least one threshold");
  const double norm = twcrps_raw_weight(thresholds.back());
  std::vector<double> w;
  for (double v : thresholds) w.push_back(twcrps_raw_weight(v) / norm);
  return w;
}

std::vector<double> geometric_thresholds(double first, double last, int n) {
  if (!(first > 0.0 && last > first) || n < 2) throw std::invalid_argument("bad geometric threshold range");
  std::vector<double> v(static_cast<std::size_t>(n));
  const double ratio = std::log(last / first) / (n - 1);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = first * std::exp(ratio * i);
  v.front() = first;
  v.back() = last;
  return v;
}

double twcrps(const std::vector<std::vector<double>>& forecast_cdf, std::span<const double> y,
              std::span<const double> thresholds) {
  if (forecast_cdf.size() != y.size()) throw std::invalid_argument("twCRPS forecasts and observations differ in count");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1])) throw std::invalid_argument("twCRPS thresholds must increase");
  const std::vector<double> w = twcrps_weights(thresholds);
  double total = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    if (forecast_cdf[n].size() != thresholds.size())
      throw std::invalid_argument("forecast row does not cover every threshold");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      const double d = (y[n] <= thresholds[i] ? 1.0 : 0.0) - forecast_cdf[n][i];
      total += w[i] * d * d;
    }
  }
  return total;
}

double twcrps_spread(const ParameterFields& fields, const EmpiricalBulk& bulk, std::span<const double> y,
                     std::span<const std::uint8_t> mask, std::span<const double> thresholds) {
  std::vector<std::vector<double>> cdf;
  std::vector<double> obs;
  for (std::size_t c = 0; c < y.size(); ++c) {
    if (!mask[c] || !(y[c] > 0.0)) continue;
    const CellParameters cp = fields.at(c);
    std::vector<double> row;
    for (double v : thresholds) row.push_back(spread_cdf(v, cp, bulk));
    cdf.push_back(std::move(row));
    obs.push_back(y[c]);
  }
  return twcrps(cdf, obs, thresholds);
}

std::vector<QqRow> qq_exponential(std::span<const double> values, int n_sim, std::uint64_t seed,
                                  std::size_t max_points) {
  const std::size_t n = values.size();
  if (n < 50) throw std::invalid_argument("Q-Q table needs at least 50 values");
  if (n_sim < 2 || max_points < 2) throw std::invalid_argument("Q-Q table needs >= 2 simulations and points");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> levels{0.5};
  std::vector<std::size_t> ranks;
  for (std::size_t i = 1; i <= n; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(n + 1);
    if (p > 0.5) ranks.push_back(i);
  }
  const std::size_t keep = std::min(ranks.size(), max_points - 1);
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t idx = keep == 1 ? ranks.size() - 1 : k * (ranks.size() - 1) / (keep - 1);
    levels.push_back(static_cast<double>(ranks[idx]) / static_cast<double>(n + 1));
  }

  auto quantile_sorted = [](const std::vector<double>& s, double p) {
    const double h = (static_cast<double>(s.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<std::vector<double>> sims(levels.size(), std::vector<double>(static_cast<std::size_t>(n_sim)));
  std::vector<double> sample(n);
  for (int s = 0; s < n_sim; ++s) {
    for (auto& x : sample) x = expo(rng);
    std::sort(sample.begin(), sample.end());
    for (std::size_t l = 0; l < levels.size(); ++l) sims[l][static_cast<std::size_t>(s)] = quantile_sorted(sample, levels[l]);
  }

  std::vector<QqRow> rows;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    QqRow r;
    r.level = levels[l];
    r.theoretical = -std::log1p(-levels[l]);
    r.empirical = quantile_sorted(sorted, levels[l]);
    r.lower = empirical_quantile(sims[l], 0.025);
    r.upper = empirical_quantile(sims[l], 0.975);
    rows.push_back(r);
  }
  rows.front().theoretical = std::log(2.0);
  return rows;
}

namespace {

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_exponential(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("KS test needs at least one value");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = s[i] > 0.0 ? -std::expm1(-s[i]) : 0.0;
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double rn = std::sqrt(n);
  return {d, kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)};
}

}  // namespace pinnburn
