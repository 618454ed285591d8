#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pinnburn/evt.hpp"

namespace pinnburn {

struct ScoreReport {
  std::string metric;
  double value = 0.0;
  std::string split;
  long replicate = -1;  // -1 for aggregates
};

/// Mann-Whitney AUC: P(score_1 > score_0) + P(tie) / 2 over positive/negative
/// pairs among cells with mask != 0. Throws if either class is absent.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask);

/// Unnormalized weight 1 - (1 + (x + 1)^2 / 10000)^(-1/4).
double twcrps_raw_weight(double x);
/// Weights r(v_i) normalized so the last threshold has weight 1.
std::vector<double> twcrps_weights(std::span<const double> thresholds);
/// n thresholds spaced geometrically from `first` to `last`.
std::vector<double> geometric_thresholds(double first = 1.0, double last = 750.0, int n = 17);

/// sum_n sum_i r(v_i) * (1{y_n <= v_i} - F_n(v_i))^2, with forecast_cdf[n][i] = F_n(v_i).
double twcrps(const std::vector<std::vector<double>>& forecast_cdf, std::span<const double> y,
              std::span<const double> thresholds);

/// Spread-model twCRPS over cells with mask != 0 and y > 0.
double twcrps_spread(const ParameterFields& fields, const EmpiricalBulk& bulk, std::span<const double> y,
                     std::span<const std::uint8_t> mask, std::span<const double> thresholds);

struct QqRow {
  double level = 0.0;
  double theoretical = 0.0;
  double empirical = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Pooled Q-Q table against Exp(1) at levels 0.5 and the plotting positions
/// i/(n+1) above it, thinned to at most `max_points`. Bands are pointwise
/// 2.5%/97.5% quantiles over `n_sim` simulated Exp(1) samples of size n.
std::vector<QqRow> qq_exponential(std::span<const double> values, int n_sim = 1000, std::uint64_t seed = 1,
                                  std::size_t max_points = 500);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Exp(1) with the asymptotic
/// Kolmogorov distribution (Stephens small-sample correction).
KsResult ks_exponential(std::span<const double> values);

}  // namespace pinnburn
