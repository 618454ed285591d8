#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pinnburn/fit_pipeline.hpp"

namespace pinnburn {

/// Per-site linear trend of one predictor against year.
struct TrendField {
  std::vector<double> slope;      // predictor units per year
  std::vector<double> intercept;
  std::vector<std::size_t> n_pooled;
};

/// OLS of predictor on year per site, pooling the (2r+1)x(2r+1) neighbourhood
/// and keeping only time positions in calendar month `month`.
TrendField fit_trend(const GridDataset& raw, const std::string& predictor, int month, int radius = 1);

/// Copy of `raw` with predictor(s, t0) += slope(s) * horizon; nothing else changes.
GridDataset perturb_predictor(const GridDataset& raw, const std::string& predictor, std::size_t t0,
                              const TrendField& trend, double horizon);

/// Baseline/perturbed values of one metric per site. relative is NaN where
/// the baseline is not positive.
struct MetricDelta {
  std::vector<double> baseline;
  std::vector<double> perturbed;
  std::vector<double> absolute;
  std::vector<double> relative;
};

struct ScenarioDelta {
  MetricDelta p0;
  MetricDelta spread_quantile;  // q+ at the configured level
};

/// Pointwise summaries over replicates; NaN entries are skipped, and a site
/// with no finite value gets NaN.
struct ScenarioSummary {
  Envelope p0_absolute;
  Envelope p0_relative;
  Envelope quantile_absolute;
  Envelope quantile_relative;
};

struct ScenarioResult {
  std::vector<std::size_t> replicate_ids;
  std::vector<ScenarioDelta> deltas;
  ScenarioSummary summary;
  /// Sites whose perturbed value lies outside the predictor's observed range.
  std::size_t n_extrapolated = 0;
};

/// Baseline vs perturbed p0 and conditional spread quantile at time position
/// t0 for one fitted model. p_u is held at its baseline value.
ScenarioDelta scenario_delta(const FullBurntAreaModel& model, const GridDataset& baseline,
                             const GridDataset& perturbed, std::size_t t0, double quantile_level = 0.9);

ScenarioResult perturb_and_compare(const BootstrapEnsemble& ensemble, const GridDataset& raw, std::size_t t0,
                                   const std::string& predictor, const TrendField& trend, double horizon = 19.0,
                                   double quantile_level = 0.9);

/// Pointwise quantile envelope that ignores NaN entries.
Envelope nan_envelope(const std::vector<std::vector<double>>& fields, double lower = 0.025, double upper = 0.975);

}  // namespace pinnburn
