#include <doctest.h>

#include <cmath>
#include <random>

#include "pinnburn/scenario.hpp"
#include "pinnburn/synth.hpp"
#include "test_util.hpp"

using namespace pinnburn;

namespace {

GridDataset yearly_panel(int years, double slope_fn(std::size_t site), double noise_sd, std::uint64_t seed) {
  GridDataset ds = testutil::toy_dataset(5, 5, 12 * years, 1, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, noise_sd);
  for (std::size_t t = 0; t < ds.n_times(); ++t)
    for (std::size_t s = 0; s < ds.n_sites(); ++s)
      ds.predictors[0][ds.cell(t, s)] = slope_fn(s) * ds.year(t) + (noise_sd > 0 ? nd(rng) : 0.0);
  return ds;
}

}  // namespace

TEST_CASE("exact linear data gives the exact slope") {
  const GridDataset ds = yearly_panel(6, [](std::size_t) { return 2.0; }, 0.0, 1);
  const TrendField tf = fit_trend(ds, "x1", 8);
  for (std::size_t s = 0; s < ds.n_sites(); ++s) CHECK(std::abs(tf.slope[s] - 2.0) < 1e-12);
  CHECK(tf.n_pooled[0] == 4 * 6);
  CHECK(tf.n_pooled[6] == 9 * 6);
}

TEST_CASE("constant predictor has zero slope") {
  const GridDataset ds = yearly_panel(4, [](std::size_t) { return 0.0; }, 0.0, 2);
  for (double s : fit_trend(ds, "x1", 1).slope) CHECK(s == 0.0);
}

TEST_CASE("site-varying slopes are recovered") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.04, 0.01);
  static std::vector<double> slopes(25);
  for (auto& s : slopes) s = nd(rng);
  // Neighbourhood pooling smooths the field, so compare with radius 0.
  const GridDataset ds = yearly_panel(20, [](std::size_t s) { return slopes[s]; }, 0.1, 4);
  const TrendField tf = fit_trend(ds, "x1", 7, 0);
  double ss = 0;
  for (std::size_t s = 0; s < 25; ++s) ss += (tf.slope[s] - slopes[s]) * (tf.slope[s] - slopes[s]);
  CHECK(std::sqrt(ss / 25) < 0.005);
}

TEST_CASE("trend errors") {
  const GridDataset ds = yearly_panel(1, [](std::size_t) { return 1.0; }, 0.0, 5);
  CHECK_THROWS(fit_trend(ds, "x1", 3));
  CHECK_THROWS(fit_trend(ds, "nope", 3));
}

TEST_CASE("perturbation touches only the chosen month and predictor") {
  GridDataset ds = testutil::toy_dataset(3, 3, 24, 2, 6);
  TrendField tf{std::vector<double>(9, 0.5), std::vector<double>(9, 0.0), std::vector<std::size_t>(9, 1)};
  const GridDataset p = perturb_predictor(ds, "x1", 7, tf, 19.0);
  for (std::size_t c = 0; c < ds.n_cells(); ++c) {
    const bool at_t0 = c / 9 == 7;
    CHECK(p.predictors[0][c] == (at_t0 ? ds.predictors[0][c] + 9.5 : ds.predictors[0][c]));
    CHECK(p.predictors[1][c] == ds.predictors[1][c]);
  }
  CHECK(p.response == ds.response);
}

namespace {

FitConfig tiny_config() {
  FitConfig cfg;
  cfg.epochs = 6;
  cfg.adam.learning_rate = 0.01;
  cfg.architectures[SurfaceTarget::p0] = {{{LayerKind::dense, 3}}, {"t2m"}, 3};
  cfg.architectures[SurfaceTarget::u] = {{{LayerKind::dense, 2}}, {}, 0};
  cfg.architectures[SurfaceTarget::pu] = {{{LayerKind::dense, 3}}, {}, 0};
  cfg.architectures[SurfaceTarget::sigma] = {{{LayerKind::dense, 3}}, {"t2m"}, 3};
  cfg.n_replicates = 2;
  return cfg;
}

}  // namespace

TEST_CASE("zero trend gives exactly zero deltas") {
  const SyntheticPanel panel = generate(default_generator(6, 6, 36, 8));
  const BootstrapEnsemble ens = run_ensemble(panel.data, tiny_config());
  TrendField zero{std::vector<double>(36, 0.0), std::vector<double>(36, 0.0), std::vector<std::size_t>(36, 1)};
  const ScenarioResult r = perturb_and_compare(ens, panel.data, 7, "t2m", zero);
  REQUIRE(r.deltas.size() == 2);
  for (const auto& d : r.deltas)
    for (std::size_t s = 0; s < 36; ++s) {
      CHECK(d.p0.absolute[s] == 0.0);
      if (std::isfinite(d.spread_quantile.baseline[s])) CHECK(d.spread_quantile.absolute[s] == 0.0);
    }
  // Sites without burnable area carry no quantile.
  for (std::size_t s = 0; s < 36; ++s)
    if (panel.data.burnable[panel.data.cell(7, s)] == 0.0) CHECK(std::isnan(r.deltas[0].spread_quantile.baseline[s]));
}

TEST_CASE("quantile deltas do not depend on p0") {
  const SyntheticPanel panel = generate(default_generator(6, 6, 36, 9));
  FitConfig cfg = tiny_config();
  cfg.n_replicates = 1;
  const Replicate rep = run_replicate(panel.data, cfg, 0);
  REQUIRE(rep.ok());
  FullBurntAreaModel other = *rep.model;
  auto params = other.p0.parameters();
  for (auto& p : params) p = -p + 0.3;
  other.p0.set_parameters(params);
  const TrendField tf = fit_trend(panel.data, "t2m", 8);
  const GridDataset pert = perturb_predictor(panel.data, "t2m", 7, tf, 19.0);
  const ScenarioDelta a = scenario_delta(*rep.model, panel.data, pert, 7);
  const ScenarioDelta b = scenario_delta(other, panel.data, pert, 7);
  for (std::size_t s = 0; s < 36; ++s) {
    if (std::isnan(a.spread_quantile.absolute[s])) {
      CHECK(std::isnan(b.spread_quantile.absolute[s]));
      continue;
    }
    CHECK(a.spread_quantile.absolute[s] == b.spread_quantile.absolute[s]);
  }
}

TEST_CASE("NaN-aware envelope") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Envelope e = nan_envelope({{1.0, nan}, {3.0, nan}, {nan, nan}});
  CHECK(e.median[0] == 2.0);
  CHECK(std::isnan(e.median[1]));
}
