#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "pinnburn/fit_pipeline.hpp"
#include "pinnburn/synth.hpp"

using namespace pinnburn;

namespace {

FitConfig small_config(int epochs = 15) {
  FitConfig cfg;
  cfg.epochs = epochs;
  cfg.adam.learning_rate = 0.01;
  const std::vector<std::string> interp{"t2m", "vpd"};
  cfg.architectures[SurfaceTarget::p0] = {{{LayerKind::conv3x3, 3}}, interp, 3};
  cfg.architectures[SurfaceTarget::u] = {{{LayerKind::conv3x3, 2}}, {}, 0};
  cfg.architectures[SurfaceTarget::pu] = {{{LayerKind::dense, 4}}, {}, 0};
  cfg.architectures[SurfaceTarget::sigma] = {{{LayerKind::dense, 4}}, interp, 3};
  return cfg;
}

const SyntheticPanel& panel() {
  static const SyntheticPanel p = generate(default_generator(8, 8, 36, 3));
  return p;
}

}  // namespace

TEST_CASE("bootstrap resample always has the panel length") {
  for (std::size_t n : {1u, 7u, 120u})
    for (double k : {1.0, 2.0, 5.5, 50.0})
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pos = stationary_bootstrap_resample(n, k, seed);
        CHECK(pos.size() == n);
        for (auto p : pos) CHECK(p < n);
      }
}

TEST_CASE("blocks are consecutive months with wrap-around") {
  const std::size_t n = 30;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto blocks = stationary_bootstrap_blocks(n, 4.0, seed);
    const auto pos = stationary_bootstrap_resample(n, 4.0, seed);
    std::size_t i = 0;
    for (const auto& b : blocks) {
      CHECK(b.length >= 1);
      for (std::size_t k = 0; k < b.length && i < n; ++k, ++i) CHECK(pos[i] == (b.start + k) % n);
    }
    CHECK(i == n);
  }
}

TEST_CASE("expected block length one gives iid months") {
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (const auto& b : stationary_bootstrap_blocks(50, 1.0, seed)) CHECK(b.length == 1);
}

TEST_CASE("mean block length matches the geometric mean") {
  double total = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; count < 100000; ++seed)
    for (const auto& b : stationary_bootstrap_blocks(1000, 2.0, seed)) {
      if (count == 100000) break;
      total += static_cast<double>(b.length);
      ++count;
    }
  CHECK(std::abs(total / static_cast<double>(count) - 2.0) < 0.02);
}

TEST_CASE("pointwise envelope uses type-7 quantiles") {
  const std::vector<std::vector<double>> fields{{1, 10}, {2, 20}, {3, 30}, {4, 40}, {5, 50}};
  const Envelope e = pointwise_envelope(fields, 0.25, 0.75);
  CHECK(e.median == std::vector<double>{3, 30});
  CHECK(e.lower == std::vector<double>{2, 20});
  CHECK(e.upper == std::vector<double>{4, 40});
}

TEST_CASE("full fit is deterministic and recovers a plausible shape") {
  const GridDataset& raw = panel().data;
  const FitConfig cfg = small_config();
  PartitionSpec ps;
  ps.seed = 9;
  const PartitionAssignment part = assign_partition(raw, ps);
  const FitResult a = fit_full_model(raw, part, cfg, 42);
  const FitResult b = fit_full_model(raw, part, cfg, 42);
  CHECK(a.model == b.model);
  CHECK(a.logs.sigma.validation_loss == b.logs.sigma.validation_loss);
  CHECK(a.model.xi > 0.0);
  CHECK(a.model.xi < 1.0);
  CHECK(a.logs.p0.train_loss.size() == 15);
  const ParameterFields f = predict_fields(a.model, raw);
  for (std::size_t c = 0; c < raw.n_cells(); ++c) {
    CHECK(f.p0[c] >= 0.0);
    CHECK(f.p0[c] <= 1.0);
    if (raw.burnable[c] > 0) CHECK(f.sigma[c] > 0.0);
  }
}

TEST_CASE("test cells do not influence the fit") {
  GridDataset raw = panel().data;
  const FitConfig cfg = small_config(8);
  const PartitionAssignment part = assign_partition(raw, {});
  const FitResult a = fit_full_model(raw, part, cfg, 5);
  // Standardization uses every observed cell, so hold the predictors fixed and
  // change only test-cell responses.
  for (std::size_t c = 0; c < raw.n_cells(); ++c)
    if (part.split[c] == Split::test && raw.observed[c]) raw.response[c] = raw.response[c] > 0 ? 0.0 : 0.5;
  const FitResult b = fit_full_model(raw, part, cfg, 5);
  CHECK(a.model.p0 == b.model.p0);
  CHECK(a.model.u == b.model.u);
  CHECK(a.model.pu == b.model.pu);
  CHECK(a.model.sigma == b.model.sigma);
  CHECK(a.model.xi == b.model.xi);
}

TEST_CASE("replicates are reproducible from their index") {
  FitConfig cfg = small_config(5);
  cfg.n_replicates = 1;
  const GridDataset& raw = panel().data;
  const Replicate r1 = run_replicate(raw, cfg, 0);
  const Replicate r2 = run_replicate(raw, cfg, 0);
  REQUIRE(r1.ok());
  CHECK(*r1.model == *r2.model);
  CHECK(r1.time_positions == r2.time_positions);
  CHECK(r1.partition == r2.partition);
  const BootstrapEnsemble ens = run_ensemble(raw, cfg);
  REQUIRE(ens.replicates.size() == 1);
  CHECK(*ens.replicates[0].model == *r1.model);
  const ParameterFields f = predict_fields(*r1.model, raw);
  const Envelope e = pointwise_envelope({f.sigma});
  CHECK(e.median == f.sigma);
}

TEST_CASE("config validation") {
  FitConfig cfg;
  cfg.tau = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.block_length = 0.5;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("uniform burnable area is centered rather than rejected") {
  GridDataset raw = panel().data;
  for (std::size_t c = 0; c < raw.n_cells(); ++c)
    if (raw.burnable[c] > 0.0) raw.burnable[c] = 4.0;
  const PreparedData prep = prepare_training_data(raw);
  const std::size_t b = prep.ds.predictor_index(kBurnablePredictor);
  for (std::size_t c = 0; c < prep.ds.n_cells(); ++c)
    if (prep.ds.observed[c]) CHECK(prep.ds.predictors[b][c] == 0.0);
  CHECK(prep.spec.sd[prep.spec.index_of(kBurnablePredictor)] == 1.0);

  raw.predictors[0].assign(raw.n_cells(), 2.0);
  CHECK_THROWS_AS(prepare_training_data(raw), DataError);
}
