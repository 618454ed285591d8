#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pinnburn/pinn.hpp"
#include "test_util.hpp"

using namespace pinnburn;

namespace {

GridDataset prepared(int n_pred = 3) {
  GridDataset ds = with_burnable_predictor(testutil::toy_dataset(3, 4, 4, n_pred, 17));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ud(0.0, 300.0);
  for (auto& l : ds.burnable) l = ud(rng);
  ds.predictors[ds.predictor_index(kBurnablePredictor)] = ds.burnable;
  return ds;
}

ParameterSurfaceModel model_for(SurfaceTarget target, const GridDataset& ds, std::vector<LayerSpec> layers,
                                std::vector<std::string> interpreted, std::uint64_t seed) {
  std::vector<std::string> raw_names;
  for (const auto& n : ds.predictor_names)
    if (n != kBurnablePredictor) raw_names.push_back(n);
  auto nonint = noninterpreted_for(target, raw_names, interpreted);
  std::vector<std::vector<double>> knots;
  for (const auto& name : interpreted) knots.push_back(place_knots(ds.predictors[ds.predictor_index(name)], 3));
  return make_surface_model(target, interpreted, nonint, layers, knots, seed);
}

void zero_parameters(ParameterSurfaceModel& m) { m.set_parameters(std::vector<double>(m.n_params(), 0.0)); }

}  // namespace

TEST_CASE("links and derivatives") {
  CHECK(apply_link(LinkKind::logistic, 0.0) == 0.5);
  CHECK(apply_link(LinkKind::exponential, 0.0) == 1.0);
  CHECK(link_derivative(LinkKind::logistic, apply_link(LinkKind::logistic, 0.0)) == 0.25);
  for (double x : {-3.0, 0.2, 4.0}) {
    const double fd = testutil::central_diff([](double v) { return apply_link(LinkKind::logistic, v); }, x);
    CHECK(std::abs(fd - link_derivative(LinkKind::logistic, apply_link(LinkKind::logistic, x))) < 1e-9);
  }
  CHECK(link_for(SurfaceTarget::p0) == LinkKind::logistic);
  CHECK(link_for(SurfaceTarget::sigma) == LinkKind::exponential);
  CHECK(offset_for(SurfaceTarget::pu) == OffsetMode::unit);
  CHECK(offset_for(SurfaceTarget::u) == OffsetMode::burnable);
}

TEST_CASE("unit-offset targets take burnable area as a predictor") {
  const std::vector<std::string> names{"a", "b", "c"};
  CHECK(noninterpreted_for(SurfaceTarget::p0, names, {"a"}) == std::vector<std::string>{"b", "c", kBurnablePredictor});
  CHECK(noninterpreted_for(SurfaceTarget::u, names, {}) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("presets follow the default architecture") {
  const auto p0 = preset_architecture(SurfaceTarget::p0, {"t2m"});
  CHECK(p0.layers.size() == 5);
  CHECK(p0.layers[0] == LayerSpec{LayerKind::conv3x3, 16});
  CHECK(p0.knots == 10);
  const auto u = preset_architecture(SurfaceTarget::u, {"t2m"});
  CHECK(u.layers.size() == 2);
  CHECK(u.layers[1] == LayerSpec{LayerKind::conv3x3, 4});
  CHECK(u.interpreted.empty());
  const auto pu = preset_architecture(SurfaceTarget::pu, {"t2m"});
  CHECK(pu.layers.size() == 5);
  CHECK(pu.layers[0] == LayerSpec{LayerKind::dense, 16});
  const auto sg = preset_architecture(SurfaceTarget::sigma, {"t2m"});
  CHECK(sg.layers.size() == 4);
  CHECK(sg.layers[0] == LayerSpec{LayerKind::dense, 10});
  CHECK(sg.knots == 6);
}

TEST_CASE("zero parameters give 0.5 for logistic and lambda for exponential") {
  const GridDataset ds = prepared();
  auto p0 = model_for(SurfaceTarget::p0, ds, {{LayerKind::conv3x3, 3}}, {"x1"}, 2);
  zero_parameters(p0);
  for (std::size_t t = 0; t < ds.n_times(); ++t)
    for (double v : eval_surface(p0, ds, t)) CHECK(v == 0.5);
  auto u = model_for(SurfaceTarget::u, ds, {{LayerKind::dense, 3}}, {}, 2);
  zero_parameters(u);
  for (std::size_t t = 0; t < ds.n_times(); ++t) {
    const auto th = eval_surface(u, ds, t);
    for (std::size_t s = 0; s < ds.n_sites(); ++s) CHECK(th[s] == ds.burnable[ds.cell(t, s)]);
  }
}

TEST_CASE("fully-NN models have no spline part") {
  const GridDataset ds = prepared();
  const auto m = model_for(SurfaceTarget::pu, ds, {{LayerKind::dense, 4}}, {}, 3);
  const SurfaceInputs in = gather_all(m, ds);
  const SurfaceEval ev = evaluate_surface(m, in);
  CHECK(ev.spline_part.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.spline.n_coefficients() == 0);
}

TEST_CASE("surface gradient matches finite differences") {
  const GridDataset ds = prepared();
  struct Case {
    SurfaceTarget target;
    std::vector<LayerSpec> layers;
    std::vector<std::string> interpreted;
  };
  const std::vector<Case> cases{
      {SurfaceTarget::p0, {{LayerKind::conv3x3, 3}, {LayerKind::conv3x3, 2}}, {"x1"}},
      {SurfaceTarget::u, {{LayerKind::conv3x3, 2}}, {}},
      {SurfaceTarget::pu, {{LayerKind::dense, 4}, {LayerKind::dense, 3}}, {}},
      {SurfaceTarget::sigma, {{LayerKind::dense, 4}}, {"x1", "x2"}},
  };
  for (const auto& c : cases) {
    auto m = model_for(c.target, ds, c.layers, c.interpreted, 9);
    auto params = m.parameters();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (auto& p : params) p += 0.05 * nd(rng);  // non-zero spline coefficients and biases
    m.set_parameters(params);
    const SurfaceInputs in = gather_all(m, ds);
    Eigen::VectorXd up(static_cast<Eigen::Index>(in.cells.size()));
    for (auto& v : up) v = nd(rng) / (c.target == SurfaceTarget::u || c.target == SurfaceTarget::sigma ? 100.0 : 1.0);
    const SurfaceEval ev = evaluate_surface(m, in, true);
    const auto grad = surface_gradient(m, in, ev, up);
    REQUIRE(grad.size() == m.n_params());
    auto objective = [&](const std::vector<double>& p) {
      ParameterSurfaceModel mm = m;
      mm.set_parameters(p);
      return evaluate_surface(mm, in).theta.dot(up);
    };
    int bad = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto pp = params, pm = params;
      const double h = 1e-5;
      pp[i] += h;
      pm[i] -= h;
      const double fp = objective(pp), fm = objective(pm), f0 = objective(params);
      if (std::abs((fp - f0) - (f0 - fm)) / h > 1e-3) continue;  // ReLU kink
      const double fd = (fp - fm) / (2 * h);
      if (testutil::rel_err(fd, grad[i]) >= 1e-5) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("zero burnable area contributes no gradient") {
  GridDataset ds = prepared();
  ds.burnable[5] = 0.0;
  ds.predictors[ds.predictor_index(kBurnablePredictor)][5] = 0.0;
  auto m = model_for(SurfaceTarget::sigma, ds, {{LayerKind::dense, 3}}, {"x1"}, 5);
  const std::vector<std::size_t> cells{5};
  const SurfaceInputs in = gather_cells(m, ds, cells);
  const SurfaceEval ev = evaluate_surface(m, in, true);
  CHECK(ev.theta(0) == 0.0);
  for (double g : surface_gradient(m, in, ev, Eigen::VectorXd::Ones(1))) CHECK(g == 0.0);
}

TEST_CASE("dense gather by cell agrees with the full gather") {
  const GridDataset ds = prepared();
  const auto m = model_for(SurfaceTarget::pu, ds, {{LayerKind::dense, 5}}, {}, 6);
  const SurfaceEval all = evaluate_surface(m, gather_all(m, ds));
  const std::vector<std::size_t> cells{0, 7, 13, 40};
  const SurfaceEval some = evaluate_surface(m, gather_cells(m, ds, cells));
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(some.theta(static_cast<Eigen::Index>(i)) == all.theta(static_cast<Eigen::Index>(cells[i])));
  const auto conv = model_for(SurfaceTarget::u, ds, {{LayerKind::conv3x3, 2}}, {}, 6);
  CHECK_THROWS(gather_cells(conv, ds, cells));
}
