#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pinnburn/objectives.hpp"
#include "test_util.hpp"

using namespace pinnburn;

namespace {
const std::vector<std::uint8_t> kAll(64, 1);
std::span<const std::uint8_t> ones(std::size_t n) { return {kAll.data(), n}; }
}  // namespace

TEST_CASE("Bernoulli hand values") {
  const std::vector<double> p{0.9, 0.2}, z{1, 0};
  const auto l = bernoulli_loss(p, z, ones(2));
  CHECK(std::abs(l.total - (-std::log(0.9) - std::log(0.8))) < 1e-14);
  CHECK(std::abs(l.total - 0.3285) < 1e-4);
  CHECK(l.n_contributing == 2);

  const std::vector<double> half(10, 0.5), zz{0, 1, 1, 0, 1, 0, 0, 0, 1, 1};
  CHECK(std::abs(bernoulli_loss(half, zz, ones(10)).total - 10 * std::log(2.0)) < 1e-12);

  const std::vector<double> near{1 - 1e-9, 1e-9};
  CHECK(bernoulli_loss(near, z, ones(2)).total < 1e-8);
}

TEST_CASE("Bernoulli floor is counted") {
  const std::vector<double> p{1.0, 0.5}, z{0, 1};
  const auto l = bernoulli_loss(p, z, ones(2));
  CHECK(l.clamped == 1);
  CHECK(std::isfinite(l.total));
}

TEST_CASE("confident correct Bernoulli predictions do not count as floored") {
  const std::vector<double> p{0.0, 1.0}, z{0, 1};
  const auto l = bernoulli_loss(p, z, ones(2));
  CHECK(l.clamped == 0);
  CHECK(l.total == 0.0);
}

TEST_CASE("quantile loss hand values") {
  const std::vector<double> u{3.0}, y{3.0};
  CHECK(quantile_loss(u, y, 0.4, ones(1)).total == 0.0);
  const std::vector<double> u2{1.0}, y2{3.0};
  CHECK(quantile_loss(u2, y2, 0.5, ones(1)).total == 1.0);
  const std::vector<double> u3{4.0}, y3{1.0};
  CHECK(std::abs(quantile_loss(u3, y3, 0.4, ones(1)).total - 1.8) < 1e-15);
  const std::vector<double> u4{1.0}, y4{0.0};
  CHECK(quantile_loss(u4, y4, 0.4, ones(1)).n_contributing == 0);
}

TEST_CASE("GPD NLL hand value and density oracle") {
  const std::vector<double> y{2.0}, u{1.0}, sigma{0.5};  // sigma_u = 0.5 + 0.5 * 1 = 1
  const auto l = gpd_nll(y, u, sigma, 0.5, ones(1));
  CHECK(std::abs(l.total - 3.0 * std::log(1.5)) < 1e-14);
  CHECK(std::abs(l.total - 1.2164) < 1e-4);
  // The density exp(-nll) integrates to one over the exceedance range.
  auto dens = [&](double e) {
    const std::vector<double> yy{1.0 + e};
    return std::exp(-gpd_nll(yy, u, sigma, 0.5, ones(1)).total);
  };
  const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      dens, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
  CHECK(std::abs(mass - 1.0) < 1e-8);
  const std::vector<double> y0{1.0 + 1e-14};
  CHECK(std::abs(gpd_nll(y0, u, sigma, 0.5, ones(1)).total) < 1e-12);
}

TEST_CASE("shape parameterization") {
  CHECK(shape_from_raw(0.0) == 0.5);
  CHECK(shape_from_raw(-50.0) < 1e-20);
  CHECK(shape_from_raw(30.0) < 1.0);
  CHECK(std::abs(raw_from_shape(shape_from_raw(1.3)) - 1.3) < 1e-12);
  CHECK(std::abs(testutil::central_diff(shape_from_raw, 0.7) - shape_raw_derivative(0.7)) < 1e-9);
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const std::size_t n = 24;
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> p(n), z(n), u(n), y(n), sigma(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.05 + 0.9 * ud(rng);
      z[i] = ud(rng) < 0.5 ? 0.0 : 1.0;
      u[i] = 0.5 + 2 * ud(rng);
      y[i] = ud(rng) < 0.2 ? 0.0 : 5 * ud(rng);
      sigma[i] = 0.2 + ud(rng);
      mask[i] = ud(rng) < 0.85;
    }
    const double xi = 0.05 + 0.9 * ud(rng);
    const double tau = 0.1 + 0.8 * ud(rng);

    std::vector<double> gp(n), gu(n), gs(n), gu2(n);
    double gxi = 0.0;
    bernoulli_loss(p, z, mask, gp);
    quantile_loss(u, y, tau, mask, gu);
    gpd_nll(y, u, sigma, xi, mask, {gs, gu2, &gxi});
    for (std::size_t i = 0; i < n; ++i) {
      auto bump = [&](std::vector<double>& v, auto&& f) {
        const double o = v[i];
        v[i] = o + h;
        const double fp = f();
        v[i] = o - h;
        const double fm = f();
        v[i] = o;
        return (fp - fm) / (2 * h);
      };
      CHECK(testutil::rel_err(bump(p, [&] { return bernoulli_loss(p, z, mask).total; }), gp[i]) < 1e-5);
      if (std::abs(y[i] - u[i]) > 1e-4)
        CHECK(testutil::rel_err(bump(u, [&] { return quantile_loss(u, y, tau, mask).total; }), gu[i]) < 1e-5);
      CHECK(testutil::rel_err(bump(sigma, [&] { return gpd_nll(y, u, sigma, xi, mask).total; }), gs[i]) < 1e-5);
      if (std::abs(y[i] - u[i]) > 1e-4)
        CHECK(testutil::rel_err(bump(u, [&] { return gpd_nll(y, u, sigma, xi, mask).total; }), gu2[i]) < 1e-5);
    }
    const double fd_xi = testutil::central_diff([&](double x) { return gpd_nll(y, u, sigma, x, mask).total; }, xi, h);
    CHECK(testutil::rel_err(fd_xi, gxi) < 1e-5);
  }
}

TEST_CASE("masked cells are inert") {
  std::vector<double> p{0.3, 0.6, 0.8}, z{1, 0, 1}, u{1, 1, 1}, y{2, 0.5, 3}, s{1, 1, 1};
  const std::vector<std::uint8_t> mask{1, 0, 1};
  const auto b = bernoulli_loss(p, z, mask);
  const auto q = quantile_loss(u, y, 0.4, mask);
  const auto g = gpd_nll(y, u, s, 0.3, mask);
  p[1] = 0.999;
  z[1] = 1;
  y[1] = 50;
  u[1] = 0.1;
  s[1] = 9;
  std::vector<double> gp(3), gu(3), gs(3);
  CHECK(bernoulli_loss(p, z, mask, gp).total == b.total);
  CHECK(quantile_loss(u, y, 0.4, mask, gu).total == q.total);
  CHECK(gpd_nll(y, u, s, 0.3, mask, {gs, {}, nullptr}).total == g.total);
  CHECK(gp[1] == 0.0);
  CHECK(gu[1] == 0.0);
  CHECK(gs[1] == 0.0);
}

TEST_CASE("invalid inputs raise") {
  const std::vector<double> y{2.0}, u{1.0}, s{-1.0};
  CHECK_THROWS_AS(gpd_nll(y, u, s, 0.3, ones(1)), LossError);
  const std::vector<double> p{0.5, 0.5}, z{1};
  CHECK_THROWS(bernoulli_loss(p, z, ones(2)));
}
