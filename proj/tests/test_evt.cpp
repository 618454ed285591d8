#include <doctest.h>

#include <cmath>
#include <random>

#include "pinnburn/evt.hpp"

using namespace pinnburn;

namespace {

EmpiricalBulk example_bulk() {
  const std::vector<double> y{1, 2, 3, 4, 5, 6, 10, 12, 14, 20};
  const std::vector<double> u(10, 8.0);
  const std::vector<std::uint8_t> mask(10, 1);
  return EmpiricalBulk::build(y, u, mask);
}

const CellParameters kTail{0.5, 1.0, 0.6, 1.0, 0.5};

}  // namespace

TEST_CASE("gpd_cdf hand value and Monte Carlo oracle") {
  CHECK(std::abs(gpd_cdf(2.0, 1.0, 0.6, 1.0, 0.5) - 0.6625) < 1e-12);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double sigma_u = 1.5, xi = 0.5;
  std::size_t below = 0;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    const double excess = sigma_u / xi * (std::pow(1.0 - ud(rng), -xi) - 1.0);
    below += (1.0 + excess <= 2.0);
  }
  const double mc = 0.4 + 0.6 * static_cast<double>(below) / static_cast<double>(n);
  CHECK(std::abs(mc - gpd_cdf(2.0, 1.0, 0.6, 1.0, 0.5)) < 1e-3);
}

TEST_CASE("gpd boundary and heavy tail monotonicity") {
  CHECK(std::abs(gpd_cdf(1.0 + 1e-13, 1.0, 0.6, 1.0, 0.5) - 0.4) < 1e-12);
  double prev = 0.0;
  for (double y = 10; y < 1e9; y *= 10) {
    const double f = gpd_cdf(y, 1.0, 0.6, 1.0, 0.999);
    CHECK(f > prev);
    CHECK(f < 1.0);
    prev = f;
  }
}

TEST_CASE("gpd_quantile hand value and round trip") {
  CHECK(std::abs(gpd_quantile(0.9, 1.0, 0.6, 1.0, 0.5) - (1 + 3 * (std::sqrt(6.0) - 1))) < 1e-12);
  CHECK(std::abs(gpd_quantile(0.9, 1.0, 0.6, 1.0, 0.5) - 5.348) < 1e-3);
  CHECK(gpd_quantile(0.4, 1.0, 0.6, 1.0, 0.5) == 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double u = 10 * ud(rng), pu = 0.05 + 0.9 * ud(rng), sigma = 0.1 + 5 * ud(rng), xi = 0.01 + 0.9 * ud(rng);
    const double p = 1 - pu + pu * (0.01 + 0.98 * ud(rng));
    const double y = gpd_quantile(p, u, pu, sigma, xi);
    worst = std::max(worst, std::abs(gpd_cdf(y, u, pu, sigma, xi) - p));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("threshold stability") {
  // Raising the threshold to v with the matching exceedance probability leaves the tail unchanged.
  const double u = 1.0, pu = 0.6, sigma = 1.0, xi = 0.5;
  for (double v : {1.5, 3.0, 10.0}) {
    const double pv = 1.0 - gpd_cdf(v, u, pu, sigma, xi);
    for (double y : {v + 0.1, v + 2.0, v + 50.0})
      CHECK(std::abs(gpd_cdf(y, v, pv, sigma, xi) - gpd_cdf(y, u, pu, sigma, xi)) < 1e-12);
  }
}

TEST_CASE("empirical bulk hand count") {
  const EmpiricalBulk b = example_bulk();
  CHECK(b.n_nonexceedances == 6);
  CHECK(bulk_cdf(3.0, b, 0.4) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(bulk_cdf(0.5, b, 0.4) == 0.0);
  CHECK(bulk_cdf(6.0, b, 0.4) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("full cdf composition") {
  const EmpiricalBulk b = example_bulk();
  CHECK(std::abs(full_cdf(2.0, kTail, b) - 0.83125) < 1e-12);
  CellParameters none = kTail;
  none.p0 = 0.0;
  for (double y : {0.0, 0.5, 2.0, 100.0}) CHECK(full_cdf(y, none, b) == 1.0);
  CellParameters all = kTail;
  all.p0 = 1.0;
  for (double y : {0.5, 2.0, 100.0}) CHECK(full_cdf(y, all, b) == spread_cdf(y, all, b));
}

TEST_CASE("full quantile atom, tail round trip and monotonicity") {
  const EmpiricalBulk b = example_bulk();
  CHECK(full_quantile(0.3, kTail, b) == 0.0);
  CHECK(full_quantile(0.5, kTail, b) == 0.0);
  for (double p : {0.75, 0.9, 0.99}) {
    const double y = full_quantile(p, kTail, b);
    CHECK(y > kTail.u);
    CHECK(std::abs(full_cdf(y, kTail, b) - p) < 1e-9);
  }
  double prev = -1.0;
  for (double p = 0.01; p < 0.995; p += 0.01) {
    const double y = full_quantile(p, kTail, b);
    CHECK(y >= prev);
    prev = y;
  }
}

TEST_CASE("conditional spread quantile") {
  const EmpiricalBulk b = example_bulk();
  CHECK(conditional_spread_quantile(0.4, kTail, b) <= kTail.u);
  CHECK(std::abs(conditional_spread_quantile(0.9, kTail, b) - (1 + 3 * (std::sqrt(6.0) - 1))) < 1e-12);
  CHECK(conditional_spread_quantile(0.2, kTail, b) == 1.0);
}

TEST_CASE("exponential margins") {
  const EmpiricalBulk b = example_bulk();
  CellParameters half = kTail;
  half.pu = 0.5;
  CHECK(std::abs(exp_margin_transform(half.u, half, b) - std::log(2.0)) < 1e-15);
  CHECK(std::abs(exp_margin_transform(kTail.u, kTail, b) + std::log(kTail.pu)) < 1e-15);
  CHECK(std::isfinite(exp_margin_transform(1e300, kTail, b)));
}
