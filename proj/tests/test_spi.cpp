#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "pinnburn/grid_data.hpp"

using namespace pinnburn;

TEST_CASE("constant precipitation maps to SPI 0") {
  const std::size_t nt = 12 * 25;
  std::vector<double> p(nt, 42.0);
  const SpiResult r = compute_spi(p, 1, nt, 1, 3);
  CHECK(std::isnan(r.values[0]));
  CHECK(std::isnan(r.values[1]));
  for (std::size_t t = 2; t < nt; ++t) CHECK(std::abs(r.values[t]) < 1e-9);
}

TEST_CASE("all-zero precipitation leaves SPI missing") {
  const std::size_t nt = 12 * 25;
  std::vector<double> p(nt, 0.0);
  const SpiResult r = compute_spi(p, 1, nt, 1, 3);
  for (double v : r.values) CHECK(std::isnan(v));
}

TEST_CASE("group median maps near 0 and groups are standardized") {
  const std::size_t ns = 1, nt = 12 * 1000;
  std::mt19937_64 rng(4);
  std::gamma_distribution<double> g(2.0, 30.0);
  std::vector<double> p(ns * nt);
  for (auto& v : p) v = g(rng);
  const SpiResult r = compute_spi(p, ns, nt, 3, 3);
  CHECK(r.warnings.empty());
  const boost::math::normal_distribution<double> nd;
  for (int m = 0; m < 12; ++m) {
    std::vector<std::pair<double, double>> group;  // (window sum, spi)
    for (std::size_t t = 2; t < nt; ++t) {
      if ((static_cast<int>(t) + 2) % 12 != m) continue;
      group.emplace_back(p[t] + p[t - 1] + p[t - 2], r.values[t]);
    }
    double mean = 0, var = 0;
    for (const auto& g2 : group) mean += g2.second;
    mean /= static_cast<double>(group.size());
    for (const auto& g2 : group) var += (g2.second - mean) * (g2.second - mean);
    var /= static_cast<double>(group.size() - 1);
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 0.1);
    // Empirical-quantile oracle: rank of the median sum mapped through the normal quantile.
    std::sort(group.begin(), group.end());
    const std::size_t mid = group.size() / 2;
    const double oracle =
        boost::math::quantile(nd, (static_cast<double>(mid) + 0.5) / static_cast<double>(group.size()));
    CHECK(std::abs(group[mid].second - oracle) < 0.15);
    CHECK(std::abs(group[mid].second) < 0.15);
  }
}

TEST_CASE("zeros become a point mass") {
  const std::size_t nt = 12 * 30;
  std::mt19937_64 rng(8);
  std::gamma_distribution<double> g(1.5, 10.0);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> p(nt);
  for (auto& v : p) v = u(rng) < 0.3 ? 0.0 : g(rng);
  const SpiResult r = compute_spi(p, 1, nt, 1, 1);
  double zero_spi = NAN;
  for (std::size_t t = 0; t < nt; ++t)
    if (p[t] == 0.0 && t % 12 == 0) {
      if (std::isnan(zero_spi)) zero_spi = r.values[t];
      CHECK(r.values[t] == zero_spi);
    }
  for (std::size_t t = 0; t < nt; ++t)
    if (t % 12 == 0 && p[t] > 0.0) CHECK(r.values[t] > zero_spi);
}

TEST_CASE("SPI input validation") {
  std::vector<double> p(10, 1.0);
  CHECK_THROWS(compute_spi(p, 1, 10, 1, 0));
  CHECK_THROWS(compute_spi(p, 2, 10, 1, 1));
  CHECK_THROWS(compute_spi(p, 1, 10, 1, 1));  // fewer than 20 values per group
}
