#include <doctest.h>

#include <cmath>

#include "pinnburn/partition.hpp"
#include "test_util.hpp"

using namespace pinnburn;

TEST_CASE("great-circle distance") {
  CHECK(great_circle_km(0, 0, 0, 0) == 0.0);
  CHECK(std::abs(great_circle_km(0, 0, 1, 0) - 6371.0 * M_PI / 180.0) < 1e-9);
  CHECK(std::abs(great_circle_km(10, 45, 11, 46) - great_circle_km(11, 46, 10, 45)) < 1e-12);
}

TEST_CASE("derived seeds differ by stream and repeat") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("GP has unit variance and exp(-1) correlation at 240 km") {
  const double dlon = 240.0 / 6371.0 * 180.0 / M_PI;
  const std::vector<SiteIndex> sites{{0, 0, 0.0, 0.0}, {0, 1, dlon, 0.0}};
  REQUIRE(std::abs(great_circle_km(0, 0, dlon, 0) - 240.0) < 1e-9);
  SeparableGpSampler gp(sites, 240.0, 5.0);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  const int n = 2000;
  for (int r = 0; r < n; ++r) {
    const auto z = gp.sample(1, derive_seed(77, r));
    sa += z[0];
    sb += z[1];
    saa += z[0] * z[0];
    sbb += z[1] * z[1];
    sab += z[0] * z[1];
  }
  const double ma = sa / n, mb = sb / n;
  const double va = saa / n - ma * ma, vb = sbb / n - mb * mb;
  const double r = (sab / n - ma * mb) / std::sqrt(va * vb);
  CHECK(std::abs(r - std::exp(-1.0)) < 0.05);
  CHECK(std::abs(va - 1.0) < 0.1);
  CHECK(std::abs(vb - 1.0) < 0.1);
}

TEST_CASE("GP temporal correlation follows the month range") {
  const std::vector<SiteIndex> sites{{0, 0, 0.0, 0.0}};
  SeparableGpSampler gp(sites, 240.0, 5.0);
  double s01 = 0, s00 = 0;
  const int n = 4000;
  for (int r = 0; r < n; ++r) {
    const auto z = gp.sample(3, derive_seed(5, r));
    s01 += z[0] * z[1];
    s00 += z[0] * z[0];
  }
  CHECK(std::abs(s00 / n - 1.0) < 0.06);
  CHECK(std::abs(s01 / n - std::exp(-1.0 / 5.0)) < 0.06);
}

TEST_CASE("tiny ranges give independent cells") {
  const auto sites = make_regular_sites(5, 5, 0.0, 45.0, 0.25);
  SeparableGpSampler gp(sites, 1e-3, 1e-3);
  double sxy = 0, sxx = 0;
  for (int r = 0; r < 200; ++r) {
    const auto z = gp.sample(2, derive_seed(3, r));
    for (std::size_t k = 0; k + 1 < z.size(); ++k) {
      sxy += z[k] * z[k + 1];
      sxx += z[k] * z[k];
    }
  }
  CHECK(std::abs(sxy / sxx) < 0.05);
}

TEST_CASE("jittered Cholesky handles a singular matrix") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(3, 3);
  const Eigen::MatrixXd L = jittered_cholesky(c);
  CHECK((L * L.transpose() - c).cwiseAbs().maxCoeff() < 1e-5);
}

namespace {

// Type-7 order-statistic counts strictly below the lower and above the upper quantile.
std::pair<std::size_t, std::size_t> expected_counts(std::size_t n) {
  const double h_lo = (static_cast<double>(n) - 1) * 0.1, h_hi = (static_cast<double>(n) - 1) * 0.9;
  return {static_cast<std::size_t>(std::ceil(h_lo)), n - 1 - static_cast<std::size_t>(std::floor(h_hi))};
}

}  // namespace

TEST_CASE("per-block split counts follow the quantile convention") {
  GridDataset ds = testutil::toy_dataset(6, 7, 10, 1, 2);
  for (std::size_t c = 0; c < ds.n_cells(); c += 11) ds.observed[c] = 0;
  PartitionSpec spec;
  spec.seed = 4;
  const PartitionAssignment part = assign_partition(ds, spec);
  for (std::size_t t0 = 0; t0 < ds.n_times(); t0 += 3) {
    const std::size_t nt = std::min<std::size_t>(3, ds.n_times() - t0);
    std::size_t n = 0, v = 0, te = 0, tr = 0;
    for (std::size_t k = 0; k < nt * ds.n_sites(); ++k) {
      const std::size_t c = t0 * ds.n_sites() + k;
      if (!ds.observed[c]) {
        CHECK(part.split[c] == Split::none);
        continue;
      }
      ++n;
      v += part.split[c] == Split::validation;
      te += part.split[c] == Split::test;
      tr += part.split[c] == Split::train;
    }
    const auto [ev, et] = expected_counts(n);
    CHECK(v == ev);
    CHECK(te == et);
    CHECK(tr == n - ev - et);
  }
  CHECK(part == assign_partition(ds, spec));
  spec.seed = 5;
  CHECK_FALSE(part == assign_partition(ds, spec));
}

TEST_CASE("partition file round trip") {
  const GridDataset ds = testutil::toy_dataset(4, 4, 6, 1, 3);
  const PartitionAssignment part = assign_partition(ds, {});
  const auto dir = testutil::fresh_dir("part_rt");
  write_partition(ds, part, dir / "p.csv");
  CHECK(read_partition(ds, dir / "p.csv") == part);
}

TEST_CASE("invalid partition specs are rejected") {
  PartitionSpec s;
  s.lower = 0.6;
  s.upper = 0.5;
  CHECK_THROWS(s.validate());
  PartitionSpec z;
  z.block_months = 0;
  CHECK_THROWS(z.validate());
}
