#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnburn/grid_data.hpp"

namespace pinnburn {

/// Great-circle distance in km (haversine, Earth radius 6371 km).
double great_circle_km(double lon1, double lat1, double lon2, double lat2);

/// Deterministic 64-bit seed derivation (splitmix64 over the pair).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Draws realizations of a zero-mean unit-variance Gaussian process with
/// correlation exp(-d_km / range_s) * exp(-|dt| / range_t). The spatial factor
/// is computed once; temporal factors are cached per block length.
class SeparableGpSampler {
 public:
  SeparableGpSampler(std::vector<SiteIndex> sites, double range_s_km, double range_t_months);

  /// Field of n_sites * n_times values, time-major.
  std::vector<double> sample(std::size_t n_times, std::uint64_t seed);

  std::size_t n_sites() const { return sites_.size(); }

 private:
  const Eigen::MatrixXd& temporal_factor(std::size_t n_times);

  std::vector<SiteIndex> sites_;
  double range_s_;
  double range_t_;
  Eigen::MatrixXd spatial_factor_;
  std::map<std::size_t, Eigen::MatrixXd> temporal_factors_;
};

/// Lower Cholesky factor of a correlation matrix, escalating a diagonal
/// jitter from 1e-9 to 1e-6; throws if factorization still fails.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& corr);

/// One realization over `sites` x `n_times` months (time-major).
std::vector<double> simulate_separable_gp(const std::vector<SiteIndex>& sites, std::size_t n_times,
                                          double range_s_km, double range_t_months, std::uint64_t seed);

struct PartitionSpec {
  double range_s_km = 240.0;
  double range_t_months = 5.0;
  std::size_t block_months = 3;
  double lower = 0.1;
  double upper = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class Split : std::uint8_t { none = 0, train = 1, validation = 2, test = 3 };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct PartitionAssignment {
  std::vector<Split> split;  // per cell; none for masked cells

  std::size_t count(Split s) const;
  /// 1 where split == s.
  std::vector<std::uint8_t> mask(Split s) const;
  bool operator==(const PartitionAssignment&) const = default;
};

/// Per consecutive block of `block_months` time positions, simulates the GP and
/// sends observed cells below the block's lower type-7 quantile to
/// validation and above the upper quantile to test.
PartitionAssignment assign_partition(const GridDataset& ds, const PartitionSpec& spec);

/// Writes `site_row,site_col,time,split` rows for every assigned cell.
void write_partition(const GridDataset& ds, const PartitionAssignment& part, const std::filesystem::path& path);
/// Reads a partition written by write_partition for the same dataset layout.
PartitionAssignment read_partition(const GridDataset& ds, const std::filesystem::path& path);

}  // namespace pinnburn
