#include "pinnburn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "pinnburn/spline.hpp"

namespace pinnburn {

double great_circle_km(double lon1, double lat1, double lon2, double lat2) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * deg;
  const double dlon = (lon2 - lon1) * deg;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * deg) * std::cos(lat2 * deg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (stream + 0x632be59bd9b4e019ULL));
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& corr) {
  for (double jitter = 1e-9; jitter <= 1e-6 * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd m = corr;
    m.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw std::runtime_error("correlation matrix is not positive definite even with jitter 1e-6");
}

SeparableGpSampler::SeparableGpSampler(std::vector<SiteIndex> sites, double range_s_km, double range_t_months)
    : sites_(std::move(sites)), range_s_(range_s_km), range_t_(range_t_months) {
  if (!(range_s_ > 0.0) || !(range_t_ > 0.0)) throw std::invalid_argument("GP ranges must be positive");
  const auto n = static_cast<Eigen::Index>(sites_.size());
  Eigen::MatrixXd corr(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    corr(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& a = sites_[static_cast<std::size_t>(i)];
      const auto& b = sites_[static_cast<std::size_t>(j)];
      corr(i, j) = corr(j, i) = std::exp(-great_circle_km(a.lon, a.lat, b.lon, b.lat) / range_s_);
    }
  }
  spatial_factor_ = jittered_cholesky(corr);
}

const Eigen::MatrixXd& SeparableGpSampler::temporal_factor(std::size_t n_times) {
  auto it = temporal_factors_.find(n_times);
  if (it != temporal_factors_.end()) return it->second;
  const auto n = static_cast<Eigen::Index>(n_times);
  Eigen::MatrixXd corr(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) corr(i, j) = std::exp(-std::abs(static_cast<double>(i - j)) / range_t_);
  return temporal_factors_.emplace(n_times, jittered_cholesky(corr)).first->second;
}

std::vector<double> SeparableGpSampler::sample(std::size_t n_times, std::uint64_t seed) {
  const Eigen::MatrixXd& lt = temporal_factor(n_times);
  const auto ns = static_cast<Eigen::Index>(sites_.size());
  const auto nt = static_cast<Eigen::Index>(n_times);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd e(ns, nt);
  for (Eigen::Index t = 0; t < nt; ++t)
    for (Eigen::Index s = 0; s < ns; ++s) e(s, t) = normal(rng);
  // Z = L_s E L_t^T has covariance kron(R_t, R_s) when vectorized column-wise.
  const Eigen::MatrixXd z = spatial_factor_.triangularView<Eigen::Lower>() * e * lt.transpose();
  std::vector<double> out(static_cast<std::size_t>(ns * nt));
  for (Eigen::Index t = 0; t < nt; ++t)
    for (Eigen::Index s = 0; s < ns; ++s) out[static_cast<std::size_t>(t * ns + s)] = z(s, t);
  return out;
}

std::vector<double> simulate_separable_gp(const std::vector<SiteIndex>& sites, std::size_t n_times,
                                          double range_s_km, double range_t_months, std::uint64_t seed) {
  SeparableGpSampler sampler(sites, range_s_km, range_t_months);
  return sampler.sample(n_times, seed);
}

void PartitionSpec::validate() const {
  if (!(range_s_km > 0.0) || !(range_t_months > 0.0)) throw std::invalid_argument("partition ranges must be positive");
  if (!(lower > 0.0 && upper < 1.0 && lower < upper))
    throw std::invalid_argument("partition cutoffs must satisfy 0 < lower < upper < 1");
  if (block_months < 1) throw std::invalid_argument("partition block length must be >= 1");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::none: return "none";
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  if (s == "none") return Split::none;
  throw std::invalid_argument("unknown split '" + s + "'");
}

std::size_t PartitionAssignment::count(Split s) const {
  return static_cast<std::size_t>(std::count(split.begin(), split.end(), s));
}

std::vector<std::uint8_t> PartitionAssignment::mask(Split s) const {
  std::vector<std::uint8_t> m(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) m[i] = split[i] == s ? 1 : 0;
  return m;
}

PartitionAssignment assign_partition(const GridDataset& ds, const PartitionSpec& spec) {
  spec.validate();
  PartitionAssignment out;
  out.split.assign(ds.n_cells(), Split::none);
  SeparableGpSampler sampler(ds.sites, spec.range_s_km, spec.range_t_months);
  const std::size_t ns = ds.n_sites();
  std::size_t block_index = 0;
  for (std::size_t t0 = 0; t0 < ds.n_times(); t0 += spec.block_months, ++block_index) {
    const std::size_t nt = std::min(spec.block_months, ds.n_times() - t0);
    const std::vector<double> z = sampler.sample(nt, derive_seed(spec.seed, block_index));
    std::vector<double> observed_z;
    for (std::size_t k = 0; k < nt * ns; ++k)
      if (ds.observed[t0 * ns + k]) observed_z.push_back(z[k]);
    if (observed_z.empty())
      throw std::runtime_error("partition block starting at time position " + std::to_string(t0) +
                               " has no observed cells");
    if (observed_z.size() < 10)
      throw std::runtime_error("partition block starting at time position " + std::to_string(t0) +
                               " has fewer than 10 observed cells");
    const double q_lo = empirical_quantile(observed_z, spec.lower);
    const double q_hi = empirical_quantile(observed_z, spec.upper);
    for (std::size_t k = 0; k < nt * ns; ++k) {
      const std::size_t c = t0 * ns + k;
      if (!ds.observed[c]) continue;
      out.split[c] = z[k] < q_lo ? Split::validation : (z[k] > q_hi ? Split::test : Split::train);
    }
  }
  return out;
}

void write_partition(const GridDataset& ds, const PartitionAssignment& part, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write partition file " + path.string());
  out << "site_row,site_col,time,split\n";
  for (std::size_t t = 0; t < ds.n_times(); ++t)
    for (std::size_t s = 0; s < ds.n_sites(); ++s) {
      const Split sp = part.split[ds.cell(t, s)];
      if (sp == Split::none) continue;
      out << ds.sites[s].row << ',' << ds.sites[s].col << ',' << t << ',' << to_string(sp) << '\n';
    }
}

PartitionAssignment read_partition(const GridDataset& ds, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open partition file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "site_row,site_col,time,split") throw std::runtime_error("bad partition header in " + path.string());
  PartitionAssignment part;
  part.split.assign(ds.n_cells(), Split::none);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& x : f) std::getline(ls, x, ',');
    const int row = std::stoi(f[0]), col = std::stoi(f[1]);
    const auto t = static_cast<std::size_t>(std::stoul(f[2]));
    if (row < 0 || row >= ds.rows || col < 0 || col >= ds.cols || t >= ds.n_times())
      throw std::runtime_error("partition row out of range: " + line);
    part.split[ds.cell(t, static_cast<std::size_t>(row * ds.cols + col))] = split_from_string(f[3]);
  }
  return part;
}

}  // namespace pinnburn
