#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pinnburn/grid_data.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pinnburn_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Central finite-difference derivative.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

/// Small fully-observed dataset with `n_pred` Gaussian predictors.
inline pinnburn::GridDataset toy_dataset(int rows, int cols, int months, int n_pred, std::uint64_t seed) {
  pinnburn::GridDataset ds;
  ds.rows = rows;
  ds.cols = cols;
  ds.sites = pinnburn::make_regular_sites(rows, cols, 10.0, 45.0, 0.5);
  for (int t = 0; t < months; ++t) ds.times.push_back(t);
  const std::size_t n = ds.n_cells();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int p = 0; p < n_pred; ++p) {
    ds.predictor_names.push_back("x" + std::to_string(p + 1));
    ds.predictor_roles.push_back(p == 0 ? pinnburn::PredictorRole::interpreted
                                        : pinnburn::PredictorRole::noninterpreted);
    std::vector<double> f(n);
    for (auto& v : f) v = nd(rng);
    ds.predictors.push_back(std::move(f));
  }
  ds.burnable.assign(n, 100.0);
  ds.response.resize(n);
  for (auto& y : ds.response) y = ud(rng) < 0.5 ? 0.0 : 10.0 * ud(rng);
  ds.observed.assign(n, 1);
  return ds;
}

}  // namespace testutil
