#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pinnburn {

/// Raised for malformed input files and violated dataset invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SiteIndex {
  int row = 0;
  int col = 0;
  double lon = 0.0;
  double lat = 0.0;
};

enum class PredictorRole { interpreted, noninterpreted };

std::string to_string(PredictorRole role);
PredictorRole predictor_role_from_string(const std::string& s);

/// Sites x months panel. Cells are stored time-major: cell = t * n_sites + site,
/// with sites in row-major grid order (site = row * cols + col).
struct GridDataset {
  int rows = 0;
  int cols = 0;
  int start_year = 2001;
  int start_month = 1;  // calendar month (1..12) of month index 0
  std::vector<SiteIndex> sites;
  /// Month index per time position. A bootstrap resample keeps the original
  /// month indices, so positions and month indices can differ.
  std::vector<int> times;
  std::vector<double> response;  // km^2; NaN where missing
  std::vector<double> burnable;  // km^2
  std::vector<std::string> predictor_names;
  std::vector<PredictorRole> predictor_roles;
  std::vector<std::vector<double>> predictors;  // [predictor][cell]
  std::vector<std::uint8_t> observed;           // 1 = observed, 0 = missing

  std::size_t n_sites() const { return sites.size(); }
  std::size_t n_times() const { return times.size(); }
  std::size_t n_cells() const { return n_sites() * n_times(); }
  std::size_t cell(std::size_t time_pos, std::size_t site) const { return time_pos * n_sites() + site; }
  std::size_t n_observed() const;

  /// Index of a named predictor; throws DataError if absent.
  std::size_t predictor_index(const std::string& name) const;
  bool has_predictor(const std::string& name) const;

  int calendar_month(std::size_t time_pos) const;  // 1..12
  int year(std::size_t time_pos) const;
};

/// Checks every dataset invariant and masks cells with zero burnable area.
/// Throws DataError naming the first offending (site, time).
void validate_and_mask(GridDataset& ds);

/// Builds the regular grid of sites with the given spacing in degrees.
std::vector<SiteIndex> make_regular_sites(int rows, int cols, double lon0, double lat0, double spacing_deg);

/// Reads the long-format data file plus its JSON manifest.
GridDataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& manifest_path);

/// Writes the data file and manifest in the format read by load_dataset.
/// Doubles are written with 17 significant digits so the round trip is exact.
void write_dataset(const GridDataset& ds, const std::filesystem::path& data_path,
                   const std::filesystem::path& manifest_path);

struct StandardizationSpec {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> sd;

  std::size_t index_of(const std::string& name) const;
  double apply(std::size_t i, double x) const { return (x - mean[i]) / sd[i]; }
  double invert(std::size_t i, double z) const { return z * sd[i] + mean[i]; }
  bool operator==(const StandardizationSpec&) const = default;
};

/// Standardizes every predictor to mean 0 / population sd 1 over observed
/// cells. Response, burnable area and mask are untouched.
std::pair<GridDataset, StandardizationSpec> standardize(const GridDataset& ds);

/// Applies an existing spec (matched by predictor name) to a raw dataset.
GridDataset apply_standardization(const GridDataset& ds, const StandardizationSpec& spec);

/// Inverse of apply_standardization.
GridDataset invert_standardization(const GridDataset& ds, const StandardizationSpec& spec);

/// Name of the derived predictor that carries burnable area into unit-offset models.
inline constexpr const char* kBurnablePredictor = "burnable";

/// Returns a copy with burnable area appended as a non-interpreted predictor.
GridDataset with_burnable_predictor(const GridDataset& ds);

/// Returns the dataset with its time axis replaced by `positions` (indices into ds.times).
/// Every site moves with its month.
GridDataset resample_times(const GridDataset& ds, std::span<const std::size_t> positions);

struct SpiResult {
  std::vector<double> values;  // per cell, NaN where undefined
  std::vector<std::string> warnings;
};

/// Standardized precipitation index from monthly totals laid out like a
/// GridDataset field. Rolling `window`-month sums are fitted per (site,
/// calendar month) by a zero-inflated gamma, then mapped through the fitted
/// CDF and the standard-normal quantile function.
SpiResult compute_spi(std::span<const double> precip, std::size_t n_sites, std::size_t n_times, int start_month,
                      int window);

}  // namespace pinnburn
