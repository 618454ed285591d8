#include "pinnburn/grid_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pinnburn {

namespace {

std::string cell_label(const GridDataset& ds, std::size_t t, std::size_t s) {
  std::ostringstream os;
  os << "(site_row=" << ds.sites[s].row << ", site_col=" << ds.sites[s].col << ", time=" << ds.times[t] << ")";
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

double parse_double(const std::string& s, std::size_t line_no, const std::string& column) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size())
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + s + "' in column " + column);
  return v;
}

int parse_int(const std::string& s, std::size_t line_no, const std::string& column) {
  const double v = parse_double(s, line_no, column);
  if (v != std::floor(v))
    throw DataError("line " + std::to_string(line_no) + ": non-integer value in column " + column);
  return static_cast<int>(v);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(PredictorRole role) {
  return role == PredictorRole::interpreted ? "interpreted" : "noninterpreted";
}

PredictorRole predictor_role_from_string(const std::string& s) {
  if (s == "interpreted") return PredictorRole::interpreted;
  if (s == "noninterpreted") return PredictorRole::noninterpreted;
  throw DataError("unknown predictor role '" + s + "'");
}

std::size_t GridDataset::n_observed() const {
  return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), std::uint8_t{1}));
}

std::size_t GridDataset::predictor_index(const std::string& name) const {
  auto it = std::find(predictor_names.begin(), predictor_names.end(), name);
  if (it == predictor_names.end()) throw DataError("dataset has no predictor named '" + name + "'");
  return static_cast<std::size_t>(it - predictor_names.begin());
}

bool GridDataset::has_predictor(const std::string& name) const {
  return std::find(predictor_names.begin(), predictor_names.end(), name) != predictor_names.end();
}

int GridDataset::calendar_month(std::size_t time_pos) const {
  const int m = start_month - 1 + times.at(time_pos);
  return ((m % 12) + 12) % 12 + 1;
}

int GridDataset::year(std::size_t time_pos) const {
  const int m = start_month - 1 + times.at(time_pos);
  return start_year + (m >= 0 ? m / 12 : -((11 - m) / 12));
}

void validate_and_mask(GridDataset& ds) {
  if (ds.rows <= 0 || ds.cols <= 0) throw DataError("grid dimensions must be positive");
  if (ds.n_sites() != static_cast<std::size_t>(ds.rows) * static_cast<std::size_t>(ds.cols))
    throw DataError("site count does not match grid_rows x grid_cols");
  if (ds.times.empty()) throw DataError("dataset has no time steps");
  std::set<std::pair<int, int>> seen;
  for (const auto& s : ds.sites) {
    if (!seen.insert({s.row, s.col}).second)
      throw DataError("duplicate site (" + std::to_string(s.row) + ", " + std::to_string(s.col) + ")");
    if (!(s.lon >= -180.0 && s.lon <= 180.0) || !(s.lat >= -90.0 && s.lat <= 90.0))
      throw DataError("site (" + std::to_string(s.row) + ", " + std::to_string(s.col) + ") has invalid lon/lat");
  }
  const std::size_t n = ds.n_cells();
  if (ds.response.size() != n || ds.burnable.size() != n || ds.observed.size() != n)
    throw DataError("field sizes do not match sites x times");
  if (ds.predictor_roles.size() != ds.predictor_names.size() || ds.predictors.size() != ds.predictor_names.size())
    throw DataError("predictor name/role/field counts differ");
  std::set<std::string> names(ds.predictor_names.begin(), ds.predictor_names.end());
  if (names.size() != ds.predictor_names.size()) throw DataError("predictor names are not unique");

  for (std::size_t p = 0; p < ds.predictors.size(); ++p) {
    if (ds.predictors[p].size() != n) throw DataError("predictor '" + ds.predictor_names[p] + "' has wrong length");
    for (std::size_t t = 0; t < ds.n_times(); ++t)
      for (std::size_t s = 0; s < ds.n_sites(); ++s)
        if (!std::isfinite(ds.predictors[p][ds.cell(t, s)]))
          throw DataError("non-finite value of predictor '" + ds.predictor_names[p] + "' at " + cell_label(ds, t, s));
  }
  for (std::size_t t = 0; t < ds.n_times(); ++t) {
    for (std::size_t s = 0; s < ds.n_sites(); ++s) {
      const std::size_t c = ds.cell(t, s);
      const double lam = ds.burnable[c];
      if (!std::isfinite(lam) || lam < 0.0) throw DataError("invalid burnable area at " + cell_label(ds, t, s));
      if (lam == 0.0) ds.observed[c] = 0;
      if (std::isnan(ds.response[c])) ds.observed[c] = 0;
      if (!ds.observed[c]) continue;
      const double y = ds.response[c];
      if (!std::isfinite(y) || y < 0.0) throw DataError("invalid response at " + cell_label(ds, t, s));
      if (y > lam)
        throw DataError("response " + fmt17(y) + " exceeds burnable area " + fmt17(lam) + " at " +
                        cell_label(ds, t, s));
    }
  }
}

std::vector<SiteIndex> make_regular_sites(int rows, int cols, double lon0, double lat0, double spacing_deg) {
  std::vector<SiteIndex> sites;
  sites.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) sites.push_back({r, c, lon0 + c * spacing_deg, lat0 - r * spacing_deg});
  return sites;
}

GridDataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest is not valid JSON: " + std::string(e.what()));
  }

  GridDataset ds;
  std::size_t n_times = 0;
  try {
    ds.rows = manifest.at("grid_rows").get<int>();
    ds.cols = manifest.at("grid_cols").get<int>();
    n_times = manifest.at("n_times").get<std::size_t>();
    ds.predictor_names = manifest.at("predictor_names").get<std::vector<std::string>>();
    for (const auto& r : manifest.at("predictor_roles").get<std::vector<std::string>>())
      ds.predictor_roles.push_back(predictor_role_from_string(r));
    ds.start_year = manifest.value("start_year", 2001);
    ds.start_month = manifest.value("start_month", 1);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest schema mismatch: " + std::string(e.what()));
  }
  if (ds.rows <= 0 || ds.cols <= 0 || n_times == 0) throw DataError("manifest grid dimensions must be positive");
  if (ds.predictor_roles.size() != ds.predictor_names.size())
    throw DataError("manifest predictor_names and predictor_roles differ in length");
  if (ds.start_month < 1 || ds.start_month > 12) throw DataError("manifest start_month must be in 1..12");

  std::ifstream in(data_path);
  if (!in) throw DataError("cannot open data file " + data_path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("data file is empty");
  std::vector<std::string> expected = {"site_row", "site_col", "lon", "lat", "time", "y", "burnable"};
  expected.insert(expected.end(), ds.predictor_names.begin(), ds.predictor_names.end());
  if (split_csv(line) != expected) throw DataError("data file header does not match manifest schema");

  const std::size_t n_sites = static_cast<std::size_t>(ds.rows) * static_cast<std::size_t>(ds.cols);
  const std::size_t n_cells = n_sites * n_times;
  ds.sites.assign(n_sites, SiteIndex{});
  ds.times.resize(n_times);
  for (std::size_t t = 0; t < n_times; ++t) ds.times[t] = static_cast<int>(t);
  ds.response.assign(n_cells, std::nan(""));
  ds.burnable.assign(n_cells, 0.0);
  ds.observed.assign(n_cells, 0);
  ds.predictors.assign(ds.predictor_names.size(), std::vector<double>(n_cells, 0.0));
  std::vector<std::uint8_t> filled(n_cells, 0);
  std::vector<std::uint8_t> site_set(n_sites, 0);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != expected.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected.size()) +
                      " fields, got " + std::to_string(f.size()));
    const int row = parse_int(f[0], line_no, "site_row");
    const int col = parse_int(f[1], line_no, "site_col");
    const int t = parse_int(f[4], line_no, "time");
    if (row < 0 || row >= ds.rows || col < 0 || col >= ds.cols || t < 0 || static_cast<std::size_t>(t) >= n_times)
      throw DataError("line " + std::to_string(line_no) + ": site or time index out of manifest range");
    const std::size_t site = static_cast<std::size_t>(row) * static_cast<std::size_t>(ds.cols) +
                             static_cast<std::size_t>(col);
    const std::size_t c = static_cast<std::size_t>(t) * n_sites + site;
    if (filled[c]) throw DataError("line " + std::to_string(line_no) + ": duplicate (site, time) row");
    filled[c] = 1;
    const double lon = parse_double(f[2], line_no, "lon");
    const double lat = parse_double(f[3], line_no, "lat");
    if (site_set[site] && (ds.sites[site].lon != lon || ds.sites[site].lat != lat))
      throw DataError("line " + std::to_string(line_no) + ": inconsistent lon/lat for site");
    ds.sites[site] = {row, col, lon, lat};
    site_set[site] = 1;
    ds.burnable[c] = parse_double(f[6], line_no, "burnable");
    if (!f[5].empty()) {
      ds.response[c] = parse_double(f[5], line_no, "y");
      ds.observed[c] = 1;
    }
    for (std::size_t p = 0; p < ds.predictor_names.size(); ++p) {
      const double v = parse_double(f[7 + p], line_no, ds.predictor_names[p]);
      if (std::isnan(v))
        throw DataError("line " + std::to_string(line_no) + ": NaN in predictor '" + ds.predictor_names[p] + "'");
      ds.predictors[p][c] = v;
    }
  }
  for (std::size_t c = 0; c < n_cells; ++c)
    if (!filled[c])
      throw DataError("data file has no row for site index " + std::to_string(c % n_sites) + ", time " +
                      std::to_string(c / n_sites));
  validate_and_mask(ds);
  return ds;
}

void write_dataset(const GridDataset& ds, const std::filesystem::path& data_path,
                   const std::filesystem::path& manifest_path) {
  nlohmann::json m;
  m["grid_rows"] = ds.rows;
  m["grid_cols"] = ds.cols;
  m["n_times"] = ds.n_times();
  m["predictor_names"] = ds.predictor_names;
  std::vector<std::string> roles;
  for (auto r : ds.predictor_roles) roles.push_back(to_string(r));
  m["predictor_roles"] = roles;
  m["start_year"] = ds.start_year;
  m["start_month"] = ds.start_month;
  std::ofstream mf(manifest_path);
  if (!mf) throw DataError("cannot write manifest " + manifest_path.string());
  mf << m.dump(2) << "\n";

  std::ofstream out(data_path);
  if (!out) throw DataError("cannot write data file " + data_path.string());
  out << "site_row,site_col,lon,lat,time,y,burnable";
  for (const auto& n : ds.predictor_names) out << ',' << n;
  out << '\n';
  for (std::size_t t = 0; t < ds.n_times(); ++t) {
    for (std::size_t s = 0; s < ds.n_sites(); ++s) {
      const std::size_t c = ds.cell(t, s);
      const auto& site = ds.sites[s];
      out << site.row << ',' << site.col << ',' << fmt17(site.lon) << ',' << fmt17(site.lat) << ',' << ds.times[t]
          << ',';
      if (ds.observed[c]) out << fmt17(ds.response[c]);
      out << ',' << fmt17(ds.burnable[c]);
      for (const auto& field : ds.predictors) out << ',' << fmt17(field[c]);
      out << '\n';
    }
  }
}

std::size_t StandardizationSpec::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("standardization spec has no entry for '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::pair<GridDataset, StandardizationSpec> standardize(const GridDataset& ds) {
  StandardizationSpec spec;
  const std::size_t n_obs = ds.n_observed();
  if (n_obs == 0) throw DataError("cannot standardize: no observed cells");
  for (std::size_t p = 0; p < ds.predictors.size(); ++p) {
    const auto& field = ds.predictors[p];
    double sum = 0.0;
    for (std::size_t c = 0; c < field.size(); ++c)
      if (ds.observed[c]) sum += field[c];
    const double mean = sum / static_cast<double>(n_obs);
    double ss = 0.0;
    for (std::size_t c = 0; c < field.size(); ++c)
      if (ds.observed[c]) ss += (field[c] - mean) * (field[c] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n_obs));
    if (!(sd > 0.0) || sd <= 1e-12 * std::max(1.0, std::abs(mean)))
      throw DataError("predictor '" + ds.predictor_names[p] + "' is constant over observed cells (sd = 0)");
    spec.names.push_back(ds.predictor_names[p]);
    spec.mean.push_back(mean);
    spec.sd.push_back(sd);
  }
  return {apply_standardization(ds, spec), spec};
}

GridDataset apply_standardization(const GridDataset& ds, const StandardizationSpec& spec) {
  GridDataset out = ds;
  for (std::size_t p = 0; p < out.predictors.size(); ++p) {
    const std::size_t i = spec.index_of(out.predictor_names[p]);
    for (auto& v : out.predictors[p]) v = spec.apply(i, v);
  }
  return out;
}

GridDataset invert_standardization(const GridDataset& ds, const StandardizationSpec& spec) {
  GridDataset out = ds;
  for (std::size_t p = 0; p < out.predictors.size(); ++p) {
    const std::size_t i = spec.index_of(out.predictor_names[p]);
    for (auto& v : out.predictors[p]) v = spec.invert(i, v);
  }
  return out;
}

GridDataset with_burnable_predictor(const GridDataset& ds) {
  if (ds.has_predictor(kBurnablePredictor)) return ds;
  GridDataset out = ds;
  out.predictor_names.emplace_back(kBurnablePredictor);
  out.predictor_roles.push_back(PredictorRole::noninterpreted);
  out.predictors.push_back(ds.burnable);
  return out;
}

GridDataset resample_times(const GridDataset& ds, std::span<const std::size_t> positions) {
  GridDataset out;
  out.rows = ds.rows;
  out.cols = ds.cols;
  out.start_year = ds.start_year;
  out.start_month = ds.start_month;
  out.sites = ds.sites;
  out.predictor_names = ds.predictor_names;
  out.predictor_roles = ds.predictor_roles;
  const std::size_t ns = ds.n_sites();
  const std::size_t n = ns * positions.size();
  out.times.reserve(positions.size());
  out.response.resize(n);
  out.burnable.resize(n);
  out.observed.resize(n);
  out.predictors.assign(ds.predictors.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const std::size_t src_t = positions[k];
    if (src_t >= ds.n_times()) throw DataError("resample position out of range");
    out.times.push_back(ds.times[src_t]);
    const std::size_t src = src_t * ns;
    const std::size_t dst = k * ns;
    std::copy_n(ds.response.begin() + static_cast<std::ptrdiff_t>(src), ns,
                out.response.begin() + static_cast<std::ptrdiff_t>(dst));
    std::copy_n(ds.burnable.begin() + static_cast<std::ptrdiff_t>(src), ns,
                out.burnable.begin() + static_cast<std::ptrdiff_t>(dst));
    std::copy_n(ds.observed.begin() + static_cast<std::ptrdiff_t>(src), ns,
                out.observed.begin() + static_cast<std::ptrdiff_t>(dst));
    for (std::size_t p = 0; p < ds.predictors.size(); ++p)
      std::copy_n(ds.predictors[p].begin() + static_cast<std::ptrdiff_t>(src), ns,
                  out.predictors[p].begin() + static_cast<std::ptrdiff_t>(dst));
  }
  return out;
}

}  // namespace pinnburn
