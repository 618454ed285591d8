#include "pinnburn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include "pinnburn/partition.hpp"

namespace pinnburn {

double TrueSurface::eta(std::span<const double> x) const {
  double e = intercept;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j < linear.size()) e += linear[j] * x[j];
    if (j < saturating.size()) e += saturating[j] * std::tanh(x[j]);
  }
  return e;
}

void GeneratorSpec::validate() const {
  if (rows < 1 || cols < 1 || months < 1) throw std::invalid_argument("generator grid and months must be positive");
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("generator shape must lie in (0,1)");
  if (!(bulk_alpha > 0.0 && bulk_beta > 0.0)) throw std::invalid_argument("bulk Beta parameters must be positive");
  if (!(lambda_min > 0.0 && lambda_max >= lambda_min)) throw std::invalid_argument("burnable range must be positive");
  if (!(zero_lambda_fraction >= 0.0 && zero_lambda_fraction < 1.0))
    throw std::invalid_argument("zero-burnable fraction must lie in [0,1)");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
    throw std::invalid_argument("missing fraction must lie in [0,1)");
  if (start_month < 1 || start_month > 12) throw std::invalid_argument("start month must lie in 1..12");
  for (const auto& p : predictors)
    if (p.name.empty() || !(p.sd >= 0.0)) throw std::invalid_argument("bad predictor generator");
}

double SyntheticTruth::spread_quantile(std::size_t cell, double tau) const {
  const double q_pu = pu[cell];
  if (tau >= 1.0 - q_pu) {
    const double su = sigma[cell] + xi * u[cell];
    return u[cell] + su / xi * (std::pow((1.0 - tau) / q_pu, -xi) - 1.0);
  }
  return u[cell] * boost::math::ibeta_inv(bulk_alpha, bulk_beta, tau / (1.0 - q_pu));
}

GeneratorSpec default_generator(int rows, int cols, int months, std::uint64_t seed) {
  GeneratorSpec g;
  g.rows = rows;
  g.cols = cols;
  g.months = months;
  g.seed = seed;
  g.predictors = {
      {"t2m", PredictorRole::interpreted, 0.0, 1.0, 300.0, 3.0, 1.0, 0.04, 0.01},
      {"vpd", PredictorRole::interpreted, 0.0, 1.0, 300.0, 3.0, 0.8, 0.05, 0.02},
      {"spi", PredictorRole::interpreted, 0.0, 1.0, 200.0, 2.0, 0.0, 0.0, 0.0},
      {"wind", PredictorRole::noninterpreted, 0.0, 1.0, 150.0, 1.0, 0.0, 0.0, 0.0},
  };
  g.p0 = {-1.2, {0.6, 0.5, -0.4, 0.2}, {}};
  g.pu = {1.6, {0.0, 0.2, 0.0, 0.0}, {}};
  g.u = {std::log(0.01), {0.1, 0.15, 0.0, 0.0}, {}};
  g.sigma = {std::log(0.015), {0.15, 0.2, -0.1, 0.0}, {}};
  return g;
}

namespace {

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double logistic(double x) { return 0.5 + 0.5 * std::tanh(0.5 * x); }

}  // namespace

SyntheticPanel generate(const GeneratorSpec& spec) {
  spec.validate();
  SyntheticPanel out;
  GridDataset& ds = out.data;
  ds.rows = spec.rows;
  ds.cols = spec.cols;
  ds.start_year = spec.start_year;
  ds.start_month = spec.start_month;
  ds.sites = make_regular_sites(spec.rows, spec.cols, spec.lon0, spec.lat0, spec.spacing_deg);
  ds.times.resize(static_cast<std::size_t>(spec.months));
  for (int t = 0; t < spec.months; ++t) ds.times[static_cast<std::size_t>(t)] = t;
  const std::size_t ns = ds.n_sites(), nt = ds.n_times(), nc = ds.n_cells();

  for (std::size_t j = 0; j < spec.predictors.size(); ++j) {
    const auto& pg = spec.predictors[j];
    ds.predictor_names.push_back(pg.name);
    ds.predictor_roles.push_back(pg.role);
    std::vector<double> field =
        simulate_separable_gp(ds.sites, nt, pg.range_s_km, pg.range_t_months, derive_seed(spec.seed, 100 + j));
    std::mt19937_64 trend_rng(derive_seed(spec.seed, 200 + j));
    std::normal_distribution<double> trend(pg.trend_mean, pg.trend_sd);
    std::vector<double> slope(ns);
    for (auto& s : slope) s = pg.trend_sd > 0.0 ? trend(trend_rng) : pg.trend_mean;
    for (std::size_t t = 0; t < nt; ++t) {
      const double season = pg.seasonal_amplitude * std::sin(2.0 * M_PI * (ds.calendar_month(t) - 1) / 12.0);
      const double years = static_cast<double>(t) / 12.0;
      for (std::size_t s = 0; s < ns; ++s) {
        double& v = field[t * ns + s];
        v = pg.mean + pg.sd * v + season + slope[s] * years;
      }
    }
    ds.predictors.push_back(std::move(field));
  }

  // Static burnable-area field: a smooth spatial field mapped into the range,
  // with a random subset of sites that cannot burn.
  const std::vector<double> lam_field = simulate_separable_gp(ds.sites, 1, 300.0, 1.0, derive_seed(spec.seed, 1));
  std::mt19937_64 site_rng(derive_seed(spec.seed, 2));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> site_lambda(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const bool barren = unif(site_rng) < spec.zero_lambda_fraction;
    site_lambda[s] =
        barren ? 0.0 : spec.lambda_min + (spec.lambda_max - spec.lambda_min) * standard_normal_cdf(lam_field[s]);
  }

  SyntheticTruth& tr = out.truth;
  tr.xi = spec.xi;
  tr.bulk_alpha = spec.bulk_alpha;
  tr.bulk_beta = spec.bulk_beta;
  tr.p0.resize(nc);
  tr.u.resize(nc);
  tr.pu.resize(nc);
  tr.sigma.resize(nc);
  ds.burnable.resize(nc);
  ds.response.resize(nc);

  std::mt19937_64 rng(derive_seed(spec.seed, 3));
  std::mt19937_64 miss_rng(derive_seed(spec.seed, 4));
  std::gamma_distribution<double> ga(spec.bulk_alpha, 1.0), gb(spec.bulk_beta, 1.0);
  std::vector<double> x(spec.predictors.size());
  std::size_t n_fires = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    const double lam = site_lambda[c % ns];
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = ds.predictors[j][c];
    tr.p0[c] = logistic(spec.p0.eta(x));
    tr.pu[c] = logistic(spec.pu.eta(x));
    tr.u[c] = lam * std::exp(spec.u.eta(x));
    tr.sigma[c] = lam * std::exp(spec.sigma.eta(x));
    ds.burnable[c] = lam;

    double y = 0.0;
    const bool fire = unif(rng) < tr.p0[c];
    if (fire && lam > 0.0) {
      ++n_fires;
      const double su = tr.sigma[c] + spec.xi * tr.u[c];
      for (int attempt = 0;; ++attempt) {
        if (attempt == 1000) throw std::runtime_error("synthetic spread never fell below the burnable area");
        if (unif(rng) < tr.pu[c]) {
          const double v = 1.0 - unif(rng);  // (0, 1]
          y = tr.u[c] + su / spec.xi * (std::pow(v, -spec.xi) - 1.0);
          if (!(y > tr.u[c])) y = std::nextafter(tr.u[c], lam);
        } else {
          const double a = ga(rng), b = gb(rng);
          y = tr.u[c] * a / (a + b);
        }
        if (y <= lam && y > 0.0) break;
        ++tr.n_rejected;
      }
    }
    const bool missing = spec.missing_fraction > 0.0 && unif(miss_rng) < spec.missing_fraction;
    ds.response[c] = missing ? std::numeric_limits<double>::quiet_NaN() : y;
  }
  if (n_fires > 0 && static_cast<double>(tr.n_rejected) > 0.01 * static_cast<double>(n_fires))
    throw std::runtime_error("synthetic generator rejected " + std::to_string(tr.n_rejected) + " of " +
                             std::to_string(n_fires) + " spreads above the burnable area; the spec is mis-scaled");
  ds.observed.assign(nc, 1);
  validate_and_mask(ds);
  return out;
}

void write_truth(const SyntheticPanel& panel, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const GridDataset& ds = panel.data;
  const SyntheticTruth& tr = panel.truth;
  std::ofstream csv(dir / "truth.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "truth.csv").string());
  csv << "site_row,site_col,time,p0,u,pu,sigma\n";
  char buf[256];
  for (std::size_t t = 0; t < ds.n_times(); ++t)
    for (std::size_t s = 0; s < ds.n_sites(); ++s) {
      const std::size_t c = ds.cell(t, s);
      std::snprintf(buf, sizeof buf, "%d,%d,%zu,%.17g,%.17g,%.17g,%.17g\n", ds.sites[s].row, ds.sites[s].col, t,
                    tr.p0[c], tr.u[c], tr.pu[c], tr.sigma[c]);
      csv << buf;
    }
  nlohmann::json j = {{"xi", tr.xi},
                      {"bulk_alpha", tr.bulk_alpha},
                      {"bulk_beta", tr.bulk_beta},
                      {"n_rejected", tr.n_rejected}};
  std::ofstream js(dir / "truth.json");
  js << j.dump(1) << '\n';
}

}  // namespace pinnburn
