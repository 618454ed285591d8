#include "pinnburn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pinnburn/diagnostics.hpp"
#include "pinnburn/scenario.hpp"
#include "pinnburn/serialization.hpp"
#include "pinnburn/spline.hpp"
#include "pinnburn/synth.hpp"

namespace pinnburn {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
  if (!std::isfinite(x)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// run_manifest.json of one output directory.
class RunManifest {
 public:
  RunManifest(const std::string& subcommand, const std::vector<std::string>& args) {
    j_["tool"] = "pinnburn";
    j_["version"] = kVersion;
    j_["format_version"] = kFormatVersion;
    j_["subcommand"] = subcommand;
    j_["arguments"] = args;
    j_["seeds"] = Json::object();
    j_["inputs"] = Json::object();
    j_["config"] = Json::object();
  }

  Json& config() { return j_["config"]; }
  void seed(const std::string& name, std::uint64_t value) { j_["seeds"][name] = value; }
  void input(const std::string& role, const fs::path& p) {
    j_["inputs"][role] = {{"path", fs::absolute(p).lexically_normal().string()}, {"digest", file_digest(p)}};
  }

  /// Digests every file under `dir` and writes the manifest there.
  void write(const fs::path& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string rel = fs::relative(e.path(), dir).generic_string();
      if (rel == "run_manifest.json") continue;
      files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    Json outputs = Json::object();
    for (const auto& f : files) outputs[f] = file_digest(dir / f);
    j_["outputs"] = outputs;
    j_["created_utc"] = utc_timestamp();
    write_json(j_, dir / "run_manifest.json");
  }

 private:
  Json j_;
};

struct InputFiles {
  fs::path data;
  fs::path manifest;
};

InputFiles resolve_inputs(const std::string& data, const std::string& manifest) {
  if (data.empty()) throw UsageError("--data is required");
  InputFiles in;
  const fs::path d = data;
  if (fs::is_directory(d)) {
    in.data = d / "data.csv";
    in.manifest = manifest.empty() ? d / "data_manifest.json" : fs::path(manifest);
  } else {
    in.data = d;
    in.manifest = manifest.empty() ? d.parent_path() / "data_manifest.json" : fs::path(manifest);
  }
  if (!fs::exists(in.data)) throw std::runtime_error("data file not found: " + in.data.string());
  if (!fs::exists(in.manifest)) throw std::runtime_error("data manifest not found: " + in.manifest.string());
  return in;
}

/// Input files recorded by the run that produced `run`, checked against their digests.
InputFiles inputs_of_run(const fs::path& run) {
  const fs::path mpath = run / "run_manifest.json";
  if (!fs::exists(mpath)) throw std::runtime_error("not a run directory (no run_manifest.json): " + run.string());
  const Json m = read_json(mpath);
  InputFiles in;
  for (const auto& [role, target] : {std::pair{"data", &in.data}, std::pair{"data_manifest", &in.manifest}}) {
    const Json& e = m.at("inputs").at(role);
    *target = e.at("path").get<std::string>();
    if (!fs::exists(*target)) throw std::runtime_error("run input missing: " + target->string());
    if (file_digest(*target) != e.at("digest").get<std::string>())
      throw std::runtime_error("run input changed since the run was made: " + target->string());
  }
  return in;
}

std::pair<int, int> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw UsageError("--grid must look like 20x20");
  try {
    const int r = std::stoi(s.substr(0, x)), c = std::stoi(s.substr(x + 1));
    if (r < 1 || c < 1) throw UsageError("--grid dimensions must be positive");
    return {r, c};
  } catch (const std::logic_error&) {
    throw UsageError("--grid must look like 20x20");
  }
}

struct FitOptions {
  std::string data;
  std::string manifest;
  double tau = 0.4;
  int epochs = 2000;
  std::uint64_t seed = 1;
  double lambda_s = 240.0;
  double lambda_t = 5.0;
  std::vector<std::string> layers;
  std::vector<std::string> knots;

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "data file or directory holding data.csv")->required();
    app->add_option("--manifest", manifest, "data manifest (default: data_manifest.json beside the data)");
    app->add_option("--tau", tau, "threshold non-exceedance probability")->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs per model")->capture_default_str();
    app->add_option("--seed", seed, "run seed")->capture_default_str();
    app->add_option("--lambda-s", lambda_s, "partition GP spatial range (km)")->capture_default_str();
    app->add_option("--lambda-t", lambda_t, "partition GP temporal range (months)")->capture_default_str();
    app->add_option("--layers", layers, "architecture override TARGET=kind:width,... (repeatable)");
    app->add_option("--knots", knots, "spline knot override TARGET=K (repeatable)");
  }

  FitConfig config(const GridDataset& ds) const {
    FitConfig cfg;
    cfg.tau = tau;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.partition.range_s_km = lambda_s;
    cfg.partition.range_t_months = lambda_t;
    auto split_kv = [](const std::string& s) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("expected TARGET=VALUE, got '" + s + "'");
      try {
        return std::pair{surface_target_from_string(s.substr(0, eq)), s.substr(eq + 1)};
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    };
    for (const auto& l : layers) {
      const auto [target, spec] = split_kv(l);
      ArchitectureSpec a = cfg.architecture(target, ds);
      a.layers.clear();
      std::stringstream ss(spec);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("layer must look like kind:width, got '" + item + "'");
        try {
          a.layers.push_back({layer_kind_from_string(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
        } catch (const std::exception& e) {
          throw UsageError("bad layer '" + item + "': " + e.what());
        }
      }
      cfg.architectures[target] = a;
    }
    for (const auto& k : knots) {
      const auto [target, value] = split_kv(k);
      ArchitectureSpec a = cfg.architecture(target, ds);
      try {
        a.knots = std::stoi(value);
      } catch (const std::exception&) {
        throw UsageError("knot count must be an integer, got '" + value + "'");
      }
      cfg.architectures[target] = a;
    }
    cfg.validate();
    return cfg;
  }
};

void write_summary(const FitLogs& logs, double xi, const fs::path& path) {
  std::ofstream out(path);
  out << "stage,epochs,best_epoch,best_validation_loss,train_loss_at_best\n";
  const std::pair<const char*, const TrainLog*> stages[] = {
      {"p0", &logs.p0}, {"u", &logs.u}, {"pu", &logs.pu}, {"sigma", &logs.sigma}};
  for (const auto& [name, log] : stages) {
    const std::size_t b = log->best_epoch;
    out << name << ',' << log->validation_loss.size() << ',' << b + 1 << ','
        << fmt(b < log->validation_loss.size() ? log->validation_loss[b] : NAN) << ','
        << fmt(b < log->train_loss.size() ? log->train_loss[b] : NAN) << '\n';
  }
  out << "xi,,,," << fmt(xi) << '\n';
}

BootstrapEnsemble load_run_models(const fs::path& run) {
  if (fs::exists(run / "ensemble.json")) return load_ensemble(run);
  if (fs::exists(run / "model.json")) {
    BootstrapEnsemble ens;
    Replicate rep;
    rep.model = load_model(run / "model.json");
    ens.replicates.push_back(std::move(rep));
    return ens;
  }
  throw std::runtime_error("run directory holds no fitted model: " + run.string());
}

std::size_t find_time(const GridDataset& ds, int month, int year_index) {
  if (month < 1 || month > 12) throw UsageError("--month must lie in 1..12");
  for (std::size_t t = 0; t < ds.n_times(); ++t)
    if (ds.calendar_month(t) == month && ds.year(t) - ds.year(0) + 1 == year_index) return t;
  throw UsageError("no time position for month " + std::to_string(month) + " of year " + std::to_string(year_index));
}

// ---------------------------------------------------------------------------

int run_simulate(const std::string& grid, int months, std::uint64_t seed, double missing, const std::string& out,
                 const std::vector<std::string>& args) {
  const auto [rows, cols] = parse_grid(grid);
  if (months < 1) throw UsageError("--months must be positive");
  GeneratorSpec spec = default_generator(rows, cols, months, seed);
  spec.missing_fraction = missing;
  const SyntheticPanel panel = generate(spec);
  const fs::path dir = out;
  fs::create_directories(dir);
  write_dataset(panel.data, dir / "data.csv", dir / "data_manifest.json");
  write_truth(panel, dir / "truth");
  RunManifest m("simulate", args);
  m.config() = {{"grid", grid}, {"months", months}, {"missing_fraction", missing}};
  m.seed("run", seed);
  m.write(dir);
  std::cerr << "simulated " << panel.data.n_observed() << " observed cells into " << dir.string() << '\n';
  return 0;
}

int run_fit(const FitOptions& opt, const std::string& out, const std::vector<std::string>& args) {
  const InputFiles in = resolve_inputs(opt.data, opt.manifest);
  const GridDataset ds = load_dataset(in.data, in.manifest);
  FitConfig cfg = opt.config(ds);
  cfg.partition.seed = derive_seed(cfg.seed, 2);
  const PartitionAssignment part = assign_partition(ds, cfg.partition);
  std::cerr << "fitting 4 surfaces, " << cfg.epochs << " epochs each\n";
  const FitResult fit = fit_full_model(ds, part, cfg, derive_seed(cfg.seed, 3));

  const fs::path dir = out;
  fs::create_directories(dir);
  save_model(fit.model, dir / "model.json");
  write_json(to_json(fit.logs), dir / "logs.json");
  write_partition(ds, part, dir / "partition.csv");
  write_summary(fit.logs, fit.model.xi, dir / "summary.csv");
  RunManifest m("fit", args);
  m.config() = to_json(cfg);
  m.seed("run", cfg.seed);
  m.seed("partition", cfg.partition.seed);
  m.seed("fit", derive_seed(cfg.seed, 3));
  m.input("data", in.data);
  m.input("data_manifest", in.manifest);
  m.write(dir);
  std::cerr << "fitted model written to " << dir.string() << " (xi = " << fit.model.xi << ")\n";
  return 0;
}

int run_bootstrap(const FitOptions& opt, int replicates, double block, const std::string& out,
                  const std::vector<std::string>& args) {
  const InputFiles in = resolve_inputs(opt.data, opt.manifest);
  const GridDataset ds = load_dataset(in.data, in.manifest);
  FitConfig cfg = opt.config(ds);
  cfg.n_replicates = replicates;
  cfg.block_length = block;
  cfg.validate();
  const BootstrapEnsemble ens = run_ensemble(ds, cfg, [](const std::string& msg) { std::cerr << msg << '\n'; });

  const fs::path dir = out;
  save_ensemble(ens, cfg, dir);
  std::vector<double> xis;
  std::ofstream summary(dir / "summary.csv");
  summary << "replicate,seed,status,xi,best_epoch_p0,best_epoch_u,best_epoch_pu,best_epoch_sigma\n";
  for (const auto& r : ens.replicates) {
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%04zu", r.index);
    fs::create_directories(dir / name);
    if (!r.partition.split.empty()) write_partition(resample_times(ds, r.time_positions), r.partition, dir / name / "partition.csv");
    summary << r.index << ',' << r.seed << ',' << (r.ok() ? "ok" : "failed") << ',';
    if (r.ok()) {
      xis.push_back(r.model->xi);
      summary << fmt(r.model->xi) << ',' << r.logs.p0.best_epoch + 1 << ',' << r.logs.u.best_epoch + 1 << ','
              << r.logs.pu.best_epoch + 1 << ',' << r.logs.sigma.best_epoch + 1 << '\n';
    } else {
      summary << "NA,NA,NA,NA,NA\n";
    }
  }
  summary.close();
  std::ofstream xs(dir / "xi_summary.csv");
  xs << "n_ok,median,lower_2.5,upper_97.5\n"
     << xis.size() << ',' << fmt(empirical_quantile(xis, 0.5)) << ',' << fmt(empirical_quantile(xis, 0.025)) << ','
     << fmt(empirical_quantile(xis, 0.975)) << '\n';
  xs.close();

  RunManifest m("bootstrap", args);
  m.config() = to_json(cfg);
  m.seed("run", cfg.seed);
  for (const auto& r : ens.replicates) m.seed("replicate_" + std::to_string(r.index), r.seed);
  m.input("data", in.data);
  m.input("data_manifest", in.manifest);
  m.write(dir);
  std::cerr << ens.n_ok() << " of " << ens.replicates.size() << " replicates fitted; run written to "
            << dir.string() << '\n';
  return 0;
}

int run_diagnose(const std::string& run, std::string out, std::uint64_t seed, const std::vector<std::string>& args) {
  const fs::path rundir = run;
  const InputFiles in = inputs_of_run(rundir);
  const GridDataset raw = load_dataset(in.data, in.manifest);
  BootstrapEnsemble ens = load_run_models(rundir);
  if (out.empty()) out = (rundir / "diagnose").string();
  const fs::path dir = out;
  fs::create_directories(dir);

  // A single fit keeps its partition in partition.csv on the original time axis.
  if (ens.replicates.size() == 1 && ens.replicates[0].partition.split.empty()) {
    ens.replicates[0].partition = read_partition(raw, rundir / "partition.csv");
    ens.replicates[0].time_positions.resize(raw.n_times());
    for (std::size_t t = 0; t < raw.n_times(); ++t) ens.replicates[0].time_positions[t] = t;
  }

  const std::vector<double> thresholds = geometric_thresholds();
  std::vector<ScoreReport> reports;
  std::vector<double> pooled_exp;
  std::vector<double> aucs, crps;
  for (const auto& r : ens.replicates) {
    if (!r.ok()) continue;
    const GridDataset sample = resample_times(raw, r.time_positions);
    const ParameterFields f = predict_fields(*r.model, sample);
    std::vector<std::uint8_t> test(sample.n_cells()), labels(sample.n_cells());
    for (std::size_t c = 0; c < sample.n_cells(); ++c) {
      test[c] = sample.observed[c] && r.partition.split[c] == Split::test;
      labels[c] = sample.response[c] > 0.0;
    }
    const auto id = static_cast<long>(r.index);
    try {
      const double a = auc(f.p0, labels, test);
      aucs.push_back(a);
      reports.push_back({"auc", a, "test", id});
    } catch (const std::invalid_argument& e) {
      std::cerr << "replicate " << r.index << ": AUC skipped: " << e.what() << '\n';
    }
    const double tw = twcrps_spread(f, r.model->bulk, sample.response, test, thresholds);
    std::size_t n_pos = 0;
    for (std::size_t c = 0; c < sample.n_cells(); ++c)
      if (test[c] && sample.response[c] > 0.0) {
        ++n_pos;
        pooled_exp.push_back(exp_margin_transform(sample.response[c], f.at(c), r.model->bulk));
      }
    crps.push_back(tw);
    reports.push_back({"twcrps", tw, "test", id});
    reports.push_back({"twcrps_per_cell", n_pos ? tw / static_cast<double>(n_pos) : NAN, "test", id});
  }
  if (reports.empty()) throw std::runtime_error("no fitted replicate could be scored");

  std::ofstream scores(dir / "scores.csv");
  scores << "metric,split,replicate,value\n";
  for (const auto& s : reports) scores << s.metric << ',' << s.split << ',' << s.replicate << ',' << fmt(s.value) << '\n';
  for (const auto& [name, vals] : {std::pair{"auc", &aucs}, std::pair{"twcrps", &crps}}) {
    if (vals->empty()) continue;
    scores << name << ",test,median," << fmt(empirical_quantile(*vals, 0.5)) << '\n'
           << name << ",test,q025," << fmt(empirical_quantile(*vals, 0.025)) << '\n'
           << name << ",test,q975," << fmt(empirical_quantile(*vals, 0.975)) << '\n';
  }
  scores.close();

  if (pooled_exp.size() >= 50) {
    const auto qq = qq_exponential(pooled_exp, 1000, seed);
    std::ofstream q(dir / "qq.csv");
    q << "level,theoretical,empirical,lower,upper\n";
    for (const auto& row : qq)
      q << fmt(row.level) << ',' << fmt(row.theoretical) << ',' << fmt(row.empirical) << ',' << fmt(row.lower) << ','
        << fmt(row.upper) << '\n';
    const KsResult ks = ks_exponential(pooled_exp);
    std::ofstream k(dir / "ks.csv");
    k << "n,statistic,p_value\n" << pooled_exp.size() << ',' << fmt(ks.statistic) << ',' << fmt(ks.p_value) << '\n';
  } else {
    std::cerr << "Q-Q table skipped: only " << pooled_exp.size() << " positive test responses\n";
  }

  std::ifstream back(dir / "scores.csv");
  std::cout << back.rdbuf();
  RunManifest m("diagnose", args);
  m.config() = {{"run", fs::absolute(rundir).lexically_normal().string()}, {"thresholds", thresholds}};
  m.seed("qq_bands", seed);
  m.input("data", in.data);
  m.input("data_manifest", in.manifest);
  m.write(dir);
  return 0;
}

int run_predict(const std::string& run, double quantile, int month, int year, bool log1p, const std::string& out) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw UsageError("--quantile must lie in (0,1)");
  const fs::path rundir = run;
  const InputFiles in = inputs_of_run(rundir);
  const GridDataset raw = load_dataset(in.data, in.manifest);
  const BootstrapEnsemble ens = load_run_models(rundir);
  const std::size_t t0 = find_time(raw, month, year);
  const std::size_t pos[] = {t0};
  const GridDataset slice = resample_times(raw, pos);
  const std::size_t ns = raw.n_sites();

  std::vector<std::vector<double>> p0s, qs, sqs;
  for (const auto& r : ens.replicates) {
    if (!r.ok()) continue;
    const ParameterFields f = predict_fields(*r.model, slice);
    std::vector<double> q(ns, NAN), sq(ns, NAN);
    for (std::size_t s = 0; s < ns; ++s) {
      if (!(slice.burnable[s] > 0.0)) continue;
      q[s] = full_quantile(quantile, f.at(s), r.model->bulk);
      sq[s] = conditional_spread_quantile(quantile, f.at(s), r.model->bulk);
      if (log1p) {
        q[s] = std::log1p(q[s]);
        sq[s] = std::log1p(sq[s]);
      }
    }
    p0s.push_back(f.p0);
    qs.push_back(std::move(q));
    sqs.push_back(std::move(sq));
  }
  if (p0s.empty()) throw std::runtime_error("run has no fitted replicates");
  const Envelope ep = nan_envelope(p0s), eq = nan_envelope(qs), es = nan_envelope(sqs);

  std::ostringstream table;
  table << "site_row,site_col,lon,lat,p0,quantile,quantile_lower,quantile_upper,spread_quantile\n";
  for (std::size_t s = 0; s < ns; ++s)
    table << raw.sites[s].row << ',' << raw.sites[s].col << ',' << fmt(raw.sites[s].lon) << ','
          << fmt(raw.sites[s].lat) << ',' << fmt(ep.median[s]) << ',' << fmt(eq.median[s]) << ','
          << fmt(eq.lower[s]) << ',' << fmt(eq.upper[s]) << ',' << fmt(es.median[s]) << '\n';
  if (out.empty()) {
    std::cout << table.str();
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << table.str();
  }
  return 0;
}

int run_perturb(const std::string& run, const std::string& predictor, int month, int year, double horizon, int pool,
                double quantile, bool log1p, std::string out, const std::vector<std::string>& args) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw UsageError("--quantile must lie in (0,1)");
  if (pool < 0) throw UsageError("--pool must be >= 0");
  const fs::path rundir = run;
  const InputFiles in = inputs_of_run(rundir);
  const GridDataset raw = load_dataset(in.data, in.manifest);
  if (!raw.has_predictor(predictor)) throw UsageError("unknown predictor '" + predictor + "'");
  const BootstrapEnsemble ens = load_run_models(rundir);
  const std::size_t t0 = find_time(raw, month, year);
  const TrendField trend = fit_trend(raw, predictor, month, pool);
  const ScenarioResult res = perturb_and_compare(ens, raw, t0, predictor, trend, horizon, quantile);
  if (res.n_extrapolated > 0)
    std::cerr << "warning: " << res.n_extrapolated << " perturbed sites lie outside the observed range of "
              << predictor << '\n';

  Envelope q_abs = res.summary.quantile_absolute;
  if (log1p) {
    std::vector<std::vector<double>> logd;
    for (const auto& d : res.deltas) {
      std::vector<double> v(d.spread_quantile.baseline.size());
      for (std::size_t s = 0; s < v.size(); ++s)
        v[s] = std::log1p(d.spread_quantile.perturbed[s]) - std::log1p(d.spread_quantile.baseline[s]);
      logd.push_back(std::move(v));
    }
    q_abs = nan_envelope(logd);
  }

  if (out.empty()) {
    char name[96];
    std::snprintf(name, sizeof name, "perturb_%s_m%02d", predictor.c_str(), month);
    out = (rundir / name).string();
  }
  const fs::path dir = out;
  fs::create_directories(dir);
  std::ofstream t(dir / "deltas.csv");
  t << "site_row,site_col,slope,n_pooled";
  const std::pair<const char*, const Envelope*> metrics[] = {{"p0_abs", &res.summary.p0_absolute},
                                                             {"p0_rel", &res.summary.p0_relative},
                                                             {"q_abs", &q_abs},
                                                             {"q_rel", &res.summary.quantile_relative}};
  for (const auto& [name, env] : metrics) t << ',' << name << "_median," << name << "_q025," << name << "_q975";
  t << '\n';
  for (std::size_t s = 0; s < raw.n_sites(); ++s) {
    t << raw.sites[s].row << ',' << raw.sites[s].col << ',' << fmt(trend.slope[s]) << ',' << trend.n_pooled[s];
    for (const auto& [name, env] : metrics)
      t << ',' << fmt(env->median[s]) << ',' << fmt(env->lower[s]) << ',' << fmt(env->upper[s]);
    t << '\n';
  }
  t.close();

  // Per-site medians summarized over sites.
  std::ofstream sm(dir / "site_summary.csv");
  sm << "metric,n_sites,median,q025,q975\n";
  std::vector<double> slopes(trend.slope);
  sm << "slope," << slopes.size() << ',' << fmt(empirical_quantile(slopes, 0.5)) << ','
     << fmt(empirical_quantile(slopes, 0.025)) << ',' << fmt(empirical_quantile(slopes, 0.975)) << '\n';
  for (const auto& [name, env] : metrics) {
    std::vector<double> v;
    for (double x : env->median)
      if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) {
      sm << name << ",0,NA,NA,NA\n";
      continue;
    }
    sm << name << ',' << v.size() << ',' << fmt(empirical_quantile(v, 0.5)) << ','
       << fmt(empirical_quantile(v, 0.025)) << ',' << fmt(empirical_quantile(v, 0.975)) << '\n';
  }
  sm.close();

  std::ifstream back(dir / "site_summary.csv");
  std::cout << back.rdbuf();
  RunManifest m("perturb", args);
  m.config() = {{"run", fs::absolute(rundir).lexically_normal().string()},
                {"predictor", predictor},
                {"month", month},
                {"year", year},
                {"horizon", horizon},
                {"pool", pool},
                {"quantile", quantile},
                {"log1p", log1p}};
  m.input("data", in.data);
  m.input("data_manifest", in.manifest);
  m.write(dir);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Partially-interpretable neural extreme-value models for gridded burnt area", "pinnburn"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string out;
  std::uint64_t seed = 1;

  auto* sim = app.add_subcommand("simulate", "draw a synthetic panel with known parameter surfaces");
  std::string grid = "20x20";
  int months = 120;
  double missing = 0.0;
  sim->add_option("--grid", grid, "grid size ROWSxCOLS")->capture_default_str();
  sim->add_option("--months", months, "number of months")->capture_default_str();
  sim->add_option("--missing", missing, "fraction of responses dropped at random")->capture_default_str();
  sim->add_option("--seed", seed, "generator seed")->capture_default_str();
  sim->add_option("--out", out, "output directory")->required();

  auto* fit = app.add_subcommand("fit", "fit one model on a spatio-temporal partition");
  FitOptions fit_opt;
  fit_opt.add_to(fit);
  fit->add_option("--out", out, "output directory")->required();

  auto* boot = app.add_subcommand("bootstrap", "stationary-bootstrap ensemble of fits");
  FitOptions boot_opt;
  boot_opt.add_to(boot);
  int replicates = 250;
  double block = 2.0;
  boot->add_option("--replicates", replicates, "number of bootstrap replicates")->capture_default_str();
  boot->add_option("--block", block, "expected block length in months")->capture_default_str();
  boot->add_option("--out", out, "run directory")->required();

  std::string run;
  auto* diag = app.add_subcommand("diagnose", "AUC, twCRPS and Q-Q diagnostics of a run");
  diag->add_option("--run", run, "run directory")->required();
  diag->add_option("--seed", seed, "seed for Q-Q tolerance bands")->capture_default_str();
  diag->add_option("--out", out, "output directory (default RUN/diagnose)");

  double quantile = 0.95;
  int month = 0, year = 1;
  bool log1p = false;
  auto* pred = app.add_subcommand("predict", "per-site quantiles for one month");
  pred->add_option("--run", run, "run directory")->required();
  pred->add_option("--quantile", quantile, "quantile level of burnt area")->capture_default_str();
  pred->add_option("--month", month, "calendar month 1..12")->required();
  pred->add_option("--year", year, "year of the panel, 1 = first")->capture_default_str();
  pred->add_flag("--log1p", log1p, "report log(1 + value)");
  pred->add_option("--out", out, "output file (default standard output)");

  std::string predictor;
  double horizon = 19.0;
  int pool = 1;
  double perturb_q = 0.9;
  auto* pert = app.add_subcommand("perturb", "trend-perturbation scenario");
  pert->add_option("--run", run, "run directory")->required();
  pert->add_option("--predictor", predictor, "predictor to perturb")->required();
  pert->add_option("--month", month, "calendar month 1..12 for trends and the reference month")->required();
  pert->add_option("--year", year, "reference year of the panel, 1 = first")->capture_default_str();
  pert->add_option("--horizon", horizon, "years of trend to add")->capture_default_str();
  pert->add_option("--pool", pool, "neighbourhood radius for trend pooling")->capture_default_str();
  pert->add_option("--quantile", perturb_q, "level of the conditional spread quantile")->capture_default_str();
  pert->add_flag("--log1p", log1p, "absolute quantile deltas on the log(1 + value) scale");
  pert->add_option("--out", out, "output directory (default RUN/perturb_PREDICTOR_mMM)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::vector<std::string> echo(args.begin() + (args.empty() ? 0 : 1), args.end());
  try {
    if (sim->parsed()) return run_simulate(grid, months, seed, missing, out, echo);
    if (fit->parsed()) return run_fit(fit_opt, out, echo);
    if (boot->parsed()) return run_bootstrap(boot_opt, replicates, block, out, echo);
    if (diag->parsed()) return run_diagnose(run, out, seed, echo);
    if (pred->parsed()) return run_predict(run, quantile, month, year, log1p, out);
    if (pert->parsed()) return run_perturb(run, predictor, month, year, horizon, pool, perturb_q, log1p, out, echo);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int dispatch(int argc, char** argv) { return dispatch(std::vector<std::string>(argv, argv + argc)); }

}  // namespace pinnburn
