#include "pinnburn/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace pinnburn {

namespace {

Json doubles_with_nulls(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  return a;
}

std::vector<double> doubles_from(const Json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  return v;
}

void check_version(const Json& j, const char* what) {
  const int v = j.value("format_version", -1);
  if (v != kFormatVersion)
    throw std::runtime_error(std::string(what) + ": unsupported format_version " + std::to_string(v));
}

Json layers_json(const std::vector<LayerSpec>& layers) {
  Json a = Json::array();
  for (const auto& l : layers) a.push_back({{"kind", to_string(l.kind)}, {"width", l.width}});
  return a;
}

std::vector<LayerSpec> layers_from(const Json& a) {
  std::vector<LayerSpec> layers;
  for (const auto& l : a) layers.push_back({layer_kind_from_string(l.at("kind").get<std::string>()), l.at("width").get<int>()});
  return layers;
}

}  // namespace

Json to_json(const ParameterSurfaceModel& m) {
  Json terms = Json::array();
  for (const auto& t : m.spline.terms) terms.push_back({{"knots", t.knots}, {"linear", t.linear}, {"radial", t.radial}});
  return {{"target", to_string(m.target)},
          {"link", to_string(m.link)},
          {"offset", to_string(m.offset)},
          {"interpreted", m.interpreted},
          {"noninterpreted", m.noninterpreted},
          {"spline", terms},
          {"network",
           {{"n_inputs", m.net.n_inputs()},
            {"layers", layers_json(m.net.layers())},
            {"values", std::vector<double>(m.net.values().begin(), m.net.values().end())}}}};
}

ParameterSurfaceModel surface_model_from_json(const Json& j) {
  ParameterSurfaceModel m;
  m.target = surface_target_from_string(j.at("target").get<std::string>());
  m.link = link_kind_from_string(j.at("link").get<std::string>());
  m.offset = offset_mode_from_string(j.at("offset").get<std::string>());
  m.interpreted = j.at("interpreted").get<std::vector<std::string>>();
  m.noninterpreted = j.at("noninterpreted").get<std::vector<std::string>>();
  for (const auto& t : j.at("spline")) {
    SplineTerm term;
    term.knots = t.at("knots").get<std::vector<double>>();
    term.linear = t.at("linear").get<double>();
    term.radial = t.at("radial").get<std::vector<double>>();
    m.spline.terms.push_back(std::move(term));
  }
  const Json& net = j.at("network");
  m.net = NetworkWeights(net.at("n_inputs").get<int>(), layers_from(net.at("layers")));
  const auto values = net.at("values").get<std::vector<double>>();
  if (values.size() != m.net.size()) throw std::runtime_error("network weight count does not match its layers");
  std::copy(values.begin(), values.end(), m.net.values().begin());
  m.validate();
  return m;
}

Json to_json(const StandardizationSpec& s) { return {{"names", s.names}, {"mean", s.mean}, {"sd", s.sd}}; }

StandardizationSpec standardization_from_json(const Json& j) {
  StandardizationSpec s;
  s.names = j.at("names").get<std::vector<std::string>>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.sd = j.at("sd").get<std::vector<double>>();
  if (s.mean.size() != s.names.size() || s.sd.size() != s.names.size())
    throw std::runtime_error("standardization arrays differ in length");
  return s;
}

Json to_json(const FullBurntAreaModel& m) {
  return {{"format_version", kFormatVersion},
          {"p0", to_json(m.p0)},
          {"u", to_json(m.u)},
          {"pu", to_json(m.pu)},
          {"sigma", to_json(m.sigma)},
          {"xi", m.xi},
          {"bulk", {{"pooled_sorted", m.bulk.pooled_sorted}, {"n_nonexceedances", m.bulk.n_nonexceedances}}},
          {"standardization", to_json(m.standardization)}};
}

FullBurntAreaModel model_from_json(const Json& j) {
  check_version(j, "model");
  FullBurntAreaModel m;
  m.p0 = surface_model_from_json(j.at("p0"));
  m.u = surface_model_from_json(j.at("u"));
  m.pu = surface_model_from_json(j.at("pu"));
  m.sigma = surface_model_from_json(j.at("sigma"));
  m.xi = j.at("xi").get<double>();
  m.bulk.pooled_sorted = j.at("bulk").at("pooled_sorted").get<std::vector<double>>();
  m.bulk.n_nonexceedances = j.at("bulk").at("n_nonexceedances").get<std::size_t>();
  m.standardization = standardization_from_json(j.at("standardization"));
  return m;
}

Json to_json(const TrainLog& log) {
  return {{"train_loss", doubles_with_nulls(log.train_loss)},
          {"validation_loss", doubles_with_nulls(log.validation_loss)},
          {"best_epoch", log.best_epoch}};
}

TrainLog train_log_from_json(const Json& j) {
  TrainLog log;
  log.train_loss = doubles_from(j.at("train_loss"));
  log.validation_loss = doubles_from(j.at("validation_loss"));
  log.best_epoch = j.at("best_epoch").get<std::size_t>();
  return log;
}

Json to_json(const FitLogs& logs) {
  return {{"p0", to_json(logs.p0)}, {"u", to_json(logs.u)}, {"pu", to_json(logs.pu)}, {"sigma", to_json(logs.sigma)}};
}

FitLogs fit_logs_from_json(const Json& j) {
  return {train_log_from_json(j.at("p0")), train_log_from_json(j.at("u")), train_log_from_json(j.at("pu")),
          train_log_from_json(j.at("sigma"))};
}

Json to_json(const ArchitectureSpec& a) {
  return {{"layers", layers_json(a.layers)}, {"interpreted", a.interpreted}, {"knots", a.knots}};
}

ArchitectureSpec architecture_from_json(const Json& j) {
  return {layers_from(j.at("layers")), j.at("interpreted").get<std::vector<std::string>>(), j.at("knots").get<int>()};
}

Json to_json(const FitConfig& cfg) {
  Json arch = Json::object();
  for (const auto& [t, a] : cfg.architectures) arch[to_string(t)] = to_json(a);
  Json j = {{"tau", cfg.tau},
            {"epochs", cfg.epochs},
            {"seed", cfg.seed},
            {"architectures", arch},
            {"adam",
             {{"learning_rate", cfg.adam.learning_rate},
              {"beta1", cfg.adam.beta1},
              {"beta2", cfg.adam.beta2},
              {"epsilon", cfg.adam.epsilon}}},
            {"partition",
             {{"range_s_km", cfg.partition.range_s_km},
              {"range_t_months", cfg.partition.range_t_months},
              {"block_months", cfg.partition.block_months},
              {"lower", cfg.partition.lower},
              {"upper", cfg.partition.upper},
              {"seed", cfg.partition.seed}}},
            {"n_replicates", cfg.n_replicates},
            {"block_length", cfg.block_length},
            {"max_failure_fraction", cfg.max_failure_fraction}};
  j["interpreted"] = cfg.interpreted ? Json(*cfg.interpreted) : Json(nullptr);
  return j;
}

FitConfig fit_config_from_json(const Json& j) {
  FitConfig cfg;
  cfg.tau = j.at("tau").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("interpreted").is_null()) cfg.interpreted = j.at("interpreted").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("architectures").items())
    cfg.architectures[surface_target_from_string(k)] = architecture_from_json(v);
  const Json& a = j.at("adam");
  cfg.adam = {a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
              a.at("epsilon").get<double>()};
  const Json& p = j.at("partition");
  cfg.partition.range_s_km = p.at("range_s_km").get<double>();
  cfg.partition.range_t_months = p.at("range_t_months").get<double>();
  cfg.partition.block_months = p.at("block_months").get<std::size_t>();
  cfg.partition.lower = p.at("lower").get<double>();
  cfg.partition.upper = p.at("upper").get<double>();
  cfg.partition.seed = p.at("seed").get<std::uint64_t>();
  cfg.n_replicates = j.at("n_replicates").get<int>();
  cfg.block_length = j.at("block_length").get<double>();
  cfg.max_failure_fraction = j.at("max_failure_fraction").get<double>();
  return cfg;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

void save_model(const FullBurntAreaModel& m, const std::filesystem::path& path) { write_json(to_json(m), path); }

FullBurntAreaModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json(path));
  } catch (const Json::exception& e) {
    throw std::runtime_error("invalid model file " + path.string() + ": " + e.what());
  }
}

namespace {

std::string replicate_dir(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replicate_%04zu", r);
  return buf;
}

}  // namespace

void save_ensemble(const BootstrapEnsemble& ens, const FitConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json reps = Json::array();
  for (const auto& r : ens.replicates) {
    std::string split(r.partition.split.size(), '0');
    for (std::size_t c = 0; c < split.size(); ++c) split[c] = static_cast<char>('0' + static_cast<int>(r.partition.split[c]));
    Json e = {{"index", r.index},  {"seed", r.seed},   {"time_positions", r.time_positions},
              {"partition", split}, {"ok", r.ok()}, {"error", r.error}};
    if (r.ok()) {
      const auto sub = dir / replicate_dir(r.index);
      std::filesystem::create_directories(sub);
      save_model(*r.model, sub / "model.json");
      write_json(to_json(r.logs), sub / "logs.json");
      e["dir"] = replicate_dir(r.index);
    }
    reps.push_back(std::move(e));
  }
  write_json({{"format_version", kFormatVersion}, {"config", to_json(cfg)}, {"replicates", reps}},
             dir / "ensemble.json");
}

BootstrapEnsemble load_ensemble(const std::filesystem::path& dir, FitConfig* cfg) {
  const Json j = read_json(dir / "ensemble.json");
  check_version(j, "ensemble");
  if (cfg) *cfg = fit_config_from_json(j.at("config"));
  BootstrapEnsemble ens;
  for (const auto& e : j.at("replicates")) {
    Replicate r;
    r.index = e.at("index").get<std::size_t>();
    r.seed = e.at("seed").get<std::uint64_t>();
    r.time_positions = e.at("time_positions").get<std::vector<std::size_t>>();
    for (char ch : e.at("partition").get<std::string>()) {
      if (ch < '0' || ch > '3') throw std::runtime_error("bad partition code in ensemble.json");
      r.partition.split.push_back(static_cast<Split>(ch - '0'));
    }
    r.error = e.at("error").get<std::string>();
    if (e.at("ok").get<bool>()) {
      const auto sub = dir / e.at("dir").get<std::string>();
      r.model = load_model(sub / "model.json");
      r.logs = fit_logs_from_json(read_json(sub / "logs.json"));
    }
    ens.replicates.push_back(std::move(r));
  }
  return ens;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace pinnburn
