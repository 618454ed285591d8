#include "pinnburn/fit_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pinnburn/objectives.hpp"
#include "pinnburn/spline.hpp"

namespace pinnburn {

void FitConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (n_replicates < 1) throw std::invalid_argument("replicate count must be >= 1");
  if (!(block_length >= 1.0)) throw std::invalid_argument("expected block length must be >= 1");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction < 1.0))
    throw std::invalid_argument("max failure fraction must lie in [0,1)");
  partition.validate();
}

std::vector<std::string> FitConfig::interpreted_for(const GridDataset& ds) const {
  if (interpreted) return *interpreted;
  std::vector<std::string> out;
  for (std::size_t p = 0; p < ds.predictor_names.size(); ++p)
    if (ds.predictor_roles[p] == PredictorRole::interpreted) out.push_back(ds.predictor_names[p]);
  return out;
}

ArchitectureSpec FitConfig::architecture(SurfaceTarget target, const GridDataset& ds) const {
  auto it = architectures.find(target);
  if (it != architectures.end()) return it->second;
  return preset_architecture(target, interpreted_for(ds));
}

PreparedData prepare_training_data(const GridDataset& raw) {
  if (raw.has_predictor(kBurnablePredictor)) {
    auto [ds, spec] = standardize(raw);
    return {std::move(ds), std::move(spec)};
  }
  auto [ds, spec] = standardize(raw);
  // Burnable area is derived rather than supplied, so a panel with uniform
  // burnable area is valid. It is then only centered.
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < raw.n_cells(); ++c)
    if (raw.observed[c]) {
      sum += raw.burnable[c];
      ++n;
    }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t c = 0; c < raw.n_cells(); ++c)
    if (raw.observed[c]) ss += (raw.burnable[c] - mean) * (raw.burnable[c] - mean);
  double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) sd = 1.0;
  spec.names.emplace_back(kBurnablePredictor);
  spec.mean.push_back(mean);
  spec.sd.push_back(sd);
  return {apply_standardization(with_burnable_predictor(raw), spec), std::move(spec)};
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

using RowLoss = std::function<MaskedLossValue(std::span<const double> theta, std::span<const double> extra,
                                              std::span<const std::uint8_t> mask, std::span<double> dtheta,
                                              std::span<double> dextra)>;

struct TrainedSurface {
  TrainLog log;
  std::vector<double> extra;
};

std::vector<std::string> subset_names(const std::vector<std::string>& all, const std::vector<std::string>& interp) {
  for (const auto& n : interp)
    if (std::find(all.begin(), all.end(), n) == all.end())
      throw std::invalid_argument("interpreted predictor '" + n + "' is not in the dataset");
  return interp;
}

ParameterSurfaceModel build_model(SurfaceTarget target, const PreparedData& data, const FitConfig& cfg,
                                  std::uint64_t seed) {
  const ArchitectureSpec arch = cfg.architecture(target, data.ds);
  const auto interp = subset_names(data.ds.predictor_names, arch.interpreted);
  std::vector<std::vector<double>> knots;
  for (const auto& name : interp) {
    const auto& field = data.ds.predictors[data.ds.predictor_index(name)];
    std::vector<double> obs;
    for (std::size_t c = 0; c < field.size(); ++c)
      if (data.ds.observed[c]) obs.push_back(field[c]);
    knots.push_back(place_knots(obs, arch.knots));
  }
  return make_surface_model(target, interp, noninterpreted_for(target, data.ds.predictor_names, interp), arch.layers,
                            knots, seed);
}

TrainedSurface train_surface(ParameterSurfaceModel& model, const SurfaceInputs& inputs,
                             const std::vector<std::uint8_t>& train_mask, const std::vector<std::uint8_t>& val_mask,
                             std::vector<double> extra_init, const RowLoss& loss, const FitConfig& cfg) {
  const std::size_t n_model = model.n_params();
  const std::size_t n_extra = extra_init.size();
  std::vector<double> init = model.parameters();
  init.insert(init.end(), extra_init.begin(), extra_init.end());
  if (std::count(train_mask.begin(), train_mask.end(), 1) == 0) throw std::runtime_error("training split is empty");
  if (std::count(val_mask.begin(), val_mask.end(), 1) == 0) throw std::runtime_error("validation split is empty");

  ParameterSurfaceModel work = model;
  const auto n_rows = static_cast<std::size_t>(inputs.offset.size());
  std::vector<double> dtheta(n_rows);
  std::vector<double> dextra(n_extra);

  EpochObjective objective = [&](std::span<const double> params, std::span<double> grad) -> EpochLosses {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
      work.set_parameters(params.first(n_model));
      const auto extra = params.subspan(n_model);
      const bool want_grad = !grad.empty();
      const SurfaceEval ev = evaluate_surface(work, inputs, want_grad);
      std::span<const double> theta(ev.theta.data(), n_rows);
      std::fill(dtheta.begin(), dtheta.end(), 0.0);
      std::fill(dextra.begin(), dextra.end(), 0.0);
      const MaskedLossValue tr =
          loss(theta, extra, train_mask, want_grad ? std::span<double>(dtheta) : std::span<double>{},
               want_grad ? std::span<double>(dextra) : std::span<double>{});
      const MaskedLossValue va = loss(theta, extra, val_mask, {}, {});
      if (tr.n_contributing == 0 || va.n_contributing == 0) return {nan, nan};
      if (want_grad) {
        const double scale = 1.0 / static_cast<double>(tr.n_contributing);
        Eigen::VectorXd up(static_cast<Eigen::Index>(n_rows));
        for (std::size_t i = 0; i < n_rows; ++i) up(static_cast<Eigen::Index>(i)) = dtheta[i] * scale;
        const std::vector<double> g = surface_gradient(work, inputs, ev, up);
        std::copy(g.begin(), g.end(), grad.begin());
        for (std::size_t k = 0; k < n_extra; ++k) grad[n_model + k] = dextra[k] * scale;
      }
      return {tr.mean(), va.mean()};
    } catch (const std::exception&) {
      return {nan, nan};
    }
  };

  TrainResult result = train(std::move(init), objective, cfg.epochs, cfg.adam);
  model.set_parameters(std::span<const double>(result.params).first(n_model));
  TrainedSurface out;
  out.log = std::move(result.log);
  out.extra.assign(result.params.begin() + static_cast<std::ptrdiff_t>(n_model), result.params.end());

  // Reject a selected epoch whose loss only stayed finite through the log floor.
  const SurfaceEval ev = evaluate_surface(model, inputs);
  const MaskedLossValue check =
      loss(std::span<const double>(ev.theta.data(), n_rows), out.extra, train_mask, {}, {});
  if (check.clamped > 0)
    throw std::runtime_error("loss log-argument floor was hit at the selected epoch (" +
                             std::to_string(check.clamped) + " cells)");
  return out;
}

std::vector<std::uint8_t> split_mask(const GridDataset& ds, const PartitionAssignment& part, Split which) {
  std::vector<std::uint8_t> m(ds.n_cells());
  for (std::size_t c = 0; c < m.size(); ++c) m[c] = ds.observed[c] && part.split[c] == which ? 1 : 0;
  return m;
}

template <class Fn>
auto with_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(stage + ": " + e.what());
  }
}

void check_partition(const GridDataset& ds, const PartitionAssignment& part) {
  if (part.split.size() != ds.n_cells()) throw std::invalid_argument("partition does not match dataset");
  for (std::size_t c = 0; c < ds.n_cells(); ++c)
    if (ds.observed[c] && part.split[c] == Split::none)
      throw std::invalid_argument("partition leaves an observed cell unassigned");
}

}  // namespace

std::vector<double> evaluate_all(const ParameterSurfaceModel& model, const GridDataset& prepared) {
  const SurfaceEval ev = evaluate_surface(model, gather_all(model, prepared));
  return {ev.theta.data(), ev.theta.data() + ev.theta.size()};
}

SurfaceFit fit_occurrence(const PreparedData& data, const PartitionAssignment& part, const FitConfig& cfg,
                          std::uint64_t seed) {
  return with_stage("stage 1 (p0)", [&] {
    check_partition(data.ds, part);
    const auto& ds = data.ds;
    SurfaceFit fit{build_model(SurfaceTarget::p0, data, cfg, seed), {}};
    const auto train_mask = split_mask(ds, part, Split::train);
    const auto val_mask = split_mask(ds, part, Split::validation);
    std::vector<double> z(ds.n_cells());
    double fires = 0.0, n = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      z[c] = ds.observed[c] && ds.response[c] > 0.0 ? 1.0 : 0.0;
      if (train_mask[c]) {
        fires += z[c];
        n += 1.0;
      }
    }
    if (n > 0) fit.model.net.output_bias() = logit(std::clamp(fires / n, 1e-4, 1.0 - 1e-4));
    const SurfaceInputs inputs = gather_all(fit.model, ds);
    RowLoss loss = [&](std::span<const double> theta, std::span<const double>, std::span<const std::uint8_t> mask,
                       std::span<double> dtheta, std::span<double>) { return bernoulli_loss(theta, z, mask, dtheta); };
    fit.log = train_surface(fit.model, inputs, train_mask, val_mask, {}, loss, cfg).log;
    return fit;
  });
}

SurfaceFit fit_threshold(const PreparedData& data, const PartitionAssignment& part, const FitConfig& cfg,
                         std::uint64_t seed) {
  return with_stage("stage 1 (u)", [&] {
    check_partition(data.ds, part);
    const auto& ds = data.ds;
    SurfaceFit fit{build_model(SurfaceTarget::u, data, cfg, seed), {}};
    const auto train_mask = split_mask(ds, part, Split::train);
    const auto val_mask = split_mask(ds, part, Split::validation);
    std::vector<double> ratios;
    for (std::size_t c = 0; c < ds.n_cells(); ++c)
      if (train_mask[c] && ds.response[c] > 0.0) ratios.push_back(ds.response[c] / ds.burnable[c]);
    if (ratios.empty()) throw std::runtime_error("no non-zero responses in the training split");
    fit.model.net.output_bias() = std::log(std::max(empirical_quantile(ratios, cfg.tau), 1e-12));
    const SurfaceInputs inputs = gather_all(fit.model, ds);
    const double tau = cfg.tau;
    RowLoss loss = [&](std::span<const double> theta, std::span<const double>, std::span<const std::uint8_t> mask,
                       std::span<double> dtheta, std::span<double>) {
      return quantile_loss(theta, ds.response, tau, mask, dtheta);
    };
    fit.log = train_surface(fit.model, inputs, train_mask, val_mask, {}, loss, cfg).log;
    return fit;
  });
}

namespace {

// Rows for the stage-2 dense models: observed train/validation cells passing `keep`.
template <class Keep>
std::vector<std::size_t> stage2_cells(const GridDataset& ds, const PartitionAssignment& part, Keep keep) {
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < ds.n_cells(); ++c) {
    if (!ds.observed[c]) continue;
    if (part.split[c] != Split::train && part.split[c] != Split::validation) continue;
    if (keep(c)) cells.push_back(c);
  }
  return cells;
}

SurfaceInputs stage2_inputs(const ParameterSurfaceModel& model, const GridDataset& ds,
                            const std::vector<std::size_t>& cells) {
  if (model.net.has_conv()) return gather_slices(model, ds, [&] {
      std::vector<std::size_t> t(ds.n_times());
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = i;
      return t;
    }());
  return gather_cells(model, ds, cells);
}

}  // namespace

SurfaceFit fit_exceedance_probability(const PreparedData& data, const PartitionAssignment& part,
                                      const FitConfig& cfg, std::span<const double> u_field, std::uint64_t seed) {
  return with_stage("stage 2 (pu)", [&] {
    check_partition(data.ds, part);
    const auto& ds = data.ds;
    if (u_field.size() != ds.n_cells()) throw std::invalid_argument("threshold field does not match dataset");
    SurfaceFit fit{build_model(SurfaceTarget::pu, data, cfg, seed), {}};
    const auto cells = stage2_cells(ds, part, [&](std::size_t c) { return ds.response[c] > 0.0; });
    const SurfaceInputs inputs = stage2_inputs(fit.model, ds, cells);
    const std::size_t n = inputs.cells.size();
    std::vector<double> z(n);
    std::vector<std::uint8_t> train_mask(n), val_mask(n);
    double hits = 0.0, n_train = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = inputs.cells[i];
      const bool positive = ds.observed[c] && ds.response[c] > 0.0;
      z[i] = positive && ds.response[c] > u_field[c] ? 1.0 : 0.0;
      train_mask[i] = positive && part.split[c] == Split::train;
      val_mask[i] = positive && part.split[c] == Split::validation;
      if (train_mask[i]) {
        hits += z[i];
        n_train += 1.0;
      }
    }
    if (n_train > 0) fit.model.net.output_bias() = logit(std::clamp(hits / n_train, 1e-4, 1.0 - 1e-4));
    RowLoss loss = [&](std::span<const double> theta, std::span<const double>, std::span<const std::uint8_t> mask,
                       std::span<double> dtheta, std::span<double>) { return bernoulli_loss(theta, z, mask, dtheta); };
    fit.log = train_surface(fit.model, inputs, train_mask, val_mask, {}, loss, cfg).log;
    return fit;
  });
}

GpdFit fit_gpd(const PreparedData& data, const PartitionAssignment& part, const FitConfig& cfg,
               std::span<const double> u_field, std::uint64_t seed) {
  return with_stage("stage 2 (sigma, xi)", [&] {
    check_partition(data.ds, part);
    const auto& ds = data.ds;
    if (u_field.size() != ds.n_cells()) throw std::invalid_argument("threshold field does not match dataset");
    GpdFit fit{build_model(SurfaceTarget::sigma, data, cfg, seed), 0.5, {}};
    const auto cells = stage2_cells(ds, part, [&](std::size_t c) { return ds.response[c] > u_field[c]; });
    const SurfaceInputs inputs = stage2_inputs(fit.sigma, ds, cells);
    const std::size_t n = inputs.cells.size();
    std::vector<double> y(n), u(n);
    std::vector<std::uint8_t> train_mask(n), val_mask(n);
    std::vector<double> scaled_excess, scaled_u;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = inputs.cells[i];
      y[i] = ds.response[c];
      u[i] = u_field[c];
      const bool exceed = ds.observed[c] && ds.response[c] > u_field[c];
      train_mask[i] = exceed && part.split[c] == Split::train;
      val_mask[i] = exceed && part.split[c] == Split::validation;
      if (train_mask[i]) {
        scaled_excess.push_back((y[i] - u[i]) / ds.burnable[c]);
        scaled_u.push_back(u[i] / ds.burnable[c]);
      }
    }
    if (scaled_excess.empty()) throw std::runtime_error("no exceedances in the training split");

    // Method-of-moments start for (sigma_u, xi) on burnable-scaled excesses.
    double m = 0.0, v = 0.0;
    for (double e : scaled_excess) m += e;
    m /= static_cast<double>(scaled_excess.size());
    for (double e : scaled_excess) v += (e - m) * (e - m);
    v /= static_cast<double>(scaled_excess.size());
    double xi0 = v > 0.0 ? 0.5 * (1.0 - m * m / v) : 0.1;
    xi0 = std::clamp(xi0, 0.05, 0.8);
    const double su0 = m * (1.0 - xi0);
    double level = 0.0;
    for (double su : scaled_u) level += su0 - xi0 * su;
    level /= static_cast<double>(scaled_u.size());
    if (!(level > 0.0)) level = 0.1 * su0;
    fit.sigma.net.output_bias() = std::log(std::max(level, 1e-12));

    RowLoss loss = [&](std::span<const double> theta, std::span<const double> extra,
                       std::span<const std::uint8_t> mask, std::span<double> dtheta, std::span<double> dextra) {
      const double xi = shape_from_raw(extra[0]);
      double dxi = 0.0;
      GpdGradients g;
      if (!dtheta.empty()) {
        g.sigma = dtheta;
        g.xi = &dxi;
      }
      const MaskedLossValue val = gpd_nll(y, u, theta, xi, mask, g);
      if (!dextra.empty()) dextra[0] = dxi * shape_raw_derivative(extra[0]);
      return val;
    };
    const auto trained = train_surface(fit.sigma, inputs, train_mask, val_mask, {raw_from_shape(xi0)}, loss, cfg);
    fit.log = trained.log;
    fit.xi = shape_from_raw(trained.extra[0]);
    return fit;
  });
}

FitResult fit_full_model(const GridDataset& raw, const PartitionAssignment& part, const FitConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  const PreparedData data = prepare_training_data(raw);
  FitResult out;
  SurfaceFit p0 = fit_occurrence(data, part, cfg, derive_seed(seed, 11));
  SurfaceFit u = fit_threshold(data, part, cfg, derive_seed(seed, 12));
  const std::vector<double> u_field = evaluate_all(u.model, data.ds);
  SurfaceFit pu = fit_exceedance_probability(data, part, cfg, u_field, derive_seed(seed, 13));
  GpdFit gpd = fit_gpd(data, part, cfg, u_field, derive_seed(seed, 14));

  std::vector<std::uint8_t> train_mask(data.ds.n_cells());
  for (std::size_t c = 0; c < train_mask.size(); ++c)
    train_mask[c] = data.ds.observed[c] && part.split[c] == Split::train ? 1 : 0;
  out.model.bulk = EmpiricalBulk::build(data.ds.response, u_field, train_mask);
  if (out.model.bulk.n_nonexceedances == 0) throw std::runtime_error("no non-exceedances in the training split");

  out.model.p0 = std::move(p0.model);
  out.model.u = std::move(u.model);
  out.model.pu = std::move(pu.model);
  out.model.sigma = std::move(gpd.sigma);
  out.model.xi = gpd.xi;
  out.model.standardization = data.spec;
  out.logs = {std::move(p0.log), std::move(u.log), std::move(pu.log), std::move(gpd.log)};
  return out;
}

std::vector<BootstrapBlock> stationary_bootstrap_blocks(std::size_t n_times, double expected_block,
                                                        std::uint64_t seed) {
  if (n_times == 0) throw std::invalid_argument("cannot resample an empty time axis");
  if (!(expected_block >= 1.0)) throw std::invalid_argument("expected block length must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> start(0, n_times - 1);
  std::geometric_distribution<long> extra(std::min(1.0 / expected_block, 1.0));
  std::vector<BootstrapBlock> blocks;
  std::size_t total = 0;
  while (total < n_times) {
    BootstrapBlock b;
    b.start = start(rng);
    b.length = expected_block <= 1.0 ? 1 : 1 + static_cast<std::size_t>(extra(rng));
    total += b.length;
    blocks.push_back(b);
  }
  return blocks;
}

std::vector<std::size_t> stationary_bootstrap_resample(std::size_t n_times, double expected_block,
                                                       std::uint64_t seed) {
  std::vector<std::size_t> out;
  out.reserve(n_times);
  for (const auto& b : stationary_bootstrap_blocks(n_times, expected_block, seed))
    for (std::size_t k = 0; k < b.length && out.size() < n_times; ++k) out.push_back((b.start + k) % n_times);
  return out;
}

std::size_t BootstrapEnsemble::n_ok() const {
  return static_cast<std::size_t>(
      std::count_if(replicates.begin(), replicates.end(), [](const Replicate& r) { return r.ok(); }));
}

std::uint64_t replicate_seed(std::uint64_t run_seed, std::size_t r) { return derive_seed(run_seed, 1000 + r); }

Replicate run_replicate(const GridDataset& raw, const FitConfig& cfg, std::size_t r) {
  Replicate rep;
  rep.index = r;
  rep.seed = replicate_seed(cfg.seed, r);
  rep.time_positions = stationary_bootstrap_resample(raw.n_times(), cfg.block_length, derive_seed(rep.seed, 1));
  try {
    const GridDataset sample = resample_times(raw, rep.time_positions);
    PartitionSpec ps = cfg.partition;
    ps.seed = derive_seed(rep.seed, 2);
    rep.partition = assign_partition(sample, ps);
    FitResult fit = fit_full_model(sample, rep.partition, cfg, derive_seed(rep.seed, 3));
    rep.model = std::move(fit.model);
    rep.logs = std::move(fit.logs);
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  return rep;
}

BootstrapEnsemble run_ensemble(const GridDataset& raw, const FitConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  BootstrapEnsemble ens;
  const auto n = static_cast<std::size_t>(cfg.n_replicates);
  for (std::size_t r = 0; r < n; ++r) {
    ens.replicates.push_back(run_replicate(raw, cfg, r));
    if (progress) {
      const auto& rep = ens.replicates.back();
      progress("replicate " + std::to_string(r + 1) + "/" + std::to_string(n) +
               (rep.ok() ? " fitted" : " failed: " + rep.error));
    }
  }
  const std::size_t failed = n - ens.n_ok();
  if (static_cast<double>(failed) > cfg.max_failure_fraction * static_cast<double>(n))
    throw std::runtime_error(std::to_string(failed) + " of " + std::to_string(n) +
                             " bootstrap replicates failed; first error: " +
                             std::find_if(ens.replicates.begin(), ens.replicates.end(), [](const Replicate& r) {
                               return !r.ok();
                             })->error);
  return ens;
}

Envelope pointwise_envelope(const std::vector<std::vector<double>>& fields, double lower, double upper) {
  Envelope env;
  if (fields.empty()) return env;
  const std::size_t n = fields.front().size();
  env.median.resize(n);
  env.lower.resize(n);
  env.upper.resize(n);
  std::vector<double> column(fields.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < fields.size(); ++r) column[r] = fields[r].at(i);
    env.median[i] = empirical_quantile(column, 0.5);
    env.lower[i] = empirical_quantile(column, lower);
    env.upper[i] = empirical_quantile(column, upper);
  }
  return env;
}

std::vector<std::vector<double>> centered_curves(const std::vector<const ParameterSurfaceModel*>& models,
                                                 const std::vector<const StandardizationSpec*>& specs,
                                                 const std::string& predictor, const std::vector<double>& grid,
                                                 double median_raw) {
  std::vector<std::vector<double>> curves;
  for (std::size_t r = 0; r < models.size(); ++r) {
    const auto& m = *models[r];
    const auto& spec = *specs[r];
    const auto it = std::find(m.interpreted.begin(), m.interpreted.end(), predictor);
    if (it == m.interpreted.end()) throw std::invalid_argument("'" + predictor + "' is not interpreted in this model");
    const auto j = static_cast<std::size_t>(it - m.interpreted.begin());
    const std::size_t si = spec.index_of(predictor);
    const auto curve = center_at_median(m.spline, j, spec.apply(si, median_raw));
    std::vector<double> values;
    values.reserve(grid.size());
    for (double x : grid) values.push_back(curve(spec.apply(si, x)));
    curves.push_back(std::move(values));
  }
  return curves;
}

}  // namespace pinnburn
