#include "pinnburn/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pinnburn {

std::string to_string(LinkKind k) { return k == LinkKind::logistic ? "logistic" : "exponential"; }
std::string to_string(OffsetMode m) { return m == OffsetMode::unit ? "unit" : "burnable"; }

std::string to_string(SurfaceTarget t) {
  switch (t) {
    case SurfaceTarget::p0: return "p0";
    case SurfaceTarget::u: return "u";
    case SurfaceTarget::pu: return "pu";
    case SurfaceTarget::sigma: return "sigma";
  }
  return "?";
}

LinkKind link_kind_from_string(const std::string& s) {
  if (s == "logistic") return LinkKind::logistic;
  if (s == "exponential") return LinkKind::exponential;
  throw std::invalid_argument("unknown link '" + s + "'");
}

OffsetMode offset_mode_from_string(const std::string& s) {
  if (s == "unit") return OffsetMode::unit;
  if (s == "burnable") return OffsetMode::burnable;
  throw std::invalid_argument("unknown offset mode '" + s + "'");
}

SurfaceTarget surface_target_from_string(const std::string& s) {
  if (s == "p0") return SurfaceTarget::p0;
  if (s == "u") return SurfaceTarget::u;
  if (s == "pu") return SurfaceTarget::pu;
  if (s == "sigma") return SurfaceTarget::sigma;
  throw std::invalid_argument("unknown surface target '" + s + "'");
}

double apply_link(LinkKind link, double x) {
  return link == LinkKind::logistic ? 0.5 + 0.5 * std::tanh(0.5 * x) : std::exp(x);
}

double link_derivative(LinkKind link, double h) { return link == LinkKind::logistic ? h * (1.0 - h) : h; }

LinkKind link_for(SurfaceTarget target) {
  return target == SurfaceTarget::p0 || target == SurfaceTarget::pu ? LinkKind::logistic : LinkKind::exponential;
}

OffsetMode offset_for(SurfaceTarget target) {
  return target == SurfaceTarget::p0 || target == SurfaceTarget::pu ? OffsetMode::unit : OffsetMode::burnable;
}

ArchitectureSpec preset_architecture(SurfaceTarget target, const std::vector<std::string>& interpreted) {
  ArchitectureSpec a;
  switch (target) {
    case SurfaceTarget::p0:
      a.layers.assign(5, {LayerKind::conv3x3, 16});
      a.interpreted = interpreted;
      a.knots = 10;
      break;
    case SurfaceTarget::u:
      a.layers.assign(2, {LayerKind::conv3x3, 4});
      break;
    case SurfaceTarget::pu:
      a.layers.assign(5, {LayerKind::dense, 16});
      break;
    case SurfaceTarget::sigma:
      a.layers.assign(4, {LayerKind::dense, 10});
      a.interpreted = interpreted;
      a.knots = 6;
      break;
  }
  return a;
}

std::vector<double> ParameterSurfaceModel::parameters() const {
  std::vector<double> p(n_params());
  std::copy(net.values().begin(), net.values().end(), p.begin());
  pack_coefficients(spline, std::span<double>(p).subspan(net.size()));
  return p;
}

void ParameterSurfaceModel::set_parameters(std::span<const double> params) {
  if (params.size() != n_params()) throw std::invalid_argument("parameter vector has wrong length");
  std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(net.size()), net.values().begin());
  unpack_coefficients(spline, params.subspan(net.size()));
}

void ParameterSurfaceModel::validate() const {
  std::set<std::string> a(interpreted.begin(), interpreted.end());
  for (const auto& n : noninterpreted)
    if (a.count(n)) throw std::invalid_argument("predictor '" + n + "' is both interpreted and non-interpreted");
  if (spline.terms.size() != interpreted.size())
    throw std::invalid_argument("spline block must have one term per interpreted predictor");
  spline.validate();
  if (net.n_inputs() != static_cast<int>(noninterpreted.size()))
    throw std::invalid_argument("network input count differs from non-interpreted predictor count");
  if (link != link_for(target) || offset != offset_for(target))
    throw std::invalid_argument("link/offset do not match target " + to_string(target));
  for (double v : net.values())
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite network weight");
}

std::vector<std::string> noninterpreted_for(SurfaceTarget target, const std::vector<std::string>& predictor_names,
                                            const std::vector<std::string>& interpreted) {
  std::vector<std::string> out;
  for (const auto& n : predictor_names) {
    if (n == kBurnablePredictor) continue;
    if (std::find(interpreted.begin(), interpreted.end(), n) == interpreted.end()) out.push_back(n);
  }
  if (offset_for(target) == OffsetMode::unit) out.emplace_back(kBurnablePredictor);
  return out;
}

ParameterSurfaceModel make_surface_model(SurfaceTarget target, std::vector<std::string> interpreted,
                                         std::vector<std::string> noninterpreted, const std::vector<LayerSpec>& layers,
                                         const std::vector<std::vector<double>>& knots, std::uint64_t seed) {
  ParameterSurfaceModel m;
  m.target = target;
  m.link = link_for(target);
  m.offset = offset_for(target);
  m.interpreted = std::move(interpreted);
  m.noninterpreted = std::move(noninterpreted);
  if (knots.size() != m.interpreted.size()) throw std::invalid_argument("need one knot vector per interpreted predictor");
  for (const auto& k : knots) m.spline.terms.push_back(make_term(k));
  m.net = NetworkWeights(static_cast<int>(m.noninterpreted.size()), layers);
  m.net.glorot_init(seed);
  m.validate();
  return m;
}

namespace {

SurfaceInputs gather_rows(const ParameterSurfaceModel& model, const GridDataset& ds,
                          std::vector<std::size_t> cells) {
  SurfaceInputs in;
  const auto n = static_cast<Eigen::Index>(cells.size());
  std::vector<std::size_t> net_idx, int_idx;
  for (const auto& name : model.noninterpreted) net_idx.push_back(ds.predictor_index(name));
  for (const auto& name : model.interpreted) int_idx.push_back(ds.predictor_index(name));
  in.network.resize(n, static_cast<Eigen::Index>(net_idx.size()));
  in.interpreted.resize(n, static_cast<Eigen::Index>(int_idx.size()));
  in.offset.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t c = cells[static_cast<std::size_t>(r)];
    for (std::size_t k = 0; k < net_idx.size(); ++k)
      in.network(r, static_cast<Eigen::Index>(k)) = ds.predictors[net_idx[k]][c];
    for (std::size_t k = 0; k < int_idx.size(); ++k)
      in.interpreted(r, static_cast<Eigen::Index>(k)) = ds.predictors[int_idx[k]][c];
    in.offset(r) = model.offset == OffsetMode::unit ? 1.0 : ds.burnable[c];
  }
  in.cells = std::move(cells);
  return in;
}

}  // namespace

SurfaceInputs gather_slices(const ParameterSurfaceModel& model, const GridDataset& ds,
                            std::span<const std::size_t> time_positions) {
  std::vector<std::size_t> cells;
  cells.reserve(time_positions.size() * ds.n_sites());
  for (auto t : time_positions)
    for (std::size_t s = 0; s < ds.n_sites(); ++s) cells.push_back(ds.cell(t, s));
  SurfaceInputs in = gather_rows(model, ds, std::move(cells));
  in.grid = {ds.rows, ds.cols};
  return in;
}

SurfaceInputs gather_all(const ParameterSurfaceModel& model, const GridDataset& ds) {
  std::vector<std::size_t> times(ds.n_times());
  std::iota(times.begin(), times.end(), std::size_t{0});
  return gather_slices(model, ds, times);
}

SurfaceInputs gather_cells(const ParameterSurfaceModel& model, const GridDataset& ds,
                           std::span<const std::size_t> cells) {
  if (model.net.has_conv()) throw std::invalid_argument("convolutional surfaces need whole time slices");
  return gather_rows(model, ds, std::vector<std::size_t>(cells.begin(), cells.end()));
}

SurfaceEval evaluate_surface(const ParameterSurfaceModel& model, const SurfaceInputs& inputs, bool keep_cache) {
  SurfaceEval ev;
  const Eigen::Index n = inputs.offset.size();
  ev.network_part = forward(model.net, inputs.network, inputs.grid, keep_cache ? &ev.cache : nullptr);
  ev.spline_part = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < model.spline.terms.size(); ++j)
    for (Eigen::Index r = 0; r < n; ++r)
      ev.spline_part(r) += eval_spline(model.spline, j, inputs.interpreted(r, static_cast<Eigen::Index>(j)));
  ev.pre_link = ev.spline_part + ev.network_part;
  ev.link_value.resize(n);
  ev.theta.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    ev.link_value(r) = apply_link(model.link, ev.pre_link(r));
    ev.theta(r) = inputs.offset(r) * ev.link_value(r);
    if (!std::isfinite(ev.theta(r)))
      throw std::runtime_error("non-finite " + to_string(model.target) + " surface value at cell " +
                               std::to_string(inputs.cells.empty() ? 0 : inputs.cells[static_cast<std::size_t>(r)]));
  }
  return ev;
}

std::vector<double> surface_gradient(const ParameterSurfaceModel& model, const SurfaceInputs& inputs,
                                     const SurfaceEval& eval, const Eigen::VectorXd& upstream) {
  const Eigen::Index n = upstream.size();
  Eigen::VectorXd d_pre(n);
  for (Eigen::Index r = 0; r < n; ++r)
    d_pre(r) = upstream(r) * inputs.offset(r) * link_derivative(model.link, eval.link_value(r));
  std::vector<double> grad = backward(model.net, eval.cache, inputs.grid, d_pre);
  grad.resize(model.n_params(), 0.0);
  std::size_t off = model.net.size();
  std::vector<double> basis;
  for (std::size_t j = 0; j < model.spline.terms.size(); ++j) {
    const auto& term = model.spline.terms[j];
    basis.assign(term.n_coefficients(), 0.0);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (d_pre(r) == 0.0) continue;
      spline_basis(term, inputs.interpreted(r, static_cast<Eigen::Index>(j)), basis);
      for (std::size_t k = 0; k < basis.size(); ++k) grad[off + k] += d_pre(r) * basis[k];
    }
    off += term.n_coefficients();
  }
  return grad;
}

std::vector<double> eval_surface(const ParameterSurfaceModel& model, const GridDataset& ds, std::size_t time_pos) {
  const std::size_t t[] = {time_pos};
  const SurfaceInputs in = gather_slices(model, ds, t);
  const SurfaceEval ev = evaluate_surface(model, in);
  return {ev.theta.data(), ev.theta.data() + ev.theta.size()};
}

}  // namespace pinnburn
