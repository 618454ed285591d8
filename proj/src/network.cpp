#include "pinnburn/network.hpp"

#include <malloc.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pinnburn {

std::string to_string(LayerKind kind) { return kind == LayerKind::dense ? "dense" : "conv3x3"; }

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "dense") return LayerKind::dense;
  if (s == "conv3x3") return LayerKind::conv3x3;
  throw NetworkError("unknown layer kind '" + s + "'");
}

NetworkWeights::NetworkWeights(int n_inputs, std::vector<LayerSpec> layers)
    : n_inputs_(n_inputs), layers_(std::move(layers)) {
  if (n_inputs_ < 0) throw NetworkError("negative input count");
  std::size_t off = 0;
  int prev = n_inputs_;
  for (const auto& l : layers_) {
    if (l.width < 1) throw NetworkError("layer width must be >= 1");
    const int fan = l.kind == LayerKind::dense ? prev : 9 * prev;
    kernel_offset_.push_back(off);
    off += static_cast<std::size_t>(fan) * static_cast<std::size_t>(l.width);
    bias_offset_.push_back(off);
    off += static_cast<std::size_t>(l.width);
    prev = l.width;
  }
  out_w_offset_ = off;
  off += static_cast<std::size_t>(prev);
  out_b_offset_ = off;
  off += 1;
  values_.assign(off, 0.0);
}

bool NetworkWeights::has_conv() const {
  return std::any_of(layers_.begin(), layers_.end(), [](const LayerSpec& l) { return l.kind == LayerKind::conv3x3; });
}

int NetworkWeights::fan_in(std::size_t layer) const {
  const int prev = layer == 0 ? n_inputs_ : layers_[layer - 1].width;
  return layers_[layer].kind == LayerKind::dense ? prev : 9 * prev;
}

Eigen::Map<RowMatrix> NetworkWeights::kernel(std::size_t layer) {
  return {values_.data() + kernel_offset_[layer], fan_in(layer), layers_[layer].width};
}

Eigen::Map<const RowMatrix> NetworkWeights::kernel(std::size_t layer) const {
  return {values_.data() + kernel_offset_[layer], fan_in(layer), layers_[layer].width};
}

Eigen::Map<Eigen::VectorXd> NetworkWeights::bias(std::size_t layer) {
  return {values_.data() + bias_offset_[layer], layers_[layer].width};
}

Eigen::Map<const Eigen::VectorXd> NetworkWeights::bias(std::size_t layer) const {
  return {values_.data() + bias_offset_[layer], layers_[layer].width};
}

Eigen::Map<Eigen::VectorXd> NetworkWeights::output_weights() {
  return {values_.data() + out_w_offset_, static_cast<Eigen::Index>(out_b_offset_ - out_w_offset_)};
}

Eigen::Map<const Eigen::VectorXd> NetworkWeights::output_weights() const {
  return {values_.data() + out_w_offset_, static_cast<Eigen::Index>(out_b_offset_ - out_w_offset_)};
}

void NetworkWeights::glorot_init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(values_.begin(), values_.end(), 0.0);
  int prev = n_inputs_;
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const int receptive = layers_[j].kind == LayerKind::dense ? 1 : 9;
    const double limit = std::sqrt(6.0 / (receptive * prev + receptive * layers_[j].width));
    std::uniform_real_distribution<double> u(-limit, limit);
    auto k = kernel(j);
    for (Eigen::Index r = 0; r < k.rows(); ++r)
      for (Eigen::Index c = 0; c < k.cols(); ++c) k(r, c) = u(rng);
    prev = layers_[j].width;
  }
  const double limit = std::sqrt(6.0 / (prev + 1));
  std::uniform_real_distribution<double> u(-limit, limit);
  auto w = output_weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
}

namespace {

void check_grid(const RowMatrix& m, const GridShape& grid) {
  if (!grid.has_grid()) throw NetworkError("convolutional layer requires grid-structured inputs");
  if (m.rows() % static_cast<Eigen::Index>(grid.slice_size()) != 0)
    throw NetworkError("input rows are not a whole number of grid slices");
}

// Adds each row block of `dcol` back onto the neighbours it was gathered from.
void col2im3x3_add(const RowMatrix& dcol, const GridShape& grid, RowMatrix& out) {
  const Eigen::Index channels = out.cols();
  const int R = grid.rows, C = grid.cols;
  const auto slice = static_cast<Eigen::Index>(grid.slice_size());
  const Eigen::Index n_slices = out.rows() / slice;
  for (Eigen::Index sl = 0; sl < n_slices; ++sl) {
    const Eigen::Index base = sl * slice;
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < C; ++c) {
        const Eigen::Index row = base + r * C + c;
        for (int k = 0; k < 9; ++k) {
          const int rr = r + k / 3 - 1, cc = c + k % 3 - 1;
          if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
          out.row(base + rr * C + cc) += dcol.block(row, k * channels, 1, channels);
        }
      }
    }
  }
}

}  // namespace

// Training reallocates the same large im2col and activation buffers every
// epoch; serving them from the heap instead of fresh mmaps avoids page-fault
// churn that otherwise doubles wall time.
[[maybe_unused]] const bool kHeapOnlyLargeAllocations = [] {
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
  return true;
}();

RowMatrix im2col3x3(const RowMatrix& input, const GridShape& grid) {
  check_grid(input, grid);
  const Eigen::Index channels = input.cols();
  const int R = grid.rows, C = grid.cols;
  const auto slice = static_cast<Eigen::Index>(grid.slice_size());
  const Eigen::Index n_slices = input.rows() / slice;
  RowMatrix col = RowMatrix::Zero(input.rows(), 9 * channels);
  for (Eigen::Index sl = 0; sl < n_slices; ++sl) {
    const Eigen::Index base = sl * slice;
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < C; ++c) {
        const Eigen::Index row = base + r * C + c;
        for (int k = 0; k < 9; ++k) {
          const int rr = r + k / 3 - 1, cc = c + k % 3 - 1;
          if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
          col.block(row, k * channels, 1, channels) = input.row(base + rr * C + cc);
        }
      }
    }
  }
  return col;
}

Eigen::VectorXd forward(const NetworkWeights& weights, const RowMatrix& inputs, const GridShape& grid,
                        ForwardCache* cache) {
  if (inputs.cols() != weights.n_inputs())
    throw NetworkError("network expects " + std::to_string(weights.n_inputs()) + " inputs, got " +
                       std::to_string(inputs.cols()));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(inputs);
  }
  RowMatrix current = inputs;
  const auto& layers = weights.layers();
  for (std::size_t j = 0; j < layers.size(); ++j) {
    RowMatrix z;
    if (layers[j].kind == LayerKind::dense) {
      z.noalias() = current * weights.kernel(j);
    } else {
      const RowMatrix col = im2col3x3(current, grid);
      z.noalias() = col * weights.kernel(j);
    }
    z.rowwise() += weights.bias(j).transpose();
    current = z.cwiseMax(0.0);
    if (!current.allFinite()) throw NetworkError("non-finite activation in layer " + std::to_string(j + 1));
    if (cache) cache->activations.push_back(current);
  }
  Eigen::VectorXd out = current * weights.output_weights();
  out.array() += weights.output_bias();
  if (!out.allFinite()) throw NetworkError("non-finite output in layer " + std::to_string(layers.size() + 1));
  return out;
}

std::vector<double> backward(const NetworkWeights& weights, const ForwardCache& cache, const GridShape& grid,
                             const Eigen::VectorXd& upstream) {
  const auto& layers = weights.layers();
  if (cache.activations.size() != layers.size() + 1) throw NetworkError("forward cache does not match network");
  if (upstream.size() != cache.activations.front().rows()) throw NetworkError("upstream gradient has wrong length");
  std::vector<double, Eigen::aligned_allocator<double>> grad(weights.size(), 0.0);

  const RowMatrix& last = cache.activations.back();
  Eigen::Map<Eigen::VectorXd>(grad.data() + weights.output_weights_offset(), last.cols()) =
      last.transpose() * upstream;
  grad[weights.output_bias_offset()] = upstream.sum();
  if (layers.empty()) return {grad.begin(), grad.end()};

  RowMatrix d_act = upstream * weights.output_weights().transpose();
  for (std::size_t jj = layers.size(); jj-- > 0;) {
    const RowMatrix& act = cache.activations[jj + 1];
    const RowMatrix& prev = cache.activations[jj];
    const RowMatrix dz = (act.array() > 0.0).select(d_act, 0.0);
    const int width = layers[jj].width;
    Eigen::Map<Eigen::VectorXd>(grad.data() + weights.bias_offset(jj), width) = dz.colwise().sum().transpose();
    Eigen::Map<RowMatrix> gk(grad.data() + weights.kernel_offset(jj), weights.fan_in(jj), width);
    if (layers[jj].kind == LayerKind::dense) {
      gk.noalias() = prev.transpose() * dz;
      if (jj > 0) d_act = dz * weights.kernel(jj).transpose();
    } else {
      const RowMatrix col = im2col3x3(prev, grid);
      gk.noalias() = col.transpose() * dz;
      if (jj > 0) {
        const RowMatrix dcol = dz * weights.kernel(jj).transpose();
        d_act = RowMatrix::Zero(prev.rows(), prev.cols());
        col2im3x3_add(dcol, grid, d_act);
      }
    }
  }
  return {grad.begin(), grad.end()};
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw NetworkError("Adam: parameter, gradient and moment sizes differ");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i])) throw NetworkError("Adam: non-finite gradient at index " + std::to_string(i));
  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double alpha = cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.beta2, t)) / (1.0 - std::pow(cfg.beta1, t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] += (g - state.m[i]) * (1.0 - cfg.beta1);
    state.v[i] += (g * g - state.v[i]) * (1.0 - cfg.beta2);
    params[i] -= alpha * state.m[i] / (std::sqrt(state.v[i]) + cfg.epsilon);
  }
}

TrainResult train(std::vector<double> initial, const EpochObjective& objective, int epochs, const AdamConfig& adam) {
  if (epochs < 1) throw NetworkError("epochs must be >= 1");
  TrainResult result;
  std::vector<double> params = std::move(initial);
  std::vector<double> grad(params.size(), 0.0);
  AdamState state(params.size(), adam);
  double best = std::numeric_limits<double>::infinity();
  bool have_best = false;

  auto record_validation = [&](double val) {
    result.log.validation_loss.push_back(val);
    if (std::isfinite(val) && (!have_best || val < best)) {
      best = val;
      have_best = true;
      result.log.best_epoch = result.log.validation_loss.size() - 1;
      result.params = params;
    }
  };

  for (int e = 0; e < epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const EpochLosses losses = objective(params, grad);
    if (e > 0) record_validation(losses.validation);
    result.log.train_loss.push_back(losses.train);
    const bool finite = std::isfinite(losses.train) &&
                        std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
    if (!finite) {
      // Training diverged; keep the best epoch seen so far.
      result.log.train_loss.pop_back();
      break;
    }
    adam_step(state, params, grad);
  }
  if (result.log.validation_loss.size() < result.log.train_loss.size())
    record_validation(objective(params, {}).validation);
  if (!have_best) throw NetworkError("validation loss was non-finite at every epoch");
  return result;
}

}  // namespace pinnburn
