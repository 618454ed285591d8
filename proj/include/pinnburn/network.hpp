#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pinnburn {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayerKind { dense, conv3x3 };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int width = 1;

  bool operator==(const LayerSpec&) const = default;
};

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

/// Spatial layout of the rows fed to a network: rows are stacked D1 x D2
/// slices (row-major within a slice). Dense-only networks ignore it.
struct GridShape {
  int rows = 0;
  int cols = 0;

  bool has_grid() const { return rows > 0 && cols > 0; }
  std::size_t slice_size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Weights of a feed-forward network stored in one flat buffer.
///
/// Hidden layer j has a kernel of shape fan_in x width (fan_in = n_{j-1} for
/// dense layers, 9 * n_{j-1} for 3x3 convolutions, laid out as
/// [(dr, dc) offset][input channel]) and one bias per node/filter. The output
/// layer is affine: w^(J+1) of length n_J and a scalar bias.
class NetworkWeights {
 public:
  NetworkWeights() = default;
  NetworkWeights(int n_inputs, std::vector<LayerSpec> layers);

  int n_inputs() const { return n_inputs_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t size() const { return values_.size(); }
  bool has_conv() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  int fan_in(std::size_t layer) const;
  Eigen::Map<RowMatrix> kernel(std::size_t layer);
  Eigen::Map<const RowMatrix> kernel(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> output_weights();
  Eigen::Map<const Eigen::VectorXd> output_weights() const;
  double& output_bias() { return values_[out_b_offset_]; }
  double output_bias() const { return values_[out_b_offset_]; }

  std::size_t kernel_offset(std::size_t layer) const { return kernel_offset_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return bias_offset_[layer]; }
  std::size_t output_weights_offset() const { return out_w_offset_; }
  std::size_t output_bias_offset() const { return out_b_offset_; }

  /// Glorot-uniform kernels, zero biases.
  void glorot_init(std::uint64_t seed);

  bool operator==(const NetworkWeights&) const = default;

 private:
  int n_inputs_ = 0;
  std::vector<LayerSpec> layers_;
  // Max-aligned so Eigen's vectorized kernels see the same alignment on every
  // run, keeping results independent of allocator state.
  std::vector<double, Eigen::aligned_allocator<double>> values_;
  std::vector<std::size_t> kernel_offset_;
  std::vector<std::size_t> bias_offset_;
  std::size_t out_w_offset_ = 0;
  std::size_t out_b_offset_ = 0;
};

/// Post-activation outputs of every layer, input first.
struct ForwardCache {
  std::vector<RowMatrix> activations;
};

/// Gathers the 3x3 zero-padded neighbourhood of every row into one row of
/// 9 * channels values (im2col).
RowMatrix im2col3x3(const RowMatrix& input, const GridShape& grid);

Eigen::VectorXd forward(const NetworkWeights& weights, const RowMatrix& inputs, const GridShape& grid,
                        ForwardCache* cache = nullptr);

/// Gradient of sum_n upstream[n] * m_N(row n) with respect to every weight,
/// laid out like NetworkWeights::values(). Requires the cache of a forward pass.
std::vector<double> backward(const NetworkWeights& weights, const ForwardCache& cache, const GridShape& grid,
                             const Eigen::VectorXd& upstream);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(std::size_t n_params, AdamConfig cfg) : config(cfg), m(n_params, 0.0), v(n_params, 0.0) {}
};

/// One Adam update in place. Throws (leaving params and state untouched) if
/// any gradient entry is non-finite or the sizes disagree.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct EpochLosses {
  double train = 0.0;
  double validation = 0.0;
};

/// Evaluates training and validation loss at `params`; when `grad` is
/// non-empty it receives the gradient of the training loss.
using EpochObjective = std::function<EpochLosses(std::span<const double> params, std::span<double> grad)>;

struct TrainLog {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;  // 0-based index into validation_loss
};

struct TrainResult {
  std::vector<double> params;
  TrainLog log;
};

/// Full-batch Adam for `epochs` epochs. train_loss[e] is measured before the
/// update of epoch e, validation_loss[e] after it. Returns the parameters of
/// the epoch with the smallest validation loss (earliest on ties).
TrainResult train(std::vector<double> initial, const EpochObjective& objective, int epochs,
                  const AdamConfig& adam = {});

}  // namespace pinnburn
