#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pinnburn/evt.hpp"
#include "pinnburn/grid_data.hpp"
#include "pinnburn/network.hpp"
#include "pinnburn/partition.hpp"
#include "pinnburn/pinn.hpp"

namespace pinnburn {

struct FitConfig {
  double tau = 0.4;
  int epochs = 2000;
  std::uint64_t seed = 1;
  /// Interpreted predictors for p0 and sigma; empty means "the predictors
  /// whose manifest role is interpreted".
  std::optional<std::vector<std::string>> interpreted;
  /// Per-target architecture overrides of the presets.
  std::map<SurfaceTarget, ArchitectureSpec> architectures;
  AdamConfig adam;
  PartitionSpec partition;
  int n_replicates = 250;
  double block_length = 2.0;  // expected stationary-bootstrap block, months
  double max_failure_fraction = 0.1;

  void validate() const;
  std::vector<std::string> interpreted_for(const GridDataset& ds) const;
  ArchitectureSpec architecture(SurfaceTarget target, const GridDataset& ds) const;
};

/// Training-ready copy of a raw dataset: burnable area appended as a
/// predictor, then every predictor standardized over observed cells.
struct PreparedData {
  GridDataset ds;
  StandardizationSpec spec;
};

PreparedData prepare_training_data(const GridDataset& raw);

struct SurfaceFit {
  ParameterSurfaceModel model;
  TrainLog log;
};

struct GpdFit {
  ParameterSurfaceModel sigma;
  double xi = 0.5;
  TrainLog log;
};

/// Stage 1: Bernoulli loss on 1{y > 0}.
SurfaceFit fit_occurrence(const PreparedData& data, const PartitionAssignment& part, const FitConfig& cfg,
                          std::uint64_t seed);
/// Stage 1: tilted loss at level tau on the non-zero responses.
SurfaceFit fit_threshold(const PreparedData& data, const PartitionAssignment& part, const FitConfig& cfg,
                         std::uint64_t seed);
/// Stage 2: Bernoulli loss on 1{y > u} among non-zero responses, u frozen.
SurfaceFit fit_exceedance_probability(const PreparedData& data, const PartitionAssignment& part,
                                      const FitConfig& cfg, std::span<const double> u_field, std::uint64_t seed);
/// Stage 2: GPD negative log-likelihood of the exceedances, jointly over the
/// sigma surface and the scalar shape.
GpdFit fit_gpd(const PreparedData& data, const PartitionAssignment& part, const FitConfig& cfg,
               std::span<const double> u_field, std::uint64_t seed);

/// Threshold surface on every cell of a prepared dataset.
std::vector<double> evaluate_all(const ParameterSurfaceModel& model, const GridDataset& prepared);

struct FitLogs {
  TrainLog p0;
  TrainLog u;
  TrainLog pu;
  TrainLog sigma;
};

struct FitResult {
  FullBurntAreaModel model;
  FitLogs logs;
};

/// Two-stage fit on one (possibly resampled) dataset with a fixed partition.
FitResult fit_full_model(const GridDataset& raw, const PartitionAssignment& part, const FitConfig& cfg,
                         std::uint64_t seed);

struct BootstrapBlock {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Blocks drawn until their total length reaches n_times: uniform start,
/// geometric length with mean `expected_block`.
std::vector<BootstrapBlock> stationary_bootstrap_blocks(std::size_t n_times, double expected_block,
                                                        std::uint64_t seed);

/// Time positions of one stationary-bootstrap resample, wrapping past the end
/// and truncated to exactly n_times.
std::vector<std::size_t> stationary_bootstrap_resample(std::size_t n_times, double expected_block,
                                                       std::uint64_t seed);

struct Replicate {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> time_positions;
  PartitionAssignment partition;
  std::optional<FullBurntAreaModel> model;
  FitLogs logs;
  std::string error;

  bool ok() const { return model.has_value(); }
};

struct BootstrapEnsemble {
  std::vector<Replicate> replicates;

  std::size_t n_ok() const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Seed of replicate r, derived from the run seed.
std::uint64_t replicate_seed(std::uint64_t run_seed, std::size_t r);

/// Builds replicate r exactly as run_ensemble does.
Replicate run_replicate(const GridDataset& raw, const FitConfig& cfg, std::size_t r);

/// Stationary-bootstrap ensemble: each replicate resamples whole months, gets
/// its own partition and standardization, and is fitted from scratch.
/// Failed replicates are kept with their error; more than
/// max_failure_fraction failures is an error.
BootstrapEnsemble run_ensemble(const GridDataset& raw, const FitConfig& cfg, const ProgressFn& progress = {});

struct Envelope {
  std::vector<double> median;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Pointwise type-7 quantiles across replicate fields.
Envelope pointwise_envelope(const std::vector<std::vector<double>>& fields, double lower = 0.025,
                            double upper = 0.975);

/// Centered spline curves of one interpreted predictor across replicates,
/// sampled on `grid` (raw predictor units) and centered at `median_raw`.
std::vector<std::vector<double>> centered_curves(const std::vector<const ParameterSurfaceModel*>& models,
                                                 const std::vector<const StandardizationSpec*>& specs,
                                                 const std::string& predictor, const std::vector<double>& grid,
                                                 double median_raw);

}  // namespace pinnburn
