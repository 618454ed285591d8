#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pinnburn/grid_data.hpp"
#include "pinnburn/network.hpp"
#include "pinnburn/spline.hpp"

namespace pinnburn {

enum class LinkKind { logistic, exponential };
enum class OffsetMode { unit, burnable };
enum class SurfaceTarget { p0, u, pu, sigma };

std::string to_string(LinkKind k);
std::string to_string(OffsetMode m);
std::string to_string(SurfaceTarget t);
LinkKind link_kind_from_string(const std::string& s);
OffsetMode offset_mode_from_string(const std::string& s);
SurfaceTarget surface_target_from_string(const std::string& s);

/// h(x) = 1/2 + tanh(x/2)/2 or exp(x).
double apply_link(LinkKind link, double x);
/// h'(x) expressed through h(x).
double link_derivative(LinkKind link, double h);

LinkKind link_for(SurfaceTarget target);
OffsetMode offset_for(SurfaceTarget target);

/// Layer chain and interpreted predictors for one parameter surface.
struct ArchitectureSpec {
  std::vector<LayerSpec> layers;
  std::vector<std::string> interpreted;
  int knots = 0;
};

/// Default architectures: p0 is a 5-layer 16-filter CNN with 10-knot splines,
/// u a 2-layer 4-filter CNN, p_u a 5-layer 16-node dense net, sigma a 4-layer
/// 10-node dense net with 6-knot splines. u and p_u are fully-NN.
ArchitectureSpec preset_architecture(SurfaceTarget target, const std::vector<std::string>& interpreted);

/// theta(s,t) = C(s,t) * h[m_I(x_I) + m_N(x_N)].
struct ParameterSurfaceModel {
  SurfaceTarget target = SurfaceTarget::p0;
  std::vector<std::string> interpreted;
  std::vector<std::string> noninterpreted;
  SplineBlock spline;  // one term per interpreted predictor
  NetworkWeights net;
  LinkKind link = LinkKind::logistic;
  OffsetMode offset = OffsetMode::unit;

  std::size_t n_params() const { return net.size() + spline.n_coefficients(); }
  /// Trainable parameters, network first then spline coefficients.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  void validate() const;

  bool operator==(const ParameterSurfaceModel&) const = default;
};

/// Non-interpreted predictor list for a target: every dataset predictor not
/// interpreted, plus burnable area for unit-offset targets.
std::vector<std::string> noninterpreted_for(SurfaceTarget target, const std::vector<std::string>& predictor_names,
                                            const std::vector<std::string>& interpreted);

/// Builds a model with Glorot-initialized network weights and zero spline
/// coefficients. `knots` holds one knot vector per interpreted predictor.
ParameterSurfaceModel make_surface_model(SurfaceTarget target, std::vector<std::string> interpreted,
                                         std::vector<std::string> noninterpreted, const std::vector<LayerSpec>& layers,
                                         const std::vector<std::vector<double>>& knots, std::uint64_t seed);

struct SurfaceInputs {
  RowMatrix network;        // rows x (d - I)
  RowMatrix interpreted;    // rows x I
  Eigen::VectorXd offset;   // C(s,t)
  GridShape grid;           // set when rows are whole time slices
  std::vector<std::size_t> cells;  // dataset cell of each row
};

/// Rows for whole time slices (required for convolutional networks).
/// `ds` must already be standardized and carry any derived predictors.
SurfaceInputs gather_slices(const ParameterSurfaceModel& model, const GridDataset& ds,
                            std::span<const std::size_t> time_positions);
SurfaceInputs gather_all(const ParameterSurfaceModel& model, const GridDataset& ds);
/// Rows for arbitrary cells; only valid for dense networks.
SurfaceInputs gather_cells(const ParameterSurfaceModel& model, const GridDataset& ds,
                           std::span<const std::size_t> cells);

struct SurfaceEval {
  Eigen::VectorXd spline_part;
  Eigen::VectorXd network_part;
  Eigen::VectorXd pre_link;
  Eigen::VectorXd link_value;
  Eigen::VectorXd theta;
  ForwardCache cache;
};

SurfaceEval evaluate_surface(const ParameterSurfaceModel& model, const SurfaceInputs& inputs, bool keep_cache = false);

/// Chain-rule gradient of sum_n upstream[n] * theta[n] with respect to
/// model.parameters(). `eval` must come from evaluate_surface(..., true).
std::vector<double> surface_gradient(const ParameterSurfaceModel& model, const SurfaceInputs& inputs,
                                     const SurfaceEval& eval, const Eigen::VectorXd& upstream);

/// theta(., t) over all sites of time position t.
std::vector<double> eval_surface(const ParameterSurfaceModel& model, const GridDataset& ds, std::size_t time_pos);

}  // namespace pinnburn
