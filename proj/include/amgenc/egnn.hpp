#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amgenc/core_types.hpp"
#include "amgenc/neighbor_graph.hpp"
#include "amgenc/velocity_field.hpp"
#include "amgenc/weights.hpp"

namespace amgenc {

/// Network hyperparameters. Defaults follow the published architecture.
struct EgnnConfig {
  int layers = 4;
  int hidden_dim = 128;
  int vector_channels = 8;
  double r_cut = 6.5;
  double n_norm = 40.0;
  int attention_dim = 128;
  int n_y = 1;
  int n_elements = 3;

  /// Throws ValidationError unless every field is strictly positive.
  void validate() const;
};

/// Smooth cutoff 2 tanh(1 - min(r, r_cut) / r_cut)^2; zero at r_cut.
double cutoff_function(double r, double r_cut);
/// Edge attribute 2 tanh(d^2 / r_cut^2) - 1.
double edge_attribute(double distance, double r_cut);

/// Deterministic random weights: every linear map uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)], layer-norm gains 1 and offsets 0, and
/// the output position scale 1.
WeightContainer init_egnn_weights(const EgnnConfig &cfg, std::uint64_t seed);

/// Recovers the integer hyperparameters from weight shapes. Cutoff and
/// normalization are not stored with the weights and are passed in.
/// Throws WeightMismatch when the container is not a complete network.
EgnnConfig infer_egnn_config(const WeightContainer &weights, double r_cut = 6.5,
                             double n_norm = 40.0);

/// E(n)-equivariant velocity network with the weights resolved up front.
///
/// Node features start as embed([t, E_i, W_y y + b_y]); coordinates start
/// as the positions replicated across k vector channels. Each layer runs
///   m_ij   = phi_e([H_i, H_j, e_ij])
///   a_ij   = sigmoid(MLP_att(m_ij))
///   H_i   += phi_H([H_i, sum_j f_cut(d_ij) a_ij m_ij / n_norm])
///   Phi_ij = MLP_coord([H_i, H_j, e_ij])            (k x k)
///   X_i   += sum_j Phi_ij (X_i - X_j - o_ij) / n_norm
/// and the outputs are v_E = head(H) and v_X = s * (X[:, 0] - X_input).
class EgnnModel {
public:
  /// Throws WeightMismatch naming the first missing or mis-shaped parameter.
  EgnnModel(EgnnConfig cfg, const WeightContainer &weights);

  const EgnnConfig &config() const noexcept { return cfg_; }

  VelocityOutput forward(const Lattice &lattice, const Positions &positions,
                         const Logits &elements, std::span<const double> target, double t) const;
  /// Same, with a precomputed neighbor graph for `positions`.
  VelocityOutput forward(const Lattice &lattice, const Positions &positions,
                         const Logits &elements, std::span<const double> target, double t,
                         const NeighborGraph &graph) const;

  struct Linear {
    Logits weight; // out x in
    Eigen::RowVectorXd bias;
  };
  struct Mlp {
    Linear lin1;
    Eigen::RowVectorXd norm_gain;
    Eigen::RowVectorXd norm_bias;
    Linear lin2;
  };
  struct Layer {
    Mlp edge, att, node, coord;
  };

private:
  EgnnConfig cfg_;
  Linear embed_;
  Linear y_proj_;
  std::vector<Layer> layers_;
  Linear head_;
  double pos_scale_ = 1.0;
};

/// Stateless forward pass; resolves the weights on every call.
VelocityOutput egnn_forward(const MaterialSample &sample, std::span<const double> target, double t,
                            const EgnnConfig &cfg, const WeightContainer &weights);

/// VelocityField adapter around a shared model.
class EgnnField final : public VelocityField {
public:
  explicit EgnnField(EgnnModel model) : model_(std::move(model)) {}

  VelocityOutput operator()(const Lattice &lattice, const FlowState &state,
                            std::span<const double> target) const override {
    return model_.forward(lattice, state.x_t, state.e_t, target, state.t);
  }

  const EgnnModel &model() const noexcept { return model_; }

private:
  EgnnModel model_;
};

} // namespace amgenc
