#include "amgenc/egnn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "amgenc/errors.hpp"
#include "amgenc/rng.hpp"

namespace amgenc {
namespace {

using Matrix = Logits; // row-major dynamic
using Linear = EgnnModel::Linear;
using Mlp = EgnnModel::Mlp;

constexpr double kLayerNormEps = 1e-5;

std::uint32_t u32(int v) { return static_cast<std::uint32_t>(v); }

Linear load_linear(const WeightContainer &w, const std::string &prefix, int out, int in) {
  const Tensor &weight = w.require(prefix + ".weight", {u32(out), u32(in)});
  const Tensor &bias = w.require(prefix + ".bias", {u32(out)});
  Linear lin;
  lin.weight = Eigen::Map<const Matrix>(weight.values.data(), out, in);
  lin.bias = Eigen::Map<const Eigen::RowVectorXd>(bias.values.data(), out);
  return lin;
}

Mlp load_mlp(const WeightContainer &w, const std::string &prefix, int in, int hidden, int out) {
  Mlp mlp;
  mlp.lin1 = load_linear(w, prefix + ".lin1", hidden, in);
  const Tensor &gain = w.require(prefix + ".norm.weight", {u32(hidden)});
  const Tensor &offset = w.require(prefix + ".norm.bias", {u32(hidden)});
  mlp.norm_gain = Eigen::Map<const Eigen::RowVectorXd>(gain.values.data(), hidden);
  mlp.norm_bias = Eigen::Map<const Eigen::RowVectorXd>(offset.values.data(), hidden);
  mlp.lin2 = load_linear(w, prefix + ".lin2", out, hidden);
  return mlp;
}

// layer norm + SiLU, in place, row by row
void norm_silu(Matrix &x, const Mlp &mlp) {
  const Eigen::Index width = x.cols();
  const double inv_width = 1.0 / static_cast<double>(width);
  const double *gain = mlp.norm_gain.data();
  const double *offset = mlp.norm_bias.data();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double *row = x.data() + r * width;
    double mean = 0.0;
    for (Eigen::Index c = 0; c < width; ++c)
      mean += row[c];
    mean *= inv_width;
    double var = 0.0;
    for (Eigen::Index c = 0; c < width; ++c)
      var += (row[c] - mean) * (row[c] - mean);
    const double inv = 1.0 / std::sqrt(var * inv_width + kLayerNormEps);
    for (Eigen::Index c = 0; c < width; ++c) {
      const double v = (row[c] - mean) * inv * gain[c] + offset[c];
      row[c] = v / (1.0 + std::exp(-v));
    }
  }
}

Matrix apply_linear(const Matrix &x, const Linear &lin) {
  Matrix out = x * lin.weight.transpose();
  out.rowwise() += lin.bias;
  return out;
}

// First layer of an MLP acting on [H_i, H_j, e_ij] for every edge, using
// the split H_i W_a^T + H_j W_b^T + e_ij w_e + b.
Matrix edge_pre_activation(const Linear &lin, const Matrix &h, const NeighborGraph &graph,
                           const Eigen::VectorXd &edge_attr) {
  const Eigen::Index dh = h.cols();
  const Matrix a = h * lin.weight.leftCols(dh).transpose();
  const Matrix b = h * lin.weight.middleCols(dh, dh).transpose();
  const Eigen::RowVectorXd we = lin.weight.col(2 * dh).transpose();
  const auto n_edges = static_cast<Eigen::Index>(graph.edge_count());
  const Eigen::Index width = lin.weight.rows();
  Matrix pre(n_edges, width);
  for (Eigen::Index e = 0; e < n_edges; ++e) {
    const double *ai = a.data() + graph.receiver[e] * width;
    const double *bj = b.data() + graph.source[e] * width;
    const double attr = edge_attr[e];
    double *out = pre.data() + e * width;
    for (Eigen::Index c = 0; c < width; ++c)
      out[c] = ai[c] + bj[c] + attr * we[c] + lin.bias[c];
  }
  return pre;
}

} // namespace

void EgnnConfig::validate() const {
  if (layers <= 0 || hidden_dim <= 0 || vector_channels <= 0 || attention_dim <= 0 || n_y <= 0 ||
      n_elements <= 0)
    throw ValidationError("EGNN integer hyperparameters must be positive");
  if (!(r_cut > 0.0) || !(n_norm > 0.0))
    throw ValidationError("EGNN cutoff and normalization must be positive");
}

double cutoff_function(double r, double r_cut) {
  const double th = std::tanh(1.0 - std::min(r, r_cut) / r_cut);
  return 2.0 * th * th;
}

double edge_attribute(double distance, double r_cut) {
  return std::tanh(distance * distance / (r_cut * r_cut)) * 2.0 - 1.0;
}

WeightContainer init_egnn_weights(const EgnnConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 engine(derive_seed(seed, streams::kWeights, 0));
  WeightContainer w;

  auto add_linear = [&](const std::string &prefix, int out, int in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor weight{{u32(out), u32(in)}, std::vector<double>(static_cast<std::size_t>(out) * in)};
    for (double &v : weight.values)
      v = dist(engine);
    Tensor bias{{u32(out)}, std::vector<double>(static_cast<std::size_t>(out))};
    for (double &v : bias.values)
      v = dist(engine);
    w.add(prefix + ".weight", std::move(weight));
    w.add(prefix + ".bias", std::move(bias));
  };
  auto add_mlp = [&](const std::string &prefix, int in, int hidden, int out) {
    add_linear(prefix + ".lin1", hidden, in);
    w.add(prefix + ".norm.weight", Tensor{{u32(hidden)}, std::vector<double>(hidden, 1.0)});
    w.add(prefix + ".norm.bias", Tensor{{u32(hidden)}, std::vector<double>(hidden, 0.0)});
    add_linear(prefix + ".lin2", out, hidden);
  };

  const int dh = cfg.hidden_dim;
  const int k = cfg.vector_channels;
  add_linear("y_proj", dh, cfg.n_y);
  add_linear("embed", dh, 1 + cfg.n_elements + dh);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layers." + std::to_string(l);
    add_mlp(p + ".edge_mlp", 2 * dh + 1, dh, dh);
    add_mlp(p + ".att_mlp", dh, cfg.attention_dim, 1);
    add_mlp(p + ".node_mlp", 2 * dh, dh, dh);
    add_mlp(p + ".coord_mlp", 2 * dh + 1, dh, k * k);
  }
  add_linear("head", cfg.n_elements, dh);
  w.add("pos_scale", Tensor{{1}, {1.0}});
  return w;
}

EgnnConfig infer_egnn_config(const WeightContainer &weights, double r_cut, double n_norm) {
  auto dims = [&](const std::string &name, std::size_t rank) {
    const Tensor *t = weights.find(name);
    if (!t || t->shape.size() != rank)
      throw WeightMismatch("missing or mis-shaped parameter '" + name + "'", name);
    return t->shape;
  };
  EgnnConfig cfg;
  cfg.r_cut = r_cut;
  cfg.n_norm = n_norm;
  const auto y = dims("y_proj.weight", 2);
  cfg.hidden_dim = static_cast<int>(y[0]);
  cfg.n_y = static_cast<int>(y[1]);
  cfg.n_elements = static_cast<int>(dims("head.weight", 2)[0]);
  cfg.layers = 0;
  while (weights.find("layers." + std::to_string(cfg.layers) + ".edge_mlp.lin1.weight"))
    ++cfg.layers;
  if (cfg.layers == 0)
    throw WeightMismatch("weights contain no message-passing layers", "layers.0");
  cfg.attention_dim = static_cast<int>(dims("layers.0.att_mlp.lin1.weight", 2)[0]);
  const auto kk = dims("layers.0.coord_mlp.lin2.weight", 2)[0];
  cfg.vector_channels = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
  if (static_cast<std::uint32_t>(cfg.vector_channels * cfg.vector_channels) != kk)
    throw WeightMismatch("coordinate MLP output is not a square channel mix",
                         "layers.0.coord_mlp.lin2.weight");
  return cfg;
}

EgnnModel::EgnnModel(EgnnConfig cfg, const WeightContainer &weights) : cfg_(cfg) {
  cfg_.validate();
  const int dh = cfg_.hidden_dim;
  const int k = cfg_.vector_channels;
  y_proj_ = load_linear(weights, "y_proj", dh, cfg_.n_y);
  embed_ = load_linear(weights, "embed", dh, 1 + cfg_.n_elements + dh);
  layers_.reserve(static_cast<std::size_t>(cfg_.layers));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string p = "layers." + std::to_string(l);
    Layer layer;
    layer.edge = load_mlp(weights, p + ".edge_mlp", 2 * dh + 1, dh, dh);
    layer.att = load_mlp(weights, p + ".att_mlp", dh, cfg_.attention_dim, 1);
    layer.node = load_mlp(weights, p + ".node_mlp", 2 * dh, dh, dh);
    layer.coord = load_mlp(weights, p + ".coord_mlp", 2 * dh + 1, dh, k * k);
    layers_.push_back(std::move(layer));
  }
  head_ = load_linear(weights, "head", cfg_.n_elements, dh);
  pos_scale_ = weights.require("pos_scale", {1}).values[0];
}

VelocityOutput EgnnModel::forward(const Lattice &lattice, const Positions &positions,
                                  const Logits &elements, std::span<const double> target,
                                  double t) const {
  return forward(lattice, positions, elements, target, t,
                 build_neighbor_graph(lattice, positions, cfg_.r_cut));
}

VelocityOutput EgnnModel::forward(const Lattice &, const Positions &positions,
                                  const Logits &elements, std::span<const double> target, double t,
                                  const NeighborGraph &graph) const {
  const Eigen::Index n = positions.rows();
  const int dh = cfg_.hidden_dim;
  const int k = cfg_.vector_channels;
  if (elements.rows() != n || elements.cols() != cfg_.n_elements)
    throw ShapeMismatch("element state does not match the network configuration");
  if (static_cast<int>(target.size()) != cfg_.n_y)
    throw ShapeMismatch("target property vector has length " + std::to_string(target.size()) +
                        ", network expects " + std::to_string(cfg_.n_y));

  // input features [t, E_i, y_proj]
  const Eigen::RowVectorXd y = Eigen::Map<const Eigen::RowVectorXd>(target.data(), cfg_.n_y);
  const Eigen::RowVectorXd y_feat = y * y_proj_.weight.transpose() + y_proj_.bias;
  Matrix input(n, 1 + cfg_.n_elements + dh);
  input.col(0).setConstant(t);
  input.middleCols(1, cfg_.n_elements) = elements;
  input.rightCols(dh).rowwise() = y_feat;
  Matrix h = apply_linear(input, embed_);

  // coordinates: n x (3k), channel c occupies columns 3c..3c+2
  Matrix x(n, 3 * k);
  for (int c = 0; c < k; ++c)
    x.middleCols(3 * c, 3) = positions;

  const auto n_edges = static_cast<Eigen::Index>(graph.edge_count());
  Eigen::VectorXd edge_attr(n_edges), cutoff(n_edges);
  for (Eigen::Index e = 0; e < n_edges; ++e) {
    edge_attr[e] = edge_attribute(graph.distance[e], cfg_.r_cut);
    cutoff[e] = cutoff_function(graph.distance[e], cfg_.r_cut);
  }
  const double inv_norm = 1.0 / cfg_.n_norm;

  for (const Layer &layer : layers_) {
    // messages
    Matrix hidden = edge_pre_activation(layer.edge.lin1, h, graph, edge_attr);
    norm_silu(hidden, layer.edge);
    const Matrix m = apply_linear(hidden, layer.edge.lin2);

    Matrix att_hidden = apply_linear(m, layer.att.lin1);
    norm_silu(att_hidden, layer.att);
    const Matrix att_logit = apply_linear(att_hidden, layer.att.lin2);

    Matrix agg = Matrix::Zero(n, dh);
    for (Eigen::Index e = 0; e < n_edges; ++e) {
      const double alpha = 1.0 / (1.0 + std::exp(-att_logit(e, 0)));
      agg.row(graph.receiver[e]) += (cutoff[e] * alpha * inv_norm) * m.row(e);
    }

    // node update
    Matrix node_hidden = h * layer.node.lin1.weight.leftCols(dh).transpose() +
                         agg * layer.node.lin1.weight.rightCols(dh).transpose();
    node_hidden.rowwise() += layer.node.lin1.bias;
    norm_silu(node_hidden, layer.node);
    h += apply_linear(node_hidden, layer.node.lin2);

    // coordinate update with the refreshed features
    Matrix coord_hidden = edge_pre_activation(layer.coord.lin1, h, graph, edge_attr);
    norm_silu(coord_hidden, layer.coord);
    const Matrix phi = apply_linear(coord_hidden, layer.coord.lin2);

    Matrix dx = Matrix::Zero(n, 3 * k);
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> d(k, 3);
    for (Eigen::Index e = 0; e < n_edges; ++e) {
      const int i = graph.receiver[e];
      const int j = graph.source[e];
      for (int c = 0; c < k; ++c)
        d.row(c) = x.row(i).segment<3>(3 * c) - x.row(j).segment<3>(3 * c) - graph.offset.row(e);
      // Phi_ij is row-major k x k
      const double *phi_e = phi.row(e).data();
      for (int c = 0; c < k; ++c)
        for (int b = 0; b < k; ++b)
          dx.row(i).segment<3>(3 * c) += (inv_norm * phi_e[c * k + b]) * d.row(b);
    }
    x += dx;
  }

  VelocityOutput out;
  out.v_el = apply_linear(h, head_);
  out.v_pos = pos_scale_ * (x.leftCols(3) - positions);
  return out;
}

VelocityOutput egnn_forward(const MaterialSample &sample, std::span<const double> target, double t,
                            const EgnnConfig &cfg, const WeightContainer &weights) {
  const EgnnModel model(cfg, weights);
  return model.forward(sample.lattice(), sample.positions(), sample.logits(), target, t);
}

} // namespace amgenc
