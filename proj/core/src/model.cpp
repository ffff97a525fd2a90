#include "icpa/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icpa/error.hpp"

namespace icpa {

void ModelConfig::validate() const {
  if (embed_dim == 0) throw ValidationError("embed_dim must be positive");
  if (hidden.empty()) throw ValidationError("hidden dims must not be empty");
  for (auto d : hidden)
    if (d == 0) throw ValidationError("hidden dims must be positive");
  if (!(positive_weight > 0.0) || !std::isfinite(positive_weight))
    throw ValidationError("positive_weight must be positive");
}

namespace {

void add_neighbor_terms(const SourceGraph& graph, const std::vector<NodeId>& picked,
                        AggPlan& plan) {
  std::vector<std::size_t> per_type;
  for (NodeId nb : picked) {
    const auto t = graph.node(nb).type;
    if (per_type.size() <= t) per_type.resize(t + 1, 0);
    ++per_type[t];
  }
  for (NodeId nb : picked) {
    const Node& node = graph.node(nb);
    if (node.features.empty()) continue;
    const double w = 1.0 / (static_cast<double>(per_type[node.type]) *
                            static_cast<double>(node.features.size()));
    for (FeatureId f : node.features) plan.terms.push_back({1 + node.type, f, w});
  }
}

AggPlan self_plan(const SourceGraph& graph, NodeId node) {
  AggPlan plan;
  const Node& n = graph.node(node);
  for (FeatureId f : n.features)
    plan.terms.push_back({0, f, 1.0 / static_cast<double>(n.features.size())});
  return plan;
}

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

}  // namespace

AggPlan sample_plan(const SourceGraph& graph, NodeId node, std::size_t neighbor_samples,
                    Rng& rng) {
  AggPlan plan = self_plan(graph, node);
  const auto nbrs = graph.neighbors(node);
  if (nbrs.empty() || neighbor_samples == 0) return plan;
  std::vector<NodeId> picked(neighbor_samples);
  for (auto& p : picked) p = nbrs[rng.index(nbrs.size())];
  add_neighbor_terms(graph, picked, plan);
  return plan;
}

AggPlan inference_plan(const SourceGraph& graph, std::size_t source, NodeId node,
                       std::size_t neighbor_samples, std::uint64_t seed) {
  AggPlan plan = self_plan(graph, node);
  const auto nbrs = graph.neighbors(node);
  if (nbrs.empty() || neighbor_samples == 0) return plan;
  std::vector<NodeId> picked;
  if (nbrs.size() <= neighbor_samples) {
    picked.assign(nbrs.begin(), nbrs.end());
  } else {
    Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(source) << 32) | node));
    picked.resize(neighbor_samples);
    for (auto& p : picked) p = nbrs[rng.index(nbrs.size())];
  }
  add_neighbor_terms(graph, picked, plan);
  return plan;
}

Model::Model(ModelConfig config, std::size_t num_features, std::size_t num_types,
             std::uint64_t seed)
    : config_(std::move(config)), num_features_(num_features), num_types_(num_types) {
  config_.validate();
  const std::size_t E = config_.embed_dim;
  embedding_ = params_.add("embedding", {E, num_features_});
  const char* names[2] = {"tower_a", "tower_b"};
  for (int t = 0; t < 2; ++t) {
    std::size_t in = input_dim();
    for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
      const std::size_t out = config_.hidden[l];
      const std::string prefix = std::string(names[t]) + "." + std::to_string(l);
      weights_[t].push_back(params_.add(prefix + ".weight", {out, in}));
      biases_[t].push_back(params_.add(prefix + ".bias", {out}));
      in = out;
    }
  }

  Rng rng(seed);
  const double emb_scale = 1.0 / std::sqrt(static_cast<double>(E));
  for (double& v : params_.tensor(embedding_)) v = emb_scale * rng.normal();
  for (int t = 0; t < 2; ++t)
    for (std::size_t id : weights_[t]) {
      const auto& s = params_.spec(id);
      const double a = std::sqrt(6.0 / static_cast<double>(s.shape[0] + s.shape[1]));
      for (double& v : params_.tensor(id)) v = a * (2.0 * rng.uniform() - 1.0);
    }
}

std::size_t Model::weight_id(Tower t, std::size_t layer) const {
  return weights_[t == Tower::A ? 0 : 1].at(layer);
}

std::size_t Model::bias_id(Tower t, std::size_t layer) const {
  return biases_[t == Tower::A ? 0 : 1].at(layer);
}

TowerPass tower_forward(const Model& model, Tower tower, std::vector<AggPlan> plans) {
  const auto E = static_cast<Eigen::Index>(model.config().embed_dim);
  const auto N = static_cast<Eigen::Index>(plans.size());
  const auto& params = model.params();
  const auto emb = params.matrix(model.embedding_id());

  TowerPass pass;
  pass.tower = tower;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.input_dim()), N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (const auto& term : plans[j].terms) {
      if (term.feature >= model.num_features())
        throw ValidationError("unknown feature id " + std::to_string(term.feature));
      if (term.slot > model.num_types())
        throw ValidationError("aggregation slot out of range");
      x.block(term.slot * E, j, E, 1).noalias() += term.weight * emb.col(term.feature);
    }
  pass.activations.push_back(std::move(x));
  for (std::size_t l = 0; l < model.config().hidden.size(); ++l) {
    const auto W = params.matrix(model.weight_id(tower, l));
    const auto b = params.matrix(model.bias_id(tower, l));
    Eigen::MatrixXd z = W * pass.activations.back();
    z.colwise() += b.col(0);
    pass.activations.push_back(z.unaryExpr(&elu));
    pass.pre.push_back(std::move(z));
  }
  const Eigen::MatrixXd& h = pass.activations.back();
  pass.norms = h.colwise().norm().transpose();
  pass.output.resize(h.rows(), N);
  for (Eigen::Index j = 0; j < N; ++j) {
    if (pass.norms[j] < 1e-12) {
      pass.output.col(j).setZero();
      pass.output(0, j) = 1.0;
    } else {
      pass.output.col(j) = h.col(j) / pass.norms[j];
    }
  }
  pass.plans = std::move(plans);
  return pass;
}

void tower_backward(const Model& model, const TowerPass& pass, const Eigen::MatrixXd& d_output,
                    Gradient& grad) {
  const auto& params = model.params();
  const auto N = pass.output.cols();
  Eigen::MatrixXd dh(pass.output.rows(), N);
  for (Eigen::Index j = 0; j < N; ++j) {
    if (pass.norms[j] < 1e-12) {
      dh.col(j).setZero();
      continue;
    }
    const auto y = pass.output.col(j);
    const auto dy = d_output.col(j);
    dh.col(j) = (dy - y * y.dot(dy)) / pass.norms[j];
  }
  for (std::size_t l = model.config().hidden.size(); l-- > 0;) {
    const Eigen::MatrixXd& z = pass.pre[l];
    Eigen::MatrixXd dz =
        dh.array() * z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }).array();
    const std::size_t wid = model.weight_id(pass.tower, l);
    const std::size_t bid = model.bias_id(pass.tower, l);
    grad_matrix(grad, params.spec(wid)).noalias() += dz * pass.activations[l].transpose();
    grad_matrix(grad, params.spec(bid)).col(0) += dz.rowwise().sum();
    dh = params.matrix(wid).transpose() * dz;
  }
  const auto E = static_cast<Eigen::Index>(model.config().embed_dim);
  auto g_emb = grad_matrix(grad, params.spec(model.embedding_id()));
  for (Eigen::Index j = 0; j < N; ++j)
    for (const auto& term : pass.plans[j].terms)
      g_emb.col(term.feature).noalias() += term.weight * dh.block(term.slot * E, j, E, 1);
}

Eigen::VectorXd embed_node(const Model& model, const SourceGraph& graph, NodeId node, Tower tower,
                           Rng& rng) {
  std::vector<AggPlan> plans{sample_plan(graph, node, model.config().neighbor_samples, rng)};
  return tower_forward(model, tower, std::move(plans)).output.col(0);
}

double sigmoid(double x) {
  x = std::clamp(x, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

namespace {

/// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct ScoreTerm {
  double value;
  double slope;  // d value / d score
};

// BCE(σ(s), 1) = softplus(-s); BCE(σ(s), 0) = softplus(s). The clamp zeroes the
// slope outside [-30, 30].
ScoreTerm positive_term(double s) {
  const bool inside = s > -kLogitClamp && s < kLogitClamp;
  const double c = std::clamp(s, -kLogitClamp, kLogitClamp);
  return {softplus(-c), inside ? -sigmoid(-c) : 0.0};
}

ScoreTerm negative_term(double s) {
  const bool inside = s > -kLogitClamp && s < kLogitClamp;
  const double c = std::clamp(s, -kLogitClamp, kLogitClamp);
  return {softplus(c), inside ? sigmoid(c) : 0.0};
}

}  // namespace

double edge_loss_from_scores(std::span<const double> positive_scores,
                             const std::vector<std::vector<double>>& negative_scores,
                             double positive_weight) {
  if (positive_scores.empty()) throw ValidationError("edge loss: empty batch");
  if (negative_scores.size() != positive_scores.size())
    throw ValidationError("edge loss: one negative list per triple required");
  double total = 0.0;
  for (std::size_t i = 0; i < positive_scores.size(); ++i) {
    double t = positive_weight * positive_term(positive_scores[i]).value;
    for (double s : negative_scores[i]) t += negative_term(s).value;
    total += t;
  }
  return total / static_cast<double>(positive_scores.size());
}

LossAndGrad edge_loss(const Model& model, const std::vector<TriplePlan>& batch, bool with_grad) {
  if (batch.empty()) throw ValidationError("edge loss: empty batch");
  const double pw = model.config().positive_weight;
  std::vector<AggPlan> anchors;
  std::vector<AggPlan> others;
  std::vector<std::size_t> first_other;
  anchors.reserve(batch.size());
  for (const auto& t : batch) {
    anchors.push_back(t.anchor);
    first_other.push_back(others.size());
    others.push_back(t.positive);
    others.insert(others.end(), t.negatives.begin(), t.negatives.end());
  }
  const TowerPass a = tower_forward(model, Tower::A, std::move(anchors));
  const TowerPass b = tower_forward(model, Tower::B, std::move(others));

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossAndGrad out;
  Eigen::MatrixXd da;
  Eigen::MatrixXd db;
  if (with_grad) {
    da = Eigen::MatrixXd::Zero(a.output.rows(), a.output.cols());
    db = Eigen::MatrixXd::Zero(b.output.rows(), b.output.cols());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto ai = static_cast<Eigen::Index>(i);
    const std::size_t count = 1 + batch[i].negatives.size();
    double triple = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const auto col = static_cast<Eigen::Index>(first_other[i] + k);
      const double s = a.output.col(ai).dot(b.output.col(col));
      const ScoreTerm term = k == 0 ? positive_term(s) : negative_term(s);
      const double w = k == 0 ? pw : 1.0;
      triple += w * term.value;
      if (with_grad) {
        const double g = w * term.slope * inv_n;
        da.col(ai) += g * b.output.col(col);
        db.col(col) += g * a.output.col(ai);
      }
    }
    total += triple;
  }
  out.loss = total * inv_n;
  if (with_grad) {
    out.grad = model.params().zeros_like();
    tower_backward(model, a, da, out.grad);
    tower_backward(model, b, db, out.grad);
  }
  return out;
}

double predict_edge(const Model& model, const SourceGraph& graph, std::size_t source, NodeId u,
                    NodeId v, std::uint64_t inference_seed) {
  const std::size_t S = model.config().neighbor_samples;
  std::vector<AggPlan> pu{inference_plan(graph, source, u, S, inference_seed)};
  std::vector<AggPlan> pv{inference_plan(graph, source, v, S, inference_seed)};
  const auto a = tower_forward(model, Tower::A, std::move(pu));
  const auto b = tower_forward(model, Tower::B, std::move(pv));
  return sigmoid(a.output.col(0).dot(b.output.col(0)));
}

}  // namespace icpa
