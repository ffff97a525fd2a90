#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "icpa/graph.hpp"
#include "icpa/params.hpp"
#include "icpa/rng.hpp"

namespace icpa {

struct ModelConfig {
  std::size_t embed_dim = 8;
  /// Layer widths of each tower; the last entry is the representation size.
  std::vector<std::size_t> hidden = {32, 32, 16};
  std::size_t neighbor_samples = 5;
  double positive_weight = 2.0;

  void validate() const;
};

enum class Tower { A, B };

/// Aggregated input of one node as a sparse sum over embedding columns: the
/// tower input is a concatenation of slots of width embed_dim, slot 0 holding
/// the node's own mean feature vector and slot 1+t the pooled self vectors of
/// sampled neighbors of type t. Absent slots stay zero.
struct AggPlan {
  struct Term {
    std::uint32_t slot;
    FeatureId feature;
    double weight;
  };
  std::vector<Term> terms;
};

/// Training-time plan: neighbor_samples neighbors drawn uniformly with
/// replacement from the adjacency list.
AggPlan sample_plan(const SourceGraph& graph, NodeId node, std::size_t neighbor_samples, Rng& rng);

/// Inference-time plan: the full neighborhood when it has at most
/// neighbor_samples entries, otherwise a sample from a stream keyed by
/// (seed, source, node) so the result does not depend on call order.
AggPlan inference_plan(const SourceGraph& graph, std::size_t source, NodeId node,
                       std::size_t neighbor_samples, std::uint64_t seed);

/// θ_n: a shared embedding table and two MLP towers with ELU activations and
/// L2-normalized outputs.
class Model {
 public:
  Model(ModelConfig config, std::size_t num_features, std::size_t num_types, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_types() const { return num_types_; }
  std::size_t input_dim() const { return config_.embed_dim * (1 + num_types_); }
  std::size_t output_dim() const { return config_.hidden.back(); }

  ParamBlock& params() { return params_; }
  const ParamBlock& params() const { return params_; }

  std::size_t embedding_id() const { return embedding_; }
  std::size_t weight_id(Tower t, std::size_t layer) const;
  std::size_t bias_id(Tower t, std::size_t layer) const;

 private:
  ModelConfig config_;
  std::size_t num_features_;
  std::size_t num_types_;
  ParamBlock params_;
  std::size_t embedding_ = 0;
  std::vector<std::size_t> weights_[2];
  std::vector<std::size_t> biases_[2];
};

/// Forward pass of one tower over a batch of nodes (one column per node),
/// keeping what the backward pass needs.
struct TowerPass {
  Tower tower = Tower::A;
  std::vector<AggPlan> plans;
  std::vector<Eigen::MatrixXd> activations;  // input, then each layer after ELU
  std::vector<Eigen::MatrixXd> pre;          // each layer before ELU
  Eigen::VectorXd norms;
  Eigen::MatrixXd output;  // unit columns
};

TowerPass tower_forward(const Model& model, Tower tower, std::vector<AggPlan> plans);

/// Accumulates into grad (sized like model.params()) the gradient of a scalar
/// whose derivative w.r.t. pass.output is d_output.
void tower_backward(const Model& model, const TowerPass& pass, const Eigen::MatrixXd& d_output,
                    Gradient& grad);

/// Representation of one node under a training-time sampled plan.
Eigen::VectorXd embed_node(const Model& model, const SourceGraph& graph, NodeId node, Tower tower,
                           Rng& rng);

struct TriplePlan {
  AggPlan anchor;
  AggPlan positive;
  std::vector<AggPlan> negatives;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradient grad;
};

constexpr double kLogitClamp = 30.0;

/// Mean over triples of positive_weight * BCE(σ(s_p), 1) + Σ BCE(σ(s_n), 0)
/// with logits clamped to [-30, 30].
double edge_loss_from_scores(std::span<const double> positive_scores,
                             const std::vector<std::vector<double>>& negative_scores,
                             double positive_weight);

/// Loss and exact gradient w.r.t. model.params() for a batch of triples.
/// Anchors go through tower A, positives and negatives through tower B.
LossAndGrad edge_loss(const Model& model, const std::vector<TriplePlan>& batch,
                      bool with_grad = true);

/// σ(<A(u), B(v)>) with deterministic inference plans.
double predict_edge(const Model& model, const SourceGraph& graph, std::size_t source, NodeId u,
                    NodeId v, std::uint64_t inference_seed = 0);

double sigmoid(double x);

}  // namespace icpa
