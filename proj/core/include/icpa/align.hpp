#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "icpa/model.hpp"
#include "icpa/params.hpp"

namespace icpa {

/// 1-based k maps to round(k * n_actual / n_target) clamped to [1, n_actual],
/// returned 0-based. Rounding is half-up, evaluated in exact integer arithmetic.
std::vector<std::size_t> interpolate_indices(std::size_t n_target, std::size_t n_actual);

/// Random unit directions, one per column, drawn from a seeded stream.
class ProjectionSet {
 public:
  ProjectionSet(std::size_t count, std::size_t dim, std::uint64_t seed);
  explicit ProjectionSet(Eigen::MatrixXd directions);

  std::size_t size() const { return static_cast<std::size_t>(dirs_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(dirs_.rows()); }
  const Eigen::MatrixXd& directions() const { return dirs_; }

 private:
  Eigen::MatrixXd dirs_;
};

/// Column of source j's gate matrix that holds its gate toward source k.
constexpr std::size_t gate_column(std::size_t j, std::size_t k) { return k < j ? k : k - 1; }

/// The matched index sequences per projection: match[p][s] lists, for each of
/// the n_target matched positions, the node (column) of source s. Empty for
/// absent sources.
using MatchPlan = std::vector<std::vector<std::vector<std::uint32_t>>>;

struct SlicedResult {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> d_reps;   // per source, same shape as reps
  std::vector<Eigen::MatrixXd> d_gates;  // per source, same shape as gates
  /// Ungated mean matched cost per source pair, averaged over projections
  /// (symmetric; zero on the diagonal and for absent pairs).
  Eigen::MatrixXd pair_cost;
  MatchPlan match;
};

/// Gated sliced alignment loss over the sources present in a batch.
/// reps[s] is d x n_s (n_s = 0 when absent); gates[s] is (m-1) x n_s with
/// gates[s](gate_column(s, k), i) = t_{s,k} for node i. Each projection sorts
/// every source (index tie-break), equalizes lengths to
/// n_target = min(cap, max n_s) via interpolate_indices, and sums
/// t_{j,k} t_{k,j} (a - b)^2 over matched positions. The result is averaged
/// over projections and over ordered pairs of present sources. When `fixed`
/// is given its matching is used instead of sorting.
SlicedResult sliced_align_loss(const std::vector<Eigen::MatrixXd>& reps,
                               const std::vector<Eigen::MatrixXd>& gates,
                               const ProjectionSet& projections, std::size_t cap,
                               const MatchPlan* fixed = nullptr, bool with_grad = true);

struct GateLoss {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Σ_i H(t_i) - H(mean t), with H the binary entropy in nats. Throws
/// ValidationError if any gate is outside (0, 1).
GateLoss gate_loss(std::span<const double> gates);

/// θ_t: one shared MLP from a node representation to m-1 directional gate
/// logits (hidden ELU layers, linear output), clamped and squashed by σ.
class GateNet {
 public:
  GateNet(std::size_t input_dim, std::size_t num_sources, std::vector<std::size_t> hidden,
          std::uint64_t seed);

  std::size_t num_sources() const { return num_sources_; }
  std::size_t input_dim() const { return input_dim_; }
  ParamBlock& params() { return params_; }
  const ParamBlock& params() const { return params_; }

  struct Pass {
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> pre;
    Eigen::MatrixXd gates;  // (m-1) x n
  };

  Pass forward(const Eigen::MatrixXd& reps) const;
  /// Adds the parameter gradient to grad and returns d loss / d reps.
  Eigen::MatrixXd backward(const Pass& pass, const Eigen::MatrixXd& d_gates, Gradient& grad) const;

 private:
  std::size_t input_dim_;
  std::size_t num_sources_;
  ParamBlock params_;
  std::vector<std::size_t> weights_;
  std::vector<std::size_t> biases_;
};

/// Gates and matching computed once from a frozen model, then held fixed.
struct FrozenAlignment {
  MatchPlan match;
  std::vector<Eigen::MatrixXd> gates;
};

struct AlignmentResult {
  double loss = 0.0;
  double sliced = 0.0;
  double gate = 0.0;
  Gradient model_grad;
  Gradient gate_grad;
  Eigen::MatrixXd pair_cost;
  std::vector<Eigen::MatrixXd> gates;
};

/// ℓ_a = sliced_align_loss + Σ gate_loss over every (present source j, other
/// source k) gate population. Representations come from tower A. With
/// `frozen`, gates and matching are taken from it: only the sliced term
/// depends on the model and gate_grad stays zero.
AlignmentResult alignment_objective(const Model& model, const GateNet& gate,
                                    const std::vector<std::vector<AggPlan>>& plans,
                                    const ProjectionSet& projections, std::size_t cap,
                                    const FrozenAlignment* frozen = nullptr,
                                    bool with_grad = true);

FrozenAlignment freeze_alignment(const Model& model, const GateNet& gate,
                                 const std::vector<std::vector<AggPlan>>& plans,
                                 const ProjectionSet& projections, std::size_t cap);

}  // namespace icpa
