#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icpa/align.hpp"
#include "icpa/config.hpp"
#include "icpa/eval.hpp"
#include "icpa/graph.hpp"
#include "icpa/model.hpp"
#include "icpa/pareto.hpp"
#include "icpa/sampler.hpp"

namespace icpa {

/// Fixed triples per source with deterministic inference plans. L_j(θ) is the
/// edge loss of the model on probe source j, so every run is scored on
/// exactly the same data.
struct Probe {
  std::vector<std::vector<Triple>> triples;
  std::vector<std::vector<TriplePlan>> plans;
};

Probe make_probe(const MultiSourceGraph& graph, const TrainConfig& config);
LossVector probe_losses(const Model& model, const Probe& probe);

struct ProbePoint {
  std::size_t step = 0;
  LossVector losses;
};

struct PhaseTrace {
  std::vector<double> step_loss;
  std::vector<ProbePoint> probes;
  std::size_t steps_run = 0;
  /// Step whose parameters were kept (only for runs that restore the best).
  std::size_t best_step = 0;
  bool early_stopped = false;
};

/// Fresh parameters. Every run with the same seed starts from the same point.
Model initial_model(const MultiSourceGraph& graph, const TrainConfig& config);
GateNet initial_gate(const MultiSourceGraph& graph, const TrainConfig& config);

struct SooResult {
  Model model;
  /// Best probe loss of the source over the run: the ν⁰_j candidate.
  double loss = 0.0;
  PhaseTrace trace;
};

/// Edge loss on source j alone for total_steps() steps, keeping the
/// parameters with the lowest probe loss on j.
SooResult run_soo(const MultiSourceGraph& graph, std::size_t source, const TrainConfig& config,
                  const Probe& probe);

/// Σ λ_j L_j + β ℓ_a on one batch, with gradients for the model and the gate
/// net. ℓ_a is skipped when β = 0 or fewer than two sources exist.
struct Phase1Objective {
  double loss = 0.0;
  double align_loss = 0.0;
  bool has_align = false;
  Gradient model_grad;
  Gradient gate_grad;
};

Phase1Objective phase1_objective(const Model& model, const GateNet& gate,
                                 const std::vector<std::vector<TriplePlan>>& triples,
                                 const std::vector<std::vector<AggPlan>>& align,
                                 const std::vector<double>& lambda, double beta,
                                 const ProjectionSet& projections, std::size_t cap,
                                 bool with_grad = true);

struct Phase1Result {
  Model model;
  GateNet gate;
  PhaseTrace trace;
  std::vector<double> align_loss;  // β-free ℓ_a per step
};

/// Steps on Σ λ_j L_j + β ℓ_a with λ resampled every step. Returns the final
/// parameters as the frozen alignment model.
Phase1Result run_phase1(const MultiSourceGraph& graph, const TrainConfig& config,
                        const Probe& probe);

struct Phase2Result {
  Model model;
  PhaseTrace trace;
  std::vector<double> target_weight;  // w_{j*} per step
  std::vector<double> align_loss;
  std::size_t restricted_steps = 0;
  std::uint64_t frozen_model_hash_before = 0;
  std::uint64_t frozen_model_hash_after = 0;
  std::uint64_t frozen_gate_hash_before = 0;
  std::uint64_t frozen_gate_hash_after = 0;
};

/// Steps on Σ w_j L_j + β ℓ_a(π⁰, t⁰; θ_n, θ_t⁰) with w from pmtl_weights (or
/// uniform under Ablation::Pareto). Gates and matching are recomputed every
/// batch from the frozen model. Keeps the parameters with the lowest probe
/// loss on the target.
Phase2Result run_phase2(const MultiSourceGraph& graph, const Phase1Result& frozen,
                        std::size_t target, const TrainConfig& config, const Probe& probe);

struct SinglePhaseResult {
  Model model;
  GateNet gate;
  PhaseTrace trace;
  std::vector<double> target_weight;
  std::vector<double> align_loss;
  std::size_t restricted_steps = 0;
};

/// Ablation::Front: PMTL weights and a trainable alignment term in one loop of
/// total_steps() steps.
SinglePhaseResult run_single_phase(const MultiSourceGraph& graph, std::size_t target,
                                   const TrainConfig& config, const Probe& probe);

struct GateCategoryStats {
  Category category = 0;
  std::size_t nodes = 0;
  double mean = 0.0;
  /// direction[j][k]: mean gate of source j toward source k (NaN on the
  /// diagonal or when j has no node in the category).
  std::vector<std::vector<double>> direction;
};

std::vector<GateCategoryStats> gate_statistics(const Model& model, const GateNet& gate,
                                               const MultiSourceGraph& graph,
                                               std::uint64_t inference_seed);

struct CategoryAlignment {
  Category category = 0;
  double gated_loss = 0.0;
  std::vector<std::vector<double>> pair_cost;
};

std::vector<CategoryAlignment> alignment_diagnostics(const Model& model, const GateNet& gate,
                                                     const MultiSourceGraph& graph,
                                                     const TrainConfig& config);

struct RankingMetrics {
  double ndcg = 0.0;
  double f_measure = 0.0;
  std::size_t queries = 0;
};

/// Ranks same-category candidates of held-out queries by predict_edge.
RankingMetrics ranking_metrics(const Model& model, const EvalSplit& split, std::size_t source,
                               const TrainConfig& config);

struct TargetResult {
  std::size_t target = 0;
  PhaseTrace trace;
  std::vector<double> target_weight;
  std::vector<double> align_loss;
  std::size_t restricted_steps = 0;
  LossVector final_losses;
  std::vector<double> epsilon;
  std::optional<VRec> vrec;
  std::vector<double> held_out_risk;
  RankingMetrics ranking;
  std::uint64_t frozen_model_hash_before = 0;
  std::uint64_t frozen_model_hash_after = 0;
  std::uint64_t frozen_gate_hash_before = 0;
  std::uint64_t frozen_gate_hash_after = 0;
};

struct FrontSummary {
  std::vector<LossVector> population;
  std::vector<std::string> labels;
  std::vector<std::size_t> front;
  LossVector reference;
  LossVector ceiling;
  HufResult huf;
  double convexity = 0.0;
};

struct RunResult {
  TrainConfig config;
  std::uint64_t config_hash = 0;
  std::uint64_t data_hash = 0;
  std::size_t num_sources = 0;
  std::size_t num_categories = 0;
  std::vector<std::size_t> train_edges;
  std::vector<std::size_t> held_out_edges;

  LossVector nu0;
  std::vector<PhaseTrace> soo;
  std::vector<std::vector<double>> soo_held_out_risk;

  std::optional<PhaseTrace> phase1;
  std::vector<double> phase1_align_loss;
  std::vector<TargetResult> targets;
  std::optional<FrontSummary> front;
  std::vector<GateCategoryStats> gates;
  std::vector<CategoryAlignment> alignment;
};

struct RunArtifacts {
  RunResult result;
  std::optional<Model> phase1_model;
  std::optional<GateNet> gate;
  std::vector<Model> target_models;
  bool nu0_from_cache = false;
};

struct RunOptions {
  /// JSON file mapping "<config hash>:<seed>:<data hash>" to stored ν⁰.
  std::optional<std::filesystem::path> nu0_cache;
};

/// Orchestrates the whole method: held-out split, probe, SOO baselines (or
/// cached ν⁰), phase 1, then phase 2 per target (or the configured ablation).
RunArtifacts run_icpa(const MultiSourceGraph& graph, const TrainConfig& config,
                      const RunOptions& options = {});

/// Content hash of a graph (nodes, features, edges).
std::uint64_t graph_hash(const MultiSourceGraph& graph);

}  // namespace icpa
