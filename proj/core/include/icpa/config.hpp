#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icpa/model.hpp"

namespace icpa {

/// Which component a run leaves out, mirroring the ablation variants.
enum class Ablation {
  None,    // full two-phase method
  Align,   // no alignment term anywhere (beta treated as 0)
  Pareto,  // phase 2 uses fixed uniform loss weights instead of PMTL
  Front,   // single phase: alignment, gates and PMTL trained together
};

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

struct TrainConfig {
  ModelConfig model;
  std::vector<std::size_t> gate_hidden = {16};
  double beta = 1.0;
  double learning_rate = 0.02;
  std::size_t batch_size = 128;
  std::size_t negatives = 6;
  std::size_t walk_length = 1;
  std::size_t align_cap = 1024;
  std::size_t projections = 128;
  std::size_t phase1_steps = 300;
  std::size_t phase2_steps = 300;
  double eps_pref = 0.05;
  std::uint64_t seed = 0;
  std::vector<std::size_t> targets = {0};
  bool warm_start = true;
  /// Probe evaluations happen every eval_every steps; training stops after
  /// `patience` evaluations without improvement (0 disables early stopping).
  std::size_t eval_every = 50;
  std::size_t patience = 10;
  /// Fixed triples per source used to measure L_j.
  std::size_t probe_triples = 256;
  double holdout_fraction = 0.1;
  std::size_t ndcg_k = 17;
  std::size_t f_k = 10;
  std::size_t eval_queries = 64;
  Ablation ablation = Ablation::None;
  bool soo_only = false;

  /// Throws ValidationError on out-of-range fields. num_sources = 0 skips the
  /// target-range check.
  void validate(std::size_t num_sources = 0) const;
  /// Total steps given to baselines and single-phase variants.
  std::size_t total_steps() const { return phase1_steps + phase2_steps; }
};

nlohmann::json to_json(const TrainConfig& config);
/// Overlays the keys present in doc onto base. Unknown keys are an error.
TrainConfig config_from_json(const nlohmann::json& doc, TrainConfig base = {});
/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const TrainConfig& config);
std::string hex64(std::uint64_t value);
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace icpa
