#include "icpa/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "icpa/error.hpp"

namespace icpa {

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::Align: return "align";
    case Ablation::Pareto: return "pareto";
    case Ablation::Front: return "front";
  }
  return "none";
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "none") return Ablation::None;
  if (s == "align") return Ablation::Align;
  if (s == "pareto") return Ablation::Pareto;
  if (s == "front") return Ablation::Front;
  throw ValidationError("unknown ablation '" + s + "' (expected none|align|pareto|front)");
}

void TrainConfig::validate(std::size_t num_sources) const {
  model.validate();
  for (auto h : gate_hidden)
    if (h == 0) throw ValidationError("gate_hidden dims must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be > 0");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (walk_length == 0) throw ValidationError("walk_length must be positive");
  if (align_cap == 0) throw ValidationError("align_cap must be positive");
  if (projections == 0) throw ValidationError("projections must be positive");
  if (!(eps_pref >= 0.0) || eps_pref > 1.0) throw ValidationError("eps_pref must be in [0, 1]");
  if (eval_every == 0) throw ValidationError("eval_every must be positive");
  if (probe_triples == 0) throw ValidationError("probe_triples must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ValidationError("holdout_fraction must be in [0, 1)");
  if (ndcg_k == 0 || f_k == 0) throw ValidationError("metric cutoffs must be positive");
  if (targets.empty()) throw ValidationError("at least one target source is required");
  std::set<std::size_t> seen;
  for (auto t : targets) {
    if (num_sources > 0 && t >= num_sources)
      throw ValidationError("target source " + std::to_string(t) + " out of range");
    if (!seen.insert(t).second) throw ValidationError("duplicate target source");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"embed_dim", c.model.embed_dim},
      {"hidden", c.model.hidden},
      {"neighbor_samples", c.model.neighbor_samples},
      {"positive_weight", c.model.positive_weight},
      {"gate_hidden", c.gate_hidden},
      {"beta", c.beta},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"negatives", c.negatives},
      {"walk_length", c.walk_length},
      {"align_cap", c.align_cap},
      {"projections", c.projections},
      {"phase1_steps", c.phase1_steps},
      {"phase2_steps", c.phase2_steps},
      {"eps_pref", c.eps_pref},
      {"seed", c.seed},
      {"targets", c.targets},
      {"warm_start", c.warm_start},
      {"eval_every", c.eval_every},
      {"patience", c.patience},
      {"probe_triples", c.probe_triples},
      {"holdout_fraction", c.holdout_fraction},
      {"ndcg_k", c.ndcg_k},
      {"f_k", c.f_k},
      {"eval_queries", c.eval_queries},
      {"ablation", to_string(c.ablation)},
      {"soo_only", c.soo_only},
  };
}

TrainConfig config_from_json(const nlohmann::json& doc, TrainConfig c) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  const auto known = to_json(c);
  for (const auto& [key, value] : doc.items())
    if (!known.contains(key)) throw ValidationError("unknown config key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) doc.at(key).get_to(field);
    };
    get("embed_dim", c.model.embed_dim);
    get("hidden", c.model.hidden);
    get("neighbor_samples", c.model.neighbor_samples);
    get("positive_weight", c.model.positive_weight);
    get("gate_hidden", c.gate_hidden);
    get("beta", c.beta);
    get("learning_rate", c.learning_rate);
    get("batch_size", c.batch_size);
    get("negatives", c.negatives);
    get("walk_length", c.walk_length);
    get("align_cap", c.align_cap);
    get("projections", c.projections);
    get("phase1_steps", c.phase1_steps);
    get("phase2_steps", c.phase2_steps);
    get("eps_pref", c.eps_pref);
    get("seed", c.seed);
    get("targets", c.targets);
    get("warm_start", c.warm_start);
    get("eval_every", c.eval_every);
    get("patience", c.patience);
    get("probe_triples", c.probe_triples);
    get("holdout_fraction", c.holdout_fraction);
    get("ndcg_k", c.ndcg_k);
    get("f_k", c.f_k);
    get("eval_queries", c.eval_queries);
    get("soo_only", c.soo_only);
    if (doc.contains("ablation")) c.ablation = ablation_from_string(doc.at("ablation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a(to_json(config).dump()); }

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace icpa
