#include "icpa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "icpa/error.hpp"
#include "icpa/report.hpp"
#include "icpa/rng.hpp"

namespace icpa {

namespace {

// Offsets for derive_seed(config.seed, ...). Each consumer owns one stream so
// adding draws in one place never shifts another.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kGateStream = 2;
constexpr std::uint64_t kProbeStream = 3;
constexpr std::uint64_t kSplitStream = 4;
constexpr std::uint64_t kInferenceStream = 5;
constexpr std::uint64_t kEvalProjectionStream = 6;
constexpr std::uint64_t kFrontStream = 7;
constexpr std::uint64_t kBatchStream = 10;
constexpr std::uint64_t kAlignStream = 11;
constexpr std::uint64_t kLambdaStream = 12;
constexpr std::uint64_t kPhase2Stream = 1000;
constexpr std::uint64_t kProjectionStream = 1u << 20;

SamplerConfig sampler_config(const TrainConfig& c) {
  return {c.batch_size, c.negatives, c.walk_length, c.align_cap};
}

std::uint64_t inference_seed(const TrainConfig& c) { return derive_seed(c.seed, kInferenceStream); }

struct BatchPlans {
  std::vector<std::vector<TriplePlan>> triples;
  std::vector<std::vector<AggPlan>> align;
};

std::vector<std::vector<TriplePlan>> triple_plans(const MultiSourceGraph& graph,
                                                  const CategoryBatch& batch, std::size_t samples,
                                                  Rng& rng) {
  std::vector<std::vector<TriplePlan>> out(graph.num_sources());
  for (std::size_t s = 0; s < graph.num_sources(); ++s) {
    const auto& src = graph.sources[s];
    for (const auto& t : batch.triples[s]) {
      TriplePlan p;
      p.anchor = sample_plan(src, t.anchor, samples, rng);
      p.positive = sample_plan(src, t.positive, samples, rng);
      for (NodeId n : t.negatives) p.negatives.push_back(sample_plan(src, n, samples, rng));
      out[s].push_back(std::move(p));
    }
  }
  return out;
}

std::vector<std::vector<AggPlan>> align_plans(const MultiSourceGraph& graph,
                                              const CategoryBatch& batch, std::size_t samples,
                                              Rng& rng) {
  std::vector<std::vector<AggPlan>> out(graph.num_sources());
  for (std::size_t s = 0; s < graph.num_sources(); ++s)
    for (NodeId n : batch.align_nodes[s]) out[s].push_back(sample_plan(graph.sources[s], n, samples, rng));
  return out;
}

std::size_t present_count(const std::vector<std::vector<AggPlan>>& plans) {
  std::size_t n = 0;
  for (const auto& p : plans) n += p.empty() ? 0 : 1;
  return n;
}

/// Projection directions are redrawn once per epoch (one pass worth of
/// batches over the node set).
class ProjectionSchedule {
 public:
  ProjectionSchedule(const MultiSourceGraph& graph, const TrainConfig& config, std::size_t dim,
                     std::uint64_t stream)
      : count_(config.projections), dim_(dim), seed_(derive_seed(config.seed, stream)) {
    epoch_steps_ = std::max<std::size_t>(
        1, (graph.total_nodes() + config.batch_size - 1) / config.batch_size);
  }

  const ProjectionSet& at(std::size_t step) {
    const std::size_t epoch = step / epoch_steps_;
    if (!current_ || epoch != epoch_) {
      current_.emplace(count_, dim_, derive_seed(seed_, epoch));
      epoch_ = epoch;
    }
    return *current_;
  }

 private:
  std::size_t count_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::size_t epoch_steps_ = 1;
  std::size_t epoch_ = 0;
  std::optional<ProjectionSet> current_;
};

/// Tracks the best monitored score, snapshots parameters at it, and signals
/// when `patience` consecutive evaluations fail to improve.
class BestKeeper {
 public:
  explicit BestKeeper(std::size_t patience) : patience_(patience) {}

  bool update(double score, std::size_t step, std::initializer_list<const ParamBlock*> blocks) {
    if (!std::isfinite(score)) throw Error("training diverged: non-finite probe loss");
    if (snapshots_.empty() || score < best_) {
      best_ = score;
      best_step_ = step;
      stale_ = 0;
      snapshots_.clear();
      for (const ParamBlock* b : blocks)
        snapshots_.emplace_back(b->values().begin(), b->values().end());
      return false;
    }
    ++stale_;
    return patience_ > 0 && stale_ >= patience_;
  }

  void restore(std::initializer_list<ParamBlock*> blocks) const {
    std::size_t i = 0;
    for (ParamBlock* b : blocks) {
      std::copy(snapshots_.at(i).begin(), snapshots_.at(i).end(), b->values().begin());
      ++i;
    }
  }

  double best() const { return best_; }
  std::size_t best_step() const { return best_step_; }

 private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_step_ = 0;
  std::size_t stale_ = 0;
  std::vector<std::vector<double>> snapshots_;
};

void check_finite(const ParamBlock& params, const char* what) {
  if (!params.all_finite()) throw Error(std::string("training diverged: non-finite ") + what);
}

bool is_eval_step(std::size_t step, std::size_t total, const TrainConfig& config) {
  return step % config.eval_every == 0 || step == total;
}

struct SourceTerms {
  LossVector losses;
  std::vector<Gradient> grads;
  std::vector<bool> present;
};

SourceTerms source_terms(const Model& model, const std::vector<std::vector<TriplePlan>>& plans,
                         const LossVector& fallback_losses) {
  const std::size_t m = plans.size();
  SourceTerms out;
  out.losses = fallback_losses;
  out.grads.resize(m);
  out.present.assign(m, false);
  for (std::size_t s = 0; s < m; ++s) {
    if (plans[s].empty()) {
      out.grads[s] = model.params().zeros_like();
      continue;
    }
    LossAndGrad lg = edge_loss(model, plans[s]);
    out.losses[s] = lg.loss;
    out.grads[s] = std::move(lg.grad);
    out.present[s] = true;
  }
  return out;
}

bool alignment_enabled(const MultiSourceGraph& graph, const TrainConfig& config) {
  return graph.num_sources() >= 2 && config.ablation != Ablation::Align;
}

std::vector<AggPlan> all_plans(const Model& model, const SourceGraph& graph, std::size_t source,
                               std::uint64_t seed) {
  std::vector<AggPlan> plans;
  plans.reserve(graph.size());
  for (NodeId n = 0; n < graph.size(); ++n)
    plans.push_back(inference_plan(graph, source, n, model.config().neighbor_samples, seed));
  return plans;
}

Eigen::MatrixXd all_reps(const Model& model, const SourceGraph& graph, std::size_t source,
                         Tower tower, std::uint64_t seed) {
  return tower_forward(model, tower, all_plans(model, graph, source, seed)).output;
}

}  // namespace

Probe make_probe(const MultiSourceGraph& graph, const TrainConfig& config) {
  Probe probe;
  const std::size_t m = graph.num_sources();
  probe.triples.resize(m);
  probe.plans.resize(m);
  BatchSampler sampler(graph, sampler_config(config));
  Rng rng(derive_seed(config.seed, kProbeStream));
  const std::uint64_t seed = inference_seed(config);
  for (std::size_t s = 0; s < m; ++s) {
    const auto& src = graph.sources[s];
    if (src.size() == 0) continue;
    const std::size_t attempts = 8 * config.probe_triples + 64;
    for (std::size_t a = 0; a < attempts && probe.triples[s].size() < config.probe_triples; ++a) {
      const auto anchor = static_cast<NodeId>(rng.index(src.size()));
      if (auto t = sampler.triple_for(s, anchor, rng)) probe.triples[s].push_back(std::move(*t));
    }
    const std::size_t S = config.model.neighbor_samples;
    for (const auto& t : probe.triples[s]) {
      TriplePlan p;
      p.anchor = inference_plan(src, s, t.anchor, S, seed);
      p.positive = inference_plan(src, s, t.positive, S, seed);
      for (NodeId n : t.negatives) p.negatives.push_back(inference_plan(src, s, n, S, seed));
      probe.plans[s].push_back(std::move(p));
    }
  }
  return probe;
}

LossVector probe_losses(const Model& model, const Probe& probe) {
  LossVector out(probe.plans.size(), 0.0);
  for (std::size_t s = 0; s < probe.plans.size(); ++s) {
    if (probe.plans[s].empty()) throw ValidationError("probe has no triples for source " + std::to_string(s));
    out[s] = edge_loss(model, probe.plans[s], false).loss;
  }
  return out;
}

Model initial_model(const MultiSourceGraph& graph, const TrainConfig& config) {
  return Model(config.model, graph.num_features(), graph.num_types(),
               derive_seed(config.seed, kInitStream));
}

GateNet initial_gate(const MultiSourceGraph& graph, const TrainConfig& config) {
  return GateNet(config.model.hidden.back(), graph.num_sources(), config.gate_hidden,
                 derive_seed(config.seed, kGateStream));
}

SooResult run_soo(const MultiSourceGraph& graph, std::size_t source, const TrainConfig& config,
                  const Probe& probe) {
  if (source >= graph.num_sources()) throw ValidationError("source index out of range");
  if (graph.sources[source].size() == 0) throw ValidationError("run_soo: empty source");
  SooResult out{initial_model(graph, config), 0.0, {}};
  Model& model = out.model;
  Adagrad opt(model.params().size(), config.learning_rate);
  BatchSampler sampler(graph, sampler_config(config));
  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  BestKeeper keeper(config.patience);
  const std::size_t total = config.total_steps();

  auto evaluate = [&](std::size_t step) {
    LossVector losses = probe_losses(model, probe);
    out.trace.probes.push_back({step, losses});
    return keeper.update(losses[source], step, {&model.params()});
  };
  evaluate(0);
  for (std::size_t step = 1; step <= total; ++step) {
    out.trace.steps_run = step;
    const CategoryBatch batch = sampler.next_batch(batch_rng, source);
    const auto plans = triple_plans(graph, batch, config.model.neighbor_samples, batch_rng);
    if (!plans[source].empty()) {
      const LossAndGrad lg = edge_loss(model, plans[source]);
      opt.step(model.params().values(), lg.grad);
      check_finite(model.params(), "SOO parameters");
      out.trace.step_loss.push_back(lg.loss);
    }
    if (is_eval_step(step, total, config) && evaluate(step)) {
      out.trace.early_stopped = true;
      break;
    }
  }
  keeper.restore({&model.params()});
  out.trace.best_step = keeper.best_step();
  out.loss = keeper.best();
  return out;
}

Phase1Objective phase1_objective(const Model& model, const GateNet& gate,
                                 const std::vector<std::vector<TriplePlan>>& triples,
                                 const std::vector<std::vector<AggPlan>>& align,
                                 const std::vector<double>& lambda, double beta,
                                 const ProjectionSet& projections, std::size_t cap,
                                 bool with_grad) {
  const std::size_t m = triples.size();
  if (lambda.size() != m) throw ValidationError("phase1_objective: lambda size mismatch");
  Phase1Objective out;
  out.model_grad = model.params().zeros_like();
  out.gate_grad = gate.params().zeros_like();
  for (std::size_t s = 0; s < m; ++s) {
    if (triples[s].empty()) continue;
    const LossAndGrad lg = edge_loss(model, triples[s], with_grad);
    if (with_grad) axpy(lambda[s], lg.grad, out.model_grad);
    out.loss += lambda[s] * lg.loss;
  }
  if (beta > 0.0 && m >= 2 && present_count(align) > 0) {
    const AlignmentResult ar =
        alignment_objective(model, gate, align, projections, cap, nullptr, with_grad);
    if (with_grad) {
      axpy(beta, ar.model_grad, out.model_grad);
      axpy(beta, ar.gate_grad, out.gate_grad);
    }
    out.loss += beta * ar.loss;
    out.align_loss = ar.loss;
    out.has_align = true;
  }
  return out;
}

Phase1Result run_phase1(const MultiSourceGraph& graph, const TrainConfig& config,
                        const Probe& probe) {
  const std::size_t m = graph.num_sources();
  Phase1Result out{initial_model(graph, config), initial_gate(graph, config), {}, {}};
  Model& model = out.model;
  GateNet& gate = out.gate;
  Adagrad model_opt(model.params().size(), config.learning_rate);
  Adagrad gate_opt(gate.params().size(), config.learning_rate);
  BatchSampler sampler(graph, sampler_config(config));
  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  Rng align_rng(derive_seed(config.seed, kAlignStream));
  Rng lambda_rng(derive_seed(config.seed, kLambdaStream));
  ProjectionSchedule projections(graph, config, model.output_dim(), kProjectionStream);
  const bool use_align = alignment_enabled(graph, config);
  BestKeeper keeper(config.patience);
  const std::size_t total = config.phase1_steps;

  auto evaluate = [&](std::size_t step) {
    LossVector losses = probe_losses(model, probe);
    out.trace.probes.push_back({step, losses});
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(m);
    return keeper.update(mean, step, {&model.params(), &gate.params()});
  };
  evaluate(0);
  for (std::size_t step = 1; step <= total; ++step) {
    out.trace.steps_run = step;
    const CategoryBatch batch = sampler.next_batch(batch_rng);
    const auto plans = triple_plans(graph, batch, config.model.neighbor_samples, batch_rng);
    const auto lambda = sample_lambda(m, lambda_rng);
    std::vector<std::vector<AggPlan>> aplans(m);
    if (use_align) aplans = align_plans(graph, batch, config.model.neighbor_samples, align_rng);
    const bool any_triples =
        std::any_of(plans.begin(), plans.end(), [](const auto& p) { return !p.empty(); });
    if (any_triples || present_count(aplans) > 0) {
      const Phase1Objective obj = phase1_objective(model, gate, plans, aplans, lambda,
                                                   use_align ? config.beta : 0.0,
                                                   projections.at(step - 1), config.align_cap);
      if (obj.has_align) {
        gate_opt.step(gate.params().values(), obj.gate_grad);
        check_finite(gate.params(), "gate parameters");
        out.align_loss.push_back(obj.align_loss);
      }
      model_opt.step(model.params().values(), obj.model_grad);
      check_finite(model.params(), "model parameters");
      out.trace.step_loss.push_back(obj.loss);
    }
    if (is_eval_step(step, total, config) && evaluate(step)) {
      out.trace.early_stopped = true;
      break;
    }
  }
  out.trace.best_step = out.trace.steps_run;
  return out;
}

namespace {

/// Shared body of phase 2 and the single-phase ablation.
struct PreferenceLoopResult {
  PhaseTrace trace;
  std::vector<double> target_weight;
  std::vector<double> align_loss;
  std::size_t restricted_steps = 0;
};

PreferenceLoopResult preference_loop(const MultiSourceGraph& graph, std::size_t target,
                                     const TrainConfig& config, const Probe& probe, Model& model,
                                     GateNet& gate, const Model* frozen_model, bool train_gate,
                                     std::size_t total) {
  const std::size_t m = graph.num_sources();
  PreferenceLoopResult out;
  Adagrad model_opt(model.params().size(), config.learning_rate);
  Adagrad gate_opt(gate.params().size(), config.learning_rate);
  BatchSampler sampler(graph, sampler_config(config));
  const std::uint64_t stream = kPhase2Stream + 8 * target;
  Rng batch_rng(derive_seed(config.seed, stream));
  Rng align_rng(derive_seed(config.seed, stream + 1));
  ProjectionSchedule projections(graph, config, model.output_dim(), kProjectionStream + stream);
  const bool use_align = alignment_enabled(graph, config);
  const PreferenceVector pref = PreferenceVector::make(m, target, config.eps_pref);
  BestKeeper keeper(config.patience);

  LossVector last_losses;
  auto evaluate = [&](std::size_t step) {
    LossVector losses = probe_losses(model, probe);
    out.trace.probes.push_back({step, losses});
    if (last_losses.empty()) last_losses = losses;
    return keeper.update(losses[target], step, {&model.params(), &gate.params()});
  };
  evaluate(0);
  for (std::size_t step = 1; step <= total; ++step) {
    out.trace.steps_run = step;
    const CategoryBatch batch = sampler.next_batch(batch_rng);
    const auto plans = triple_plans(graph, batch, config.model.neighbor_samples, batch_rng);
    SourceTerms terms = source_terms(model, plans, last_losses);
    last_losses = terms.losses;
    if (std::none_of(terms.present.begin(), terms.present.end(), [](bool p) { return p; })) continue;

    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    if (config.ablation != Ablation::Pareto) {
      const PmtlResult pm = pmtl_weights(terms.losses, terms.grads, pref);
      w = pm.weights;
      if (pm.restricted) ++out.restricted_steps;
    }
    out.target_weight.push_back(w[target]);

    Gradient grad = model.params().zeros_like();
    double total_loss = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      if (!terms.present[s]) continue;
      axpy(w[s], terms.grads[s], grad);
      total_loss += w[s] * terms.losses[s];
    }
    if (use_align) {
      const auto aplans = align_plans(graph, batch, config.model.neighbor_samples, align_rng);
      if (present_count(aplans) >= 1) {
        const ProjectionSet& proj = projections.at(step - 1);
        std::optional<FrozenAlignment> frozen;
        if (frozen_model) frozen = freeze_alignment(*frozen_model, gate, aplans, proj, config.align_cap);
        const AlignmentResult ar = alignment_objective(model, gate, aplans, proj, config.align_cap,
                                                       frozen ? &*frozen : nullptr);
        axpy(config.beta, ar.model_grad, grad);
        if (train_gate) {
          Gradient gate_grad = ar.gate_grad;
          for (double& g : gate_grad) g *= config.beta;
          gate_opt.step(gate.params().values(), gate_grad);
          check_finite(gate.params(), "gate parameters");
        }
        total_loss += config.beta * ar.loss;
        out.align_loss.push_back(ar.loss);
      }
    }
    model_opt.step(model.params().values(), grad);
    check_finite(model.params(), "model parameters");
    out.trace.step_loss.push_back(total_loss);
    if (is_eval_step(step, total, config) && evaluate(step)) {
      out.trace.early_stopped = true;
      break;
    }
  }
  keeper.restore({&model.params(), &gate.params()});
  out.trace.best_step = keeper.best_step();
  return out;
}

}  // namespace

Phase2Result run_phase2(const MultiSourceGraph& graph, const Phase1Result& frozen,
                        std::size_t target, const TrainConfig& config, const Probe& probe) {
  if (target >= graph.num_sources()) throw ValidationError("target source out of range");
  Phase2Result out{config.warm_start ? frozen.model : initial_model(graph, config), {}, {}, {}, 0,
                   0, 0, 0, 0};
  out.frozen_model_hash_before = frozen.model.params().hash();
  out.frozen_gate_hash_before = frozen.gate.params().hash();
  // The loop never steps a gate it is told not to train; pass a private copy
  // anyway so the frozen state is const by construction.
  GateNet gate = frozen.gate;
  auto loop = preference_loop(graph, target, config, probe, out.model, gate, &frozen.model,
                              /*train_gate=*/false, config.phase2_steps);
  out.trace = std::move(loop.trace);
  out.target_weight = std::move(loop.target_weight);
  out.align_loss = std::move(loop.align_loss);
  out.restricted_steps = loop.restricted_steps;
  out.frozen_model_hash_after = frozen.model.params().hash();
  out.frozen_gate_hash_after = frozen.gate.params().hash();
  if (gate.params().hash() != out.frozen_gate_hash_before)
    throw Error("phase 2 modified the frozen gate parameters");
  return out;
}

SinglePhaseResult run_single_phase(const MultiSourceGraph& graph, std::size_t target,
                                   const TrainConfig& config, const Probe& probe) {
  if (target >= graph.num_sources()) throw ValidationError("target source out of range");
  SinglePhaseResult out{initial_model(graph, config), initial_gate(graph, config), {}, {}, {}, 0};
  auto loop = preference_loop(graph, target, config, probe, out.model, out.gate, nullptr,
                              /*train_gate=*/true, config.total_steps());
  out.trace = std::move(loop.trace);
  out.target_weight = std::move(loop.target_weight);
  out.align_loss = std::move(loop.align_loss);
  out.restricted_steps = loop.restricted_steps;
  return out;
}

std::vector<GateCategoryStats> gate_statistics(const Model& model, const GateNet& gate,
                                               const MultiSourceGraph& graph,
                                               std::uint64_t seed) {
  const std::size_t m = graph.num_sources();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<GateCategoryStats> out(graph.num_categories);
  std::vector<double> sum(graph.num_categories, 0.0);
  std::vector<std::size_t> count(graph.num_categories, 0);
  for (Category c = 0; c < graph.num_categories; ++c) {
    out[c].category = c;
    out[c].direction.assign(m, std::vector<double>(m, nan));
  }
  if (m < 2) return out;
  for (std::size_t s = 0; s < m; ++s) {
    const auto& src = graph.sources[s];
    if (src.size() == 0) continue;
    const Eigen::MatrixXd gates = gate.forward(all_reps(model, src, s, Tower::A, seed)).gates;
    for (Category c = 0; c < graph.num_categories; ++c) {
      const auto ids = src.category_nodes(c);
      if (ids.empty()) continue;
      out[c].nodes += ids.size();
      for (std::size_t k = 0; k < m; ++k) {
        if (k == s) continue;
        double dir = 0.0;
        for (NodeId n : ids) dir += gates(static_cast<Eigen::Index>(gate_column(s, k)), n);
        sum[c] += dir;
        count[c] += ids.size();
        out[c].direction[s][k] = dir / static_cast<double>(ids.size());
      }
    }
  }
  for (Category c = 0; c < graph.num_categories; ++c)
    out[c].mean = count[c] ? sum[c] / static_cast<double>(count[c]) : nan;
  return out;
}

std::vector<CategoryAlignment> alignment_diagnostics(const Model& model, const GateNet& gate,
                                                     const MultiSourceGraph& graph,
                                                     const TrainConfig& config) {
  const std::size_t m = graph.num_sources();
  std::vector<CategoryAlignment> out;
  if (m < 2) return out;
  const std::uint64_t seed = inference_seed(config);
  const ProjectionSet proj(config.projections, model.output_dim(),
                           derive_seed(config.seed, kEvalProjectionStream));
  std::vector<Eigen::MatrixXd> reps(m);
  std::vector<Eigen::MatrixXd> gates(m);
  for (std::size_t s = 0; s < m; ++s) {
    reps[s] = all_reps(model, graph.sources[s], s, Tower::A, seed);
    gates[s] = reps[s].cols() ? gate.forward(reps[s]).gates
                              : Eigen::MatrixXd(static_cast<Eigen::Index>(m - 1), 0);
  }
  for (Category c = 0; c < graph.num_categories; ++c) {
    std::vector<Eigen::MatrixXd> r(m);
    std::vector<Eigen::MatrixXd> g(m);
    for (std::size_t s = 0; s < m; ++s) {
      const auto ids = graph.sources[s].category_nodes(c);
      r[s].resize(reps[s].rows(), static_cast<Eigen::Index>(ids.size()));
      g[s].resize(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(ids.size()));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        r[s].col(static_cast<Eigen::Index>(i)) = reps[s].col(ids[i]);
        g[s].col(static_cast<Eigen::Index>(i)) = gates[s].col(ids[i]);
      }
    }
    const SlicedResult sr = sliced_align_loss(r, g, proj, config.align_cap, nullptr, false);
    CategoryAlignment ca;
    ca.category = c;
    ca.gated_loss = sr.loss;
    ca.pair_cost.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        ca.pair_cost[a][b] = sr.pair_cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    out.push_back(std::move(ca));
  }
  return out;
}

RankingMetrics ranking_metrics(const Model& model, const EvalSplit& split, std::size_t source,
                               const TrainConfig& config) {
  RankingMetrics out;
  const auto& src = split.train.sources.at(source);
  std::map<NodeId, std::set<NodeId>> truth;
  for (const Edge& e : split.held_out.at(source)) {
    truth[e.u].insert(e.v);
    truth[e.v].insert(e.u);
  }
  if (truth.empty()) return out;
  std::vector<NodeId> queries;
  for (const auto& [q, gt] : truth) queries.push_back(q);
  Rng rng(derive_seed(split.seed, source));
  for (std::size_t i = queries.size(); i > 1; --i) std::swap(queries[i - 1], queries[rng.index(i)]);
  if (queries.size() > config.eval_queries) queries.resize(config.eval_queries);
  std::sort(queries.begin(), queries.end());

  const std::uint64_t seed = inference_seed(config);
  const Eigen::MatrixXd a = all_reps(model, src, source, Tower::A, seed);
  const Eigen::MatrixXd b = all_reps(model, src, source, Tower::B, seed);
  std::vector<double> ndcg;
  std::vector<double> fm;
  std::vector<double> weight;
  for (NodeId q : queries) {
    const auto nbrs = src.neighbors(q);
    const std::set<NodeId> seen(nbrs.begin(), nbrs.end());
    std::vector<std::pair<double, NodeId>> scored;
    for (NodeId c : src.category_nodes(src.node(q).category)) {
      if (c == q || seen.contains(c)) continue;
      scored.emplace_back(sigmoid(a.col(q).dot(b.col(c))), c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
      return x.first > y.first || (x.first == y.first && x.second < y.second);
    });
    RankedList list;
    list.query = q;
    for (const auto& [score, c] : scored) {
      list.candidates.push_back(c);
      list.scores.push_back(score);
      list.labels.push_back(truth[q].contains(c) ? 1.0 : 0.0);
    }
    ndcg.push_back(ndcg_at_k(list, config.ndcg_k));
    fm.push_back(f_measure_at_k(list, config.f_k, truth[q]));
    weight.push_back(static_cast<double>(truth[q].size()));
  }
  out.queries = queries.size();
  out.ndcg = weighted_mean(ndcg, weight);
  out.f_measure = weighted_mean(fm, weight);
  return out;
}

std::uint64_t graph_hash(const MultiSourceGraph& graph) {
  std::string buf;
  auto put = [&buf](double v) { buf.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(static_cast<double>(graph.num_categories));
  for (const auto& t : graph.type_names) buf += t + '\0';
  for (const auto& s : graph.sources) {
    put(static_cast<double>(s.size()));
    for (const auto& n : s.nodes()) {
      put(n.category);
      put(n.type);
      for (auto f : n.features) put(f);
      buf += '\n';
    }
    for (const auto& e : s.edges()) {
      put(e.u);
      put(e.v);
      put(e.weight);
    }
  }
  return fnv1a(buf);
}

namespace {

/// The subset of the configuration that determines a baseline run.
std::string nu0_cache_key(const TrainConfig& config, std::uint64_t data_hash) {
  auto doc = to_json(config);
  for (const char* k : {"targets", "ablation", "soo_only", "beta", "eps_pref", "warm_start",
                        "gate_hidden", "projections", "align_cap", "ndcg_k", "f_k", "eval_queries"})
    doc.erase(k);
  return hex64(fnv1a(doc.dump())) + ":" + std::to_string(config.seed) + ":" + hex64(data_hash);
}

struct Baselines {
  LossVector nu0;
  std::vector<PhaseTrace> traces;
  std::vector<LossVector> points;  // each SOO model scored on every source
  std::vector<std::vector<double>> held_out;
};

nlohmann::json baselines_to_json(const Baselines& b) {
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& t : b.traces) traces.push_back(trace_to_json(t));
  return {{"nu0", b.nu0}, {"traces", traces}, {"points", b.points}, {"held_out", b.held_out}};
}

Baselines baselines_from_json(const nlohmann::json& doc) {
  Baselines b;
  b.nu0 = doc.at("nu0").get<LossVector>();
  for (const auto& t : doc.at("traces")) b.traces.push_back(trace_from_json(t));
  b.points = doc.at("points").get<std::vector<LossVector>>();
  b.held_out = doc.at("held_out").get<std::vector<std::vector<double>>>();
  return b;
}

std::vector<double> held_out_risks(const Model& model, const EvalSplit& split,
                                   const TrainConfig& config) {
  std::vector<double> out;
  for (std::size_t s = 0; s < split.triples.size(); ++s)
    out.push_back(split.triples[s].empty()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : empirical_risk(model, split, s, inference_seed(config)));
  return out;
}

}  // namespace

RunArtifacts run_icpa(const MultiSourceGraph& graph, const TrainConfig& config,
                      const RunOptions& options) {
  const std::size_t m = graph.num_sources();
  if (m == 0) throw ValidationError("graph has no sources");
  config.validate(m);

  RunArtifacts art;
  RunResult& res = art.result;
  res.config = config;
  res.config_hash = config_hash(config);
  res.data_hash = graph_hash(graph);
  res.num_sources = m;
  res.num_categories = graph.num_categories;

  const EvalSplit split =
      make_split(graph, config.holdout_fraction, derive_seed(config.seed, kSplitStream),
                 config.negatives);
  const MultiSourceGraph& train = split.train;
  for (std::size_t s = 0; s < m; ++s) {
    res.train_edges.push_back(train.sources[s].edges().size());
    res.held_out_edges.push_back(split.held_out[s].size());
  }
  const Probe probe = make_probe(train, config);
  for (std::size_t s = 0; s < m; ++s)
    if (probe.plans[s].empty())
      throw ValidationError("source " + std::to_string(s) + " has no usable training edges");

  // Baselines, possibly from cache.
  const std::string key = nu0_cache_key(config, res.data_hash);
  nlohmann::json cache = nlohmann::json::object();
  if (options.nu0_cache && std::filesystem::exists(*options.nu0_cache))
    cache = read_json_file(*options.nu0_cache);
  Baselines base;
  std::vector<Model> soo_models;
  if (m > 1 && cache.contains(key)) {
    base = baselines_from_json(cache.at(key));
    art.nu0_from_cache = true;
  } else {
    for (std::size_t s = 0; s < m; ++s) {
      SooResult soo = run_soo(train, s, config, probe);
      base.nu0.push_back(soo.loss);
      base.points.push_back(probe_losses(soo.model, probe));
      base.held_out.push_back(held_out_risks(soo.model, split, config));
      base.traces.push_back(std::move(soo.trace));
      soo_models.push_back(std::move(soo.model));
    }
    if (options.nu0_cache) {
      cache[key] = baselines_to_json(base);
      write_json_file(*options.nu0_cache, cache);
    }
  }
  res.nu0 = base.nu0;
  res.soo = base.traces;
  res.soo_held_out_risk = base.held_out;

  if (config.soo_only) return art;

  std::vector<LossVector> population;
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < base.points.size(); ++s) {
    population.push_back(base.points[s]);
    labels.push_back("soo:" + std::to_string(s));
  }
  auto add_trace = [&](const PhaseTrace& t, const std::string& name) {
    for (const auto& p : t.probes) {
      population.push_back(p.losses);
      labels.push_back(name + ":" + std::to_string(p.step));
    }
  };

  if (m == 1) {
    TargetResult tr;
    tr.target = 0;
    tr.final_losses = base.nu0;
    tr.epsilon = tnt(tr.final_losses, base.nu0);
    tr.held_out_risk = base.held_out[0];
    tr.ranking = ranking_metrics(soo_models[0], split, 0, config);
    res.targets.push_back(std::move(tr));
    art.target_models.push_back(std::move(soo_models[0]));
  } else if (config.ablation == Ablation::Front) {
    for (std::size_t target : config.targets) {
      SinglePhaseResult sp = run_single_phase(train, target, config, probe);
      TargetResult tr;
      tr.target = target;
      tr.trace = sp.trace;
      tr.target_weight = sp.target_weight;
      tr.align_loss = sp.align_loss;
      tr.restricted_steps = sp.restricted_steps;
      tr.final_losses = probe_losses(sp.model, probe);
      tr.epsilon = tnt(tr.final_losses, base.nu0);
      tr.held_out_risk = held_out_risks(sp.model, split, config);
      tr.ranking = ranking_metrics(sp.model, split, target, config);
      add_trace(sp.trace, "single:" + std::to_string(target));
      if (res.gates.empty()) {
        res.gates = gate_statistics(sp.model, sp.gate, train, inference_seed(config));
        res.alignment = alignment_diagnostics(sp.model, sp.gate, train, config);
        art.gate = sp.gate;
      }
      res.targets.push_back(std::move(tr));
      art.target_models.push_back(std::move(sp.model));
    }
  } else {
    Phase1Result p1 = run_phase1(train, config, probe);
    res.phase1 = p1.trace;
    res.phase1_align_loss = p1.align_loss;
    add_trace(p1.trace, "phase1");
    res.gates = gate_statistics(p1.model, p1.gate, train, inference_seed(config));
    res.alignment = alignment_diagnostics(p1.model, p1.gate, train, config);
    for (std::size_t target : config.targets) {
      Phase2Result p2 = run_phase2(train, p1, target, config, probe);
      TargetResult tr;
      tr.target = target;
      tr.trace = p2.trace;
      tr.target_weight = p2.target_weight;
      tr.align_loss = p2.align_loss;
      tr.restricted_steps = p2.restricted_steps;
      tr.final_losses = probe_losses(p2.model, probe);
      tr.epsilon = tnt(tr.final_losses, base.nu0);
      tr.held_out_risk = held_out_risks(p2.model, split, config);
      tr.ranking = ranking_metrics(p2.model, split, target, config);
      tr.frozen_model_hash_before = p2.frozen_model_hash_before;
      tr.frozen_model_hash_after = p2.frozen_model_hash_after;
      tr.frozen_gate_hash_before = p2.frozen_gate_hash_before;
      tr.frozen_gate_hash_after = p2.frozen_gate_hash_after;
      add_trace(p2.trace, "phase2:" + std::to_string(target));
      res.targets.push_back(std::move(tr));
      art.target_models.push_back(std::move(p2.model));
    }
    art.phase1_model.emplace(std::move(p1.model));
    art.gate.emplace(std::move(p1.gate));
  }

  // Front over every scored model. The reference point is ν⁰ lowered to the
  // population minimum wherever a multi-source model beat its baseline.
  FrontSummary front;
  front.population = population;
  front.labels = labels;
  front.front = extract_front(population);
  front.reference = base.nu0;
  front.ceiling = population[0];
  for (const auto& p : population)
    for (std::size_t j = 0; j < m; ++j) {
      front.reference[j] = std::min(front.reference[j], p[j]);
      front.ceiling[j] = std::max(front.ceiling[j], p[j]);
    }
  std::vector<LossVector> front_points;
  for (std::size_t i : front.front) front_points.push_back(population[i]);
  front.huf = huf(front_points, front.reference, front.ceiling,
                  derive_seed(config.seed, kFrontStream));
  front.convexity = convexity_fraction(front_points);
  for (auto& tr : res.targets) tr.vrec = v_rec(tr.final_losses, front.reference);
  res.front = std::move(front);
  return art;
}

}  // namespace icpa
