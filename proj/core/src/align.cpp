#include "icpa/align.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "icpa/error.hpp"
#include "icpa/parallel.hpp"
#include "icpa/rng.hpp"

namespace icpa {

std::vector<std::size_t> interpolate_indices(std::size_t n_target, std::size_t n_actual) {
  if (n_target == 0 || n_actual == 0)
    throw ValidationError("interpolate_indices: sizes must be >= 1");
  std::vector<std::size_t> out(n_target);
  const std::uint64_t t = n_target;
  const std::uint64_t a = n_actual;
  for (std::uint64_t k = 1; k <= t; ++k) {
    std::uint64_t r = (2 * k * a + t) / (2 * t);
    r = std::clamp<std::uint64_t>(r, 1, a);
    out[k - 1] = static_cast<std::size_t>(r - 1);
  }
  return out;
}

ProjectionSet::ProjectionSet(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (count == 0 || dim == 0) throw ValidationError("projection set must be non-empty");
  Rng rng(seed);
  dirs_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  for (Eigen::Index p = 0; p < dirs_.cols(); ++p) {
    double norm = 0.0;
    while (norm < 1e-8) {
      for (Eigen::Index r = 0; r < dirs_.rows(); ++r) dirs_(r, p) = rng.normal();
      norm = dirs_.col(p).norm();
    }
    dirs_.col(p) /= norm;
  }
}

ProjectionSet::ProjectionSet(Eigen::MatrixXd directions) : dirs_(std::move(directions)) {
  if (dirs_.size() == 0) throw ValidationError("projection set must be non-empty");
  for (Eigen::Index p = 0; p < dirs_.cols(); ++p) {
    const double norm = dirs_.col(p).norm();
    if (norm < 1e-12) throw ValidationError("projection direction must be non-zero");
    dirs_.col(p) /= norm;
  }
}

namespace {

constexpr std::size_t kProjectionChunks = 16;

struct ChunkAccum {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> d_gates;
  Eigen::MatrixXd pair_cost;
};

}  // namespace

SlicedResult sliced_align_loss(const std::vector<Eigen::MatrixXd>& reps,
                               const std::vector<Eigen::MatrixXd>& gates,
                               const ProjectionSet& projections, std::size_t cap,
                               const MatchPlan* fixed, bool with_grad) {
  const std::size_t m = reps.size();
  if (gates.size() != m) throw ValidationError("sliced loss: one gate matrix per source");
  if (cap == 0) throw ValidationError("sliced loss: cap must be positive");
  std::vector<std::size_t> present;
  std::size_t n_max = 0;
  for (std::size_t s = 0; s < m; ++s) {
    const auto n = static_cast<std::size_t>(reps[s].cols());
    if (n == 0) continue;
    if (static_cast<std::size_t>(reps[s].rows()) != projections.dim())
      throw ValidationError("sliced loss: representation size does not match projections");
    if (gates[s].cols() != reps[s].cols() || static_cast<std::size_t>(gates[s].rows()) != m - 1)
      throw ValidationError("sliced loss: gate matrix shape mismatch");
    present.push_back(s);
    n_max = std::max(n_max, n);
  }

  SlicedResult out;
  out.pair_cost = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  if (with_grad) {
    for (std::size_t s = 0; s < m; ++s) {
      out.d_reps.push_back(Eigen::MatrixXd::Zero(reps[s].rows(), reps[s].cols()));
      out.d_gates.push_back(Eigen::MatrixXd::Zero(gates[s].rows(), gates[s].cols()));
    }
  }
  if (present.size() < 2) return out;

  const std::size_t P = projections.size();
  const std::size_t n_target = std::min(cap, n_max);
  const double p = static_cast<double>(present.size());
  // Ordered pairs (j,k) and (k,j) contribute identical terms, so each
  // unordered pair is counted twice.
  const double scale = 2.0 / (static_cast<double>(P) * p * (p - 1.0));

  if (fixed) {
    if (fixed->size() != P) throw ValidationError("sliced loss: match plan size mismatch");
  }
  std::vector<std::vector<std::size_t>> interp(m);
  for (std::size_t s : present)
    interp[s] = interpolate_indices(n_target, static_cast<std::size_t>(reps[s].cols()));

  out.match.assign(P, std::vector<std::vector<std::uint32_t>>(m));
  const auto& dirs = projections.directions();
  // projected[s](i, p): node i of source s on direction p. Gradients are
  // gathered per projection in the same layout and mapped back through the
  // directions in one product, which keeps the per-position updates scalar.
  std::vector<Eigen::MatrixXd> projected(m);
  std::vector<Eigen::MatrixXd> d_projected(m);
  for (std::size_t s : present) {
    projected[s] = reps[s].transpose() * dirs;
    if (with_grad) d_projected[s] = Eigen::MatrixXd::Zero(projected[s].rows(), projected[s].cols());
  }

  const std::size_t chunks = std::min(kProjectionChunks, P);
  std::vector<ChunkAccum> accum(chunks);

  parallel_chunks(chunks, [&](std::size_t chunk) {
    ChunkAccum& acc = accum[chunk];
    acc.pair_cost = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    if (with_grad)
      for (std::size_t s = 0; s < m; ++s)
        acc.d_gates.push_back(Eigen::MatrixXd::Zero(gates[s].rows(), gates[s].cols()));
    std::vector<std::pair<double, std::uint32_t>> order;
    for (std::size_t pi = chunk * P / chunks; pi < (chunk + 1) * P / chunks; ++pi) {
      const auto col = static_cast<Eigen::Index>(pi);
      auto& match = out.match[pi];
      for (std::size_t s : present) {
        if (fixed) {
          match[s] = (*fixed)[pi].at(s);
          if (match[s].size() != n_target)
            throw ValidationError("sliced loss: match plan length mismatch");
          continue;
        }
        // Sorting (value, index) pairs in place keeps the comparisons in
        // cache; ties still break on the lower index.
        const double* v = projected[s].col(col).data();
        order.resize(static_cast<std::size_t>(projected[s].rows()));
        for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = {v[i], i};
        std::sort(order.begin(), order.end());
        match[s].resize(n_target);
        for (std::size_t i = 0; i < n_target; ++i) match[s][i] = order[interp[s][i]].second;
      }
      for (std::size_t a = 0; a < present.size(); ++a)
        for (std::size_t b = a + 1; b < present.size(); ++b) {
          const std::size_t j = present[a];
          const std::size_t k = present[b];
          const auto gj = static_cast<Eigen::Index>(gate_column(j, k));
          const auto gk = static_cast<Eigen::Index>(gate_column(k, j));
          const double* pj = projected[j].col(col).data();
          const double* pk = projected[k].col(col).data();
          double* dj = with_grad ? d_projected[j].col(col).data() : nullptr;
          double* dk = with_grad ? d_projected[k].col(col).data() : nullptr;
          double term = 0.0;
          double raw = 0.0;
          for (std::size_t i = 0; i < n_target; ++i) {
            const auto x = match[j][i];
            const auto y = match[k][i];
            const double diff = pj[x] - pk[y];
            const double u = diff * diff;
            const double t1 = gates[j](gj, x);
            const double t2 = gates[k](gk, y);
            term += t1 * t2 * u;
            raw += u;
            if (with_grad) {
              acc.d_gates[j](gj, x) += scale * t2 * u;
              acc.d_gates[k](gk, y) += scale * t1 * u;
              const double g = scale * t1 * t2 * 2.0 * diff;
              dj[x] += g;
              dk[y] -= g;
            }
          }
          acc.loss += scale * term;
          const double mean_cost = raw / (static_cast<double>(n_target) * static_cast<double>(P));
          acc.pair_cost(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += mean_cost;
          acc.pair_cost(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) += mean_cost;
        }
    }
  });

  for (const auto& acc : accum) {
    out.loss += acc.loss;
    out.pair_cost += acc.pair_cost;
    if (with_grad)
      for (std::size_t s = 0; s < m; ++s) out.d_gates[s] += acc.d_gates[s];
  }
  if (with_grad)
    for (std::size_t s : present) out.d_reps[s] = dirs * d_projected[s].transpose();
  return out;
}

GateLoss gate_loss(std::span<const double> gates) {
  GateLoss out;
  if (gates.empty()) return out;
  auto entropy = [](double t) { return -t * std::log(t) - (1.0 - t) * std::log1p(-t); };
  auto entropy_slope = [](double t) { return std::log1p(-t) - std::log(t); };
  double mean = 0.0;
  for (double t : gates) {
    if (!(t > 0.0 && t < 1.0)) throw ValidationError("gate value outside (0, 1)");
    out.loss += entropy(t);
    mean += t;
  }
  const double n = static_cast<double>(gates.size());
  mean /= n;
  out.loss -= entropy(mean);
  const double mean_slope = entropy_slope(mean) / n;
  out.grad.resize(gates.size());
  for (std::size_t i = 0; i < gates.size(); ++i) out.grad[i] = entropy_slope(gates[i]) - mean_slope;
  return out;
}

GateNet::GateNet(std::size_t input_dim, std::size_t num_sources, std::vector<std::size_t> hidden,
                 std::uint64_t seed)
    : input_dim_(input_dim), num_sources_(num_sources) {
  if (input_dim == 0 || num_sources == 0) throw ValidationError("gate net: bad dimensions");
  for (auto h : hidden)
    if (h == 0) throw ValidationError("gate net: hidden dims must be positive");
  hidden.push_back(num_sources - 1);
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    const std::string prefix = "gate." + std::to_string(l);
    weights_.push_back(params_.add(prefix + ".weight", {hidden[l], in}));
    biases_.push_back(params_.add(prefix + ".bias", {hidden[l]}));
    in = hidden[l];
  }
  Rng rng(seed);
  for (std::size_t id : weights_) {
    const auto& s = params_.spec(id);
    const double a = std::sqrt(6.0 / static_cast<double>(s.shape[0] + s.shape[1]));
    for (double& v : params_.tensor(id)) v = a * (2.0 * rng.uniform() - 1.0);
  }
}

GateNet::Pass GateNet::forward(const Eigen::MatrixXd& reps) const {
  if (static_cast<std::size_t>(reps.rows()) != input_dim_)
    throw ValidationError("gate net: input size mismatch");
  Pass pass;
  pass.activations.push_back(reps);
  const std::size_t L = weights_.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = params_.matrix(weights_[l]) * pass.activations.back();
    z.colwise() += params_.matrix(biases_[l]).col(0);
    if (l + 1 < L) {
      pass.activations.push_back(z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); }));
    } else {
      pass.gates = z.unaryExpr([](double v) { return sigmoid(v); });
    }
    pass.pre.push_back(std::move(z));
  }
  return pass;
}

Eigen::MatrixXd GateNet::backward(const Pass& pass, const Eigen::MatrixXd& d_gates,
                                  Gradient& grad) const {
  const std::size_t L = weights_.size();
  // σ'(z) = t(1-t) inside the clamp, 0 outside.
  Eigen::MatrixXd dz = d_gates;
  for (Eigen::Index c = 0; c < dz.cols(); ++c)
    for (Eigen::Index r = 0; r < dz.rows(); ++r) {
      const double z = pass.pre[L - 1](r, c);
      const double t = pass.gates(r, c);
      dz(r, c) *= (z > -kLogitClamp && z < kLogitClamp) ? t * (1.0 - t) : 0.0;
    }
  for (std::size_t l = L; l-- > 0;) {
    if (l + 1 < L)
      dz = dz.array() *
           pass.pre[l].unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }).array();
    grad_matrix(grad, params_.spec(weights_[l])).noalias() += dz * pass.activations[l].transpose();
    grad_matrix(grad, params_.spec(biases_[l])).col(0) += dz.rowwise().sum();
    dz = params_.matrix(weights_[l]).transpose() * dz;
  }
  return dz;
}

namespace {

std::vector<TowerPass> forward_sources(const Model& model,
                                       const std::vector<std::vector<AggPlan>>& plans) {
  std::vector<TowerPass> passes;
  passes.reserve(plans.size());
  for (const auto& p : plans) passes.push_back(tower_forward(model, Tower::A, p));
  return passes;
}

}  // namespace

AlignmentResult alignment_objective(const Model& model, const GateNet& gate,
                                    const std::vector<std::vector<AggPlan>>& plans,
                                    const ProjectionSet& projections, std::size_t cap,
                                    const FrozenAlignment* frozen, bool with_grad) {
  const std::size_t m = plans.size();
  if (gate.num_sources() != m) throw ValidationError("alignment: gate net source count mismatch");
  const auto passes = forward_sources(model, plans);
  std::vector<Eigen::MatrixXd> reps(m);
  for (std::size_t s = 0; s < m; ++s) reps[s] = passes[s].output;

  std::vector<GateNet::Pass> gate_passes(m);
  AlignmentResult out;
  out.gates.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    if (frozen) {
      out.gates[s] = frozen->gates.at(s);
      if (out.gates[s].cols() != reps[s].cols())
        throw ValidationError("alignment: frozen gates do not match batch");
    } else if (reps[s].cols() > 0) {
      gate_passes[s] = gate.forward(reps[s]);
      out.gates[s] = gate_passes[s].gates;
    } else {
      out.gates[s] = Eigen::MatrixXd(static_cast<Eigen::Index>(m - 1), 0);
    }
  }

  SlicedResult sliced = sliced_align_loss(reps, out.gates, projections, cap,
                                          frozen ? &frozen->match : nullptr, with_grad);
  out.sliced = sliced.loss;
  out.pair_cost = sliced.pair_cost;

  std::vector<Eigen::MatrixXd> d_gates = std::move(sliced.d_gates);
  for (std::size_t s = 0; s < m; ++s) {
    if (reps[s].cols() == 0) continue;
    for (Eigen::Index r = 0; r < out.gates[s].rows(); ++r) {
      const Eigen::VectorXd row = out.gates[s].row(r).transpose();
      GateLoss g = gate_loss(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      out.gate += g.loss;
      if (with_grad && !frozen)
        for (Eigen::Index i = 0; i < row.size(); ++i) d_gates[s](r, i) += g.grad[static_cast<std::size_t>(i)];
    }
  }
  out.loss = out.sliced + out.gate;
  if (!with_grad) return out;

  out.model_grad = model.params().zeros_like();
  out.gate_grad = gate.params().zeros_like();
  for (std::size_t s = 0; s < m; ++s) {
    if (reps[s].cols() == 0) continue;
    Eigen::MatrixXd d_rep = std::move(sliced.d_reps[s]);
    if (!frozen) d_rep += gate.backward(gate_passes[s], d_gates[s], out.gate_grad);
    tower_backward(model, passes[s], d_rep, out.model_grad);
  }
  return out;
}

FrozenAlignment freeze_alignment(const Model& model, const GateNet& gate,
                                 const std::vector<std::vector<AggPlan>>& plans,
                                 const ProjectionSet& projections, std::size_t cap) {
  const std::size_t m = plans.size();
  const auto passes = forward_sources(model, plans);
  FrozenAlignment frozen;
  std::vector<Eigen::MatrixXd> reps(m);
  frozen.gates.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    reps[s] = passes[s].output;
    frozen.gates[s] = reps[s].cols() > 0 ? gate.forward(reps[s]).gates
                                         : Eigen::MatrixXd(static_cast<Eigen::Index>(m - 1), 0);
  }
  frozen.match = sliced_align_loss(reps, frozen.gates, projections, cap, nullptr, false).match;
  return frozen;
}

}  // namespace icpa
