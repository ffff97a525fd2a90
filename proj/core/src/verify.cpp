#include "icpa/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "icpa/align.hpp"
#include "icpa/model.hpp"
#include "icpa/oracle.hpp"
#include "icpa/pareto.hpp"
#include "icpa/rng.hpp"
#include "icpa/sampler.hpp"
#include "icpa/synthetic.hpp"
#include "icpa/trainer.hpp"

namespace icpa::verify {

namespace {

using Clock = std::chrono::steady_clock;

std::string dump(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ']';
  return os.str();
}

std::string dump(const std::vector<LossVector>& pts) {
  std::string out = "[";
  for (std::size_t i = 0; i < pts.size(); ++i) out += (i ? "," : "") + dump(pts[i]);
  return out + "]";
}

template <class F>
CheckResult timed(std::string name, F&& body) {
  const auto start = Clock::now();
  CheckResult r = body();
  r.name = std::move(name);
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

CheckResult fail(std::size_t trials, std::string detail) {
  return {"", false, trials, std::move(detail), 0.0};
}

/// Loss grid in [0,1]^m, rounded to a coarse lattice so ties and duplicate
/// points occur.
std::vector<LossVector> random_space(Rng& rng, std::size_t m, std::size_t n) {
  const double levels = rng.uniform() < 0.5 ? 20.0 : 1e6;
  std::vector<LossVector> out(n, LossVector(m));
  for (auto& p : out)
    for (double& v : p) v = std::floor(rng.uniform() * levels) / levels;
  return out;
}

bool contains(const std::vector<std::size_t>& sorted, std::size_t i) {
  return std::binary_search(sorted.begin(), sorted.end(), i);
}

}  // namespace

std::vector<std::string> check_names() {
  return {"sorted_match_ot", "pareto_front",    "min_witness", "constrained_witness",
          "huf_exact",       "huf_monte_carlo", "pmtl_contract", "gradients"};
}

CheckResult check_sorted_match(std::uint64_t seed, std::size_t trials, bool fault) {
  return timed("sorted_match_ot", [&] {
    Rng rng(derive_seed(seed, 101));
    const ProjectionSet axis(Eigen::MatrixXd::Ones(1, 1));
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t n = 1 + rng.index(8);
      const bool integer = rng.uniform() < 0.3;
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = integer ? static_cast<double>(rng.index(4)) : rng.normal();
        b[i] = integer ? static_cast<double>(rng.index(4)) : rng.normal();
      }
      std::vector<Eigen::MatrixXd> reps = {
          Eigen::Map<Eigen::MatrixXd>(a.data(), 1, static_cast<Eigen::Index>(n)),
          Eigen::Map<Eigen::MatrixXd>(b.data(), 1, static_cast<Eigen::Index>(n))};
      std::vector<Eigen::MatrixXd> gates(2, Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(n)));
      double got = sliced_align_loss(reps, gates, axis, n, nullptr, false).loss;
      if (fault) got += 1e-6;
      const double want = oracle::exact_ot_1d(a, b);
      worst = std::max(worst, std::abs(got - want));
      if (std::abs(got - want) > 1e-9)
        return fail(t + 1, "a=" + dump(a) + " b=" + dump(b) + " sorted=" + std::to_string(got) +
                               " exact=" + std::to_string(want));
    }
    std::ostringstream os;
    os << "max |sorted - exact| = " << worst;
    return CheckResult{"", true, trials, os.str(), 0.0};
  });
}

CheckResult check_front(std::uint64_t seed, std::size_t trials, bool fault) {
  return timed("pareto_front", [&] {
    Rng rng(derive_seed(seed, 102));
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t m = 2 + rng.index(3);
      const auto space = random_space(rng, m, t == 0 ? 500 : 1 + rng.index(300));
      auto got = extract_front(space);
      if (fault && !got.empty()) got.pop_back();
      const auto want = oracle::enumerate_front(space);
      if (got != want)
        return fail(t + 1, "front mismatch on " + std::to_string(space.size()) + " points (m=" +
                               std::to_string(m) + "): " + dump(space));
    }
    return CheckResult{"", true, trials, "extract_front equals the pairwise scan", 0.0};
  });
}

CheckResult check_min_witness(std::uint64_t seed, std::size_t trials, bool fault) {
  return timed("min_witness", [&] {
    Rng rng(derive_seed(seed, 103));
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t m = 2 + rng.index(3);
      const std::size_t n = t == 0 ? 1 : 1 + rng.index(1000);
      const auto space = random_space(rng, m, n);
      auto front = extract_front(space);
      if (fault) front.erase(front.begin());
      const auto check = oracle::verify_theorem2(space);
      if (!check.ok) return fail(t + 1, check.detail + " space=" + dump(space));
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t w = check.witness[j];
        if (!contains(front, w))
          return fail(t + 1, "witness " + std::to_string(w) + " for objective " +
                                 std::to_string(j) + " missing from extract_front");
        double best = space[0][j];
        for (const auto& p : space) best = std::min(best, p[j]);
        if (space[w][j] != best) return fail(t + 1, "witness does not attain the minimum");
      }
    }
    return CheckResult{"", true, trials, "every objective minimum is attained on the front", 0.0};
  });
}

CheckResult check_constrained_witness(std::uint64_t seed, std::size_t trials, bool fault) {
  return timed("constrained_witness", [&] {
    Rng rng(derive_seed(seed, 104));
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t m = 2 + rng.index(3);
      const auto space = random_space(rng, m, 2 + rng.index(400));
      const std::size_t j = rng.index(m);
      const std::size_t f1 = rng.index(space.size());
      // Achievable constraints: scale the improvement of some point that
      // does at least as well as f1 on every other objective.
      std::vector<std::size_t> better;
      for (std::size_t i = 0; i < space.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < m; ++k)
          if (k != j && space[i][k] > space[f1][k]) ok = false;
        if (ok) better.push_back(i);
      }
      const std::size_t w = better[rng.index(better.size())];
      std::vector<double> delta(m, 0.0);
      for (std::size_t k = 0; k < m; ++k)
        if (k != j) delta[k] = rng.uniform() * (space[f1][k] - space[w][k]);

      auto front = extract_front(space);
      if (fault) front.clear();
      const auto check = oracle::verify_theorem1(space, f1, delta, j);
      if (!check.feasible) return fail(t + 1, "constructed constraints reported infeasible");
      if (!check.ok || !check.witness) return fail(t + 1, check.detail + " space=" + dump(space));
      if (!contains(front, *check.witness))
        return fail(t + 1, "constrained minimizer " + std::to_string(*check.witness) +
                               " missing from extract_front; space=" + dump(space));
    }
    return CheckResult{"", true, trials, "constrained minimizers meet the front in every trial", 0.0};
  });
}

CheckResult check_huf_exact(bool fault) {
  return timed("huf_exact", [&] {
    struct Case {
      std::vector<LossVector> front;
      LossVector nu0;
      double area;
    };
    const std::vector<Case> cases = {
        {{{2, 3}}, {0, 0}, 6.0},
        {{{1, 3}, {3, 1}}, {0, 0}, 5.0},
        {{{1, 3}, {2, 2}, {3, 1}}, {0, 0}, 6.0},
        {{{1.5, 2.5}, {2.5, 1.5}}, {0.5, 0.5}, 3.0},
        {{{0, 0}}, {0, 0}, 0.0},
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
      double got = huf(cases[i].front, cases[i].nu0).volume;
      if (fault) got *= 1.01;
      if (got != cases[i].area)
        return fail(i + 1, "front " + dump(cases[i].front) + ": huf=" + std::to_string(got) +
                               " expected " + std::to_string(cases[i].area));
    }
    return CheckResult{"", true, cases.size(), "hand-computed unions reproduced exactly", 0.0};
  });
}

CheckResult check_huf_monte_carlo(std::uint64_t seed, std::size_t fronts, std::size_t resolution,
                                  bool fault) {
  return timed("huf_monte_carlo", [&] {
    Rng rng(derive_seed(seed, 105));
    double worst = 0.0;
    for (std::size_t t = 0; t < fronts; ++t) {
      // Coordinates sit on the oracle's cell boundaries, so the cell count
      // is exact and any disagreement is Monte Carlo error.
      const LossVector nu0 = {0.0, 0.05, 0.1};
      const LossVector span = {1.0, 0.8, 1.2};
      const double cells = static_cast<double>(resolution);
      LossVector ceiling(3);
      for (std::size_t j = 0; j < 3; ++j) ceiling[j] = nu0[j] + span[j];
      std::vector<LossVector> pts(1 + rng.index(10), LossVector(3));
      for (auto& p : pts)
        for (std::size_t j = 0; j < 3; ++j) {
          const auto k = static_cast<double>(resolution / 10 + rng.index(resolution - resolution / 10 + 1));
          p[j] = nu0[j] + span[j] * k / cells;
        }
      std::vector<LossVector> front;
      for (std::size_t i : extract_front(pts)) front.push_back(pts[i]);
      HufResult mc = huf(front, nu0, ceiling, derive_seed(seed, 200 + t));
      if (fault) mc.volume *= 1.05;
      const double grid = oracle::grid_hypervolume(front, nu0, ceiling, resolution);
      const double diff = std::abs(mc.volume - grid);
      // A single box fills the sampling region, so the estimate is exact.
      const double z = mc.std_error > 0.0 ? diff / mc.std_error : (diff <= 1e-9 ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      if (!(z <= 3.0))
        return fail(t + 1, "front " + dump(front) + ": monte carlo " + std::to_string(mc.volume) +
                               " ± " + std::to_string(mc.std_error) + ", grid " +
                               std::to_string(grid));
    }
    std::ostringstream os;
    os << "max deviation " << worst << " standard errors";
    return CheckResult{"", true, fronts, os.str(), 0.0};
  });
}

CheckResult check_pmtl_contract(std::uint64_t seed, std::size_t trials, bool fault) {
  return timed("pmtl_contract", [&] {
    Rng rng(derive_seed(seed, 106));
    // Two orthogonal unit gradients: the min-norm point sits at the midpoint.
    {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(2, 2);
      auto mn = min_norm_point(gram);
      if (fault) mn.alpha[0] += 0.1;
      if (std::abs(mn.alpha[0] - 0.5) > 1e-6 || std::abs(mn.alpha[1] - 0.5) > 1e-6)
        return fail(0, "orthogonal pair: alpha=" + dump(mn.alpha));
    }
    std::size_t restricted = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t m = 2 + rng.index(3);
      const std::size_t dim = 3 + rng.index(10);
      std::vector<Gradient> grads(m, Gradient(dim));
      LossVector losses(m);
      for (std::size_t j = 0; j < m; ++j) {
        losses[j] = 0.1 + rng.uniform();
        for (double& g : grads[j]) g = rng.normal();
      }
      const auto pref = PreferenceVector::make(m, rng.index(m), 0.05);
      const PmtlResult r = pmtl_weights(losses, grads, pref);
      const double sum = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-9 ||
          std::any_of(r.weights.begin(), r.weights.end(), [](double w) { return w < 0.0; }))
        return fail(t + 1, "weights off the simplex: " + dump(r.weights));
      if (r.restricted) {
        ++restricted;
        continue;
      }
      Gradient d(dim, 0.0);
      for (std::size_t j = 0; j < m; ++j) axpy(r.weights[j], grads[j], d);
      std::vector<std::size_t> constrained{pref.target};
      for (std::size_t j : r.active)
        if (pref.z[j] > 0.0) constrained.push_back(j);
      for (std::size_t j : constrained) {
        double ip = 0.0;
        for (std::size_t i = 0; i < dim; ++i) ip += d[i] * grads[j][i];
        if (ip < -1e-8) return fail(t + 1, "direction ascends constrained source " + std::to_string(j));
      }
    }
    return CheckResult{"", true, trials,
                       std::to_string(restricted) + " restricted fallbacks, contract held otherwise",
                       0.0};
  });
}

GradientAudit gradient_audit(std::uint64_t seed, double beta, double step) {
  SyntheticSpec spec;
  spec.sources = 2;
  spec.categories = 2;
  spec.nodes_per_source = 8;
  spec.clusters = 3;
  spec.edge_density = 0.6;
  spec.seed = seed;
  const MultiSourceGraph graph = generate_synthetic(spec).graph;

  ModelConfig mc;
  mc.embed_dim = 4;
  mc.hidden = {6, 4};
  mc.neighbor_samples = 3;
  Model model(mc, graph.num_features(), graph.num_types(), derive_seed(seed, 1));
  GateNet gate(mc.hidden.back(), 2, {5}, derive_seed(seed, 2));

  SamplerConfig sc;
  sc.batch_size = 8;
  sc.negatives = 3;
  BatchSampler sampler(graph, sc);
  Rng rng(derive_seed(seed, 3));
  const CategoryBatch batch = sampler.next_batch(rng);
  std::vector<std::vector<TriplePlan>> triples(2);
  std::vector<std::vector<AggPlan>> align(2);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& src = graph.sources[s];
    for (const auto& t : batch.triples[s]) {
      TriplePlan p;
      p.anchor = sample_plan(src, t.anchor, mc.neighbor_samples, rng);
      p.positive = sample_plan(src, t.positive, mc.neighbor_samples, rng);
      for (NodeId n : t.negatives) p.negatives.push_back(sample_plan(src, n, mc.neighbor_samples, rng));
      triples[s].push_back(std::move(p));
    }
    for (NodeId n : batch.align_nodes[s]) align[s].push_back(sample_plan(src, n, mc.neighbor_samples, rng));
  }
  const auto lambda = sample_lambda(2, rng);
  const ProjectionSet proj(8, mc.hidden.back(), derive_seed(seed, 4));

  const Phase1Objective analytic =
      phase1_objective(model, gate, triples, align, lambda, beta, proj, 1024, true);
  std::vector<double> x(model.params().values().begin(), model.params().values().end());
  x.insert(x.end(), gate.params().values().begin(), gate.params().values().end());
  std::vector<double> g = analytic.model_grad;
  g.insert(g.end(), analytic.gate_grad.begin(), analytic.gate_grad.end());

  const std::size_t nm = model.params().size();
  auto f = [&](const std::vector<double>& v) {
    std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nm), model.params().values().begin());
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(nm), v.end(), gate.params().values().begin());
    return phase1_objective(model, gate, triples, align, lambda, beta, proj, 1024, false).loss;
  };
  const auto numeric = oracle::central_differences(f, x, step);
  f(x);

  GradientAudit out;
  out.parameters = x.size();
  out.loss = analytic.loss;
  out.norm_error = oracle::norm_relative_error(g, numeric);
  out.max_error = oracle::max_relative_error(g, numeric, 1e-4);
  return out;
}

CheckResult check_gradients(std::uint64_t seed, std::size_t seeds, bool fault) {
  return timed("gradients", [&] {
    double worst = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      GradientAudit a = gradient_audit(derive_seed(seed, 300 + s));
      if (fault) a.norm_error += 1e-3;
      worst = std::max(worst, a.norm_error);
      if (!(a.norm_error < 1e-4))
        return fail(s + 1, "seed offset " + std::to_string(s) + ": relative error " +
                               std::to_string(a.norm_error) + " over " +
                               std::to_string(a.parameters) + " parameters");
    }
    std::ostringstream os;
    os << "max relative error " << worst;
    return CheckResult{"", true, seeds, os.str(), 0.0};
  });
}

std::vector<CheckResult> run_suite(const Options& options) {
  auto faulty = [&](const std::string& name) {
    return std::any_of(options.faults.begin(), options.faults.end(),
                       [&](const std::string& f) { return name.rfind(f, 0) == 0; });
  };
  auto wanted = [&](const std::string& name) {
    return options.only.empty() || options.only.contains(name);
  };
  const std::uint64_t seed = options.seed;
  std::vector<CheckResult> out;
  if (wanted("sorted_match_ot")) out.push_back(check_sorted_match(seed, 500, faulty("sorted_match_ot")));
  if (wanted("pareto_front")) out.push_back(check_front(seed, 20, faulty("pareto_front")));
  if (wanted("min_witness")) out.push_back(check_min_witness(seed, 100, faulty("min_witness")));
  if (wanted("constrained_witness"))
    out.push_back(check_constrained_witness(seed, 100, faulty("constrained_witness")));
  if (wanted("huf_exact")) out.push_back(check_huf_exact(faulty("huf_exact")));
  if (wanted("huf_monte_carlo"))
    out.push_back(check_huf_monte_carlo(seed, 20, 200, faulty("huf_monte_carlo")));
  if (wanted("pmtl_contract")) out.push_back(check_pmtl_contract(seed, 200, faulty("pmtl_contract")));
  if (wanted("gradients")) out.push_back(check_gradients(seed, 10, faulty("gradients")));
  return out;
}

}  // namespace icpa::verify
