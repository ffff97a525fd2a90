#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "icpa/align.hpp"
#include "icpa/error.hpp"
#include "icpa/oracle.hpp"
#include "icpa/synthetic.hpp"

using namespace icpa;

namespace {

const double kLn2 = std::numbers::ln2;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Eigen::MatrixXd random_gates(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 0.05 + 0.9 * rng.uniform();
  return m;
}

Eigen::MatrixXd row(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(2, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) {
    m(0, i) = x;
    m(1, i) = 0.0;
    ++i;
  }
  return m;
}

ProjectionSet e1() {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 1);
  d(0, 0) = 1.0;
  return ProjectionSet(d);
}

std::vector<double> flatten(const std::vector<Eigen::MatrixXd>& ms) {
  std::vector<double> out;
  for (const auto& m : ms) out.insert(out.end(), m.data(), m.data() + m.size());
  return out;
}

void unflatten(const std::vector<double>& x, std::vector<Eigen::MatrixXd>& ms) {
  std::size_t k = 0;
  for (auto& m : ms)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = x[k++];
}

}  // namespace

TEST(InterpolateIndices, IdentityWhenSizesMatch) {
  EXPECT_EQ(interpolate_indices(4, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(InterpolateIndices, DoublingRepeatsEachIndexTwice) {
  const auto idx = interpolate_indices(1024, 512);
  ASSERT_EQ(idx.size(), 1024u);
  for (std::size_t k = 0; k < 1024; ++k) EXPECT_EQ(idx[k], k / 2) << k;
}

TEST(InterpolateIndices, SingleSourceIndexIsAlwaysZero) {
  const auto idx = interpolate_indices(7, 1);
  EXPECT_EQ(idx, std::vector<std::size_t>(7, 0));
}

TEST(InterpolateIndices, ShrinkingIsMonotoneAndCoversTheEnd) {
  for (std::size_t actual : {5u, 17u, 100u}) {
    const auto idx = interpolate_indices(4, actual);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(idx.back(), actual - 1);
  }
}

TEST(ProjectionSet, ColumnsAreUnitVectors) {
  ProjectionSet p(16, 5, 3);
  EXPECT_EQ(p.size(), 16u);
  EXPECT_EQ(p.dim(), 5u);
  for (Eigen::Index c = 0; c < 16; ++c) EXPECT_NEAR(p.directions().col(c).norm(), 1.0, 1e-12);
  EXPECT_EQ(ProjectionSet(16, 5, 3).directions(), p.directions());
}

TEST(SlicedAlign, IdenticalSetsCostNothing) {
  Rng rng(1);
  const auto x = random_matrix(3, 6, rng);
  const std::vector<Eigen::MatrixXd> gates(2, Eigen::MatrixXd::Ones(1, 6));
  const auto r = sliced_align_loss({x, x}, gates, ProjectionSet(8, 3, 2), 64);
  EXPECT_NEAR(r.loss, 0.0, 1e-15);
}

TEST(SlicedAlign, ClosedGatesAnnihilateTheLoss) {
  Rng rng(2);
  const std::vector<Eigen::MatrixXd> reps{random_matrix(3, 5, rng), random_matrix(3, 7, rng)};
  const std::vector<Eigen::MatrixXd> gates{Eigen::MatrixXd::Zero(1, 5), Eigen::MatrixXd::Zero(1, 7)};
  EXPECT_EQ(sliced_align_loss(reps, gates, ProjectionSet(8, 3, 2), 64).loss, 0.0);
}

TEST(SlicedAlign, ShiftedPairsMatchByHand) {
  const std::vector<Eigen::MatrixXd> reps{row({2.0, 0.0}), row({1.0, 3.0})};
  const std::vector<Eigen::MatrixXd> gates(2, Eigen::MatrixXd::Ones(1, 2));
  const auto r = sliced_align_loss(reps, gates, e1(), 16);
  EXPECT_NEAR(r.loss, 2.0, 1e-12);
  EXPECT_NEAR(r.pair_cost(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(r.pair_cost(1, 0), 1.0, 1e-12);
  EXPECT_NEAR(oracle::exact_ot_1d({0.0, 2.0}, {1.0, 3.0}), 2.0, 1e-12);
}

TEST(SlicedAlign, SortedMatchEqualsExactTransport) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(8));
    std::vector<double> a(n), b(n);
    Eigen::MatrixXd ra = Eigen::MatrixXd::Zero(2, n), rb = Eigen::MatrixXd::Zero(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ra(0, i) = a[i] = rng.normal();
      rb(0, i) = b[i] = rng.normal();
    }
    const std::vector<Eigen::MatrixXd> gates(2, Eigen::MatrixXd::Ones(1, n));
    const auto r = sliced_align_loss({ra, rb}, gates, e1(), 64);
    EXPECT_NEAR(r.pair_cost(0, 1) * n, oracle::exact_ot_1d(a, b), 1e-9);
  }
}

TEST(SlicedAlign, FewerThanTwoSourcesContributeNothing) {
  Rng rng(4);
  const std::vector<Eigen::MatrixXd> reps{random_matrix(3, 4, rng), Eigen::MatrixXd(3, 0)};
  const std::vector<Eigen::MatrixXd> gates{Eigen::MatrixXd::Ones(1, 4), Eigen::MatrixXd(1, 0)};
  const auto r = sliced_align_loss(reps, gates, ProjectionSet(4, 3, 1), 16);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.d_reps[0].norm(), 0.0);
}

TEST(SlicedAlign, SymmetricInSourceOrder) {
  Rng rng(5);
  const std::vector<Eigen::MatrixXd> reps{random_matrix(3, 5, rng), random_matrix(3, 8, rng)};
  const std::vector<Eigen::MatrixXd> gates{random_gates(1, 5, rng), random_gates(1, 8, rng)};
  const ProjectionSet proj(16, 3, 6);
  const double forward = sliced_align_loss(reps, gates, proj, 64).loss;
  const double swapped = sliced_align_loss({reps[1], reps[0]}, {gates[1], gates[0]}, proj, 64).loss;
  EXPECT_NEAR(forward, swapped, 1e-12);
}

TEST(SlicedAlign, InvariantToNodeOrder) {
  Rng rng(7);
  std::vector<Eigen::MatrixXd> reps{random_matrix(3, 6, rng), random_matrix(3, 6, rng)};
  std::vector<Eigen::MatrixXd> gates{random_gates(1, 6, rng), random_gates(1, 6, rng)};
  const ProjectionSet proj(16, 3, 8);
  const double before = sliced_align_loss(reps, gates, proj, 64).loss;
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Eigen::MatrixXd r(3, 6), g(1, 6);
  for (int i = 0; i < 6; ++i) {
    r.col(i) = reps[1].col(perm[i]);
    g.col(i) = gates[1].col(perm[i]);
  }
  reps[1] = r;
  gates[1] = g;
  EXPECT_NEAR(sliced_align_loss(reps, gates, proj, 64).loss, before, 1e-12);
}

TEST(SlicedAlign, GradientMatchesFiniteDifferences) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Eigen::MatrixXd> reps{random_matrix(4, 5, rng), random_matrix(4, 7, rng),
                                      random_matrix(4, 3, rng)};
    std::vector<Eigen::MatrixXd> gates{random_gates(2, 5, rng), random_gates(2, 7, rng),
                                       random_gates(2, 3, rng)};
    const ProjectionSet proj(6, 4, 10 + trial);
    const std::size_t cap = 6;  // forces subsampling of the 7-node source
    const auto r = sliced_align_loss(reps, gates, proj, cap);
    EXPECT_NEAR(r.loss, sliced_align_loss(reps, gates, proj, cap, &r.match).loss, 1e-14);

    auto f_reps = [&](const std::vector<double>& x) {
      auto rr = reps;
      unflatten(x, rr);
      return sliced_align_loss(rr, gates, proj, cap, &r.match, false).loss;
    };
    auto f_gates = [&](const std::vector<double>& x) {
      auto gg = gates;
      unflatten(x, gg);
      return sliced_align_loss(reps, gg, proj, cap, &r.match, false).loss;
    };
    EXPECT_LT(oracle::max_relative_error(flatten(r.d_reps),
                                         oracle::central_differences(f_reps, flatten(reps))),
              1e-4);
    EXPECT_LT(oracle::max_relative_error(flatten(r.d_gates),
                                         oracle::central_differences(f_gates, flatten(gates))),
              1e-4);
  }
}

TEST(GateLoss, HalfGatesGiveNMinusOneLn2) {
  for (std::size_t n : {1u, 2u, 5u, 40u}) {
    const std::vector<double> t(n, 0.5);
    EXPECT_NEAR(gate_loss(t).loss, (n - 1.0) * kLn2, 1e-12) << n;
  }
}

TEST(GateLoss, CertainAndDiverseLimitIsMinusLn2) {
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    const std::vector<double> t{eps, 1.0 - eps};
    // Each entropy term is about eps (1 - ln eps).
    EXPECT_NEAR(gate_loss(t).loss, -kLn2, 2 * eps * (1 - std::log(eps)) + 1e-15) << eps;
  }
}

TEST(GateLoss, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  std::vector<double> t(9);
  for (auto& x : t) x = 0.05 + 0.9 * rng.uniform();
  const auto g = gate_loss(t);
  const auto fd = oracle::central_differences(
      [](const std::vector<double>& x) { return gate_loss(x).loss; }, t, 1e-6);
  EXPECT_LT(oracle::max_relative_error(g.grad, fd), 1e-6);
}

TEST(GateLoss, RejectsClosedInterval) {
  EXPECT_THROW(gate_loss(std::vector<double>{0.5, 1.0}), ValidationError);
  EXPECT_THROW(gate_loss(std::vector<double>{0.0}), ValidationError);
}

TEST(GateColumn, SkipsTheDiagonal) {
  EXPECT_EQ(gate_column(0, 1), 0u);
  EXPECT_EQ(gate_column(1, 0), 0u);
  EXPECT_EQ(gate_column(2, 1), 1u);
  EXPECT_EQ(gate_column(1, 2), 1u);
}

namespace {

struct AlignFixture {
  MultiSourceGraph graph;
  Model model;
  GateNet gate;
  std::vector<std::vector<AggPlan>> plans;

  explicit AlignFixture(std::uint64_t seed, std::size_t m = 2)
      : graph(make_graph(m)),
        model(small(), graph.num_features(), graph.num_types(), seed),
        gate(small().hidden.back(), m, {6}, seed + 1) {
    Rng rng(seed + 2);
    plans.resize(m);
    const auto part = category_partition(graph, 0);
    for (std::size_t s = 0; s < m; ++s)
      for (NodeId n : part[s])
        plans[s].push_back(sample_plan(graph.sources[s], n, 3, rng));
  }

  static ModelConfig small() {
    ModelConfig c;
    c.embed_dim = 3;
    c.hidden = {5, 4};
    c.neighbor_samples = 3;
    return c;
  }

  static MultiSourceGraph make_graph(std::size_t m) {
    SyntheticSpec spec;
    spec.sources = m;
    spec.categories = 2;
    spec.nodes_per_source = 16;
    spec.clusters = 3;
    return generate_synthetic(spec).graph;
  }

  std::vector<double> flat() const {
    std::vector<double> x(model.params().values().begin(), model.params().values().end());
    x.insert(x.end(), gate.params().values().begin(), gate.params().values().end());
    return x;
  }
};

}  // namespace

TEST(AlignmentObjective, SingleSourceIsGateLossOnly) {
  AlignFixture fx(1);
  fx.plans[1].clear();
  const ProjectionSet proj(8, 4, 2);
  const auto r = alignment_objective(fx.model, fx.gate, fx.plans, proj, 64);
  EXPECT_EQ(r.sliced, 0.0);
  EXPECT_NEAR(r.loss, r.gate, 1e-15);
  std::vector<double> t(r.gates[0].data(), r.gates[0].data() + r.gates[0].size());
  EXPECT_NEAR(r.gate, gate_loss(t).loss, 1e-12);
}

TEST(AlignmentObjective, IdenticalSourcesWithOpenGatesLeaveOnlyTheRegularizer) {
  AlignFixture fx(2);
  fx.plans[1] = fx.plans[0];
  const ProjectionSet proj(8, 4, 3);
  auto frozen = freeze_alignment(fx.model, fx.gate, fx.plans, proj, 64);
  // Gates pinned at the clamp just below one.
  for (auto& g : frozen.gates) g.setConstant(1.0 - 1e-9);
  const auto r = alignment_objective(fx.model, fx.gate, fx.plans, proj, 64, &frozen);
  EXPECT_NEAR(r.sliced, 0.0, 1e-14);
  EXPECT_NEAR(r.loss, r.gate, 1e-14);
}

TEST(AlignmentObjective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    AlignFixture fx(seed, 3);
    const ProjectionSet proj(8, 4, seed);
    const auto r = alignment_objective(fx.model, fx.gate, fx.plans, proj, 64);
    std::vector<double> analytic = r.model_grad;
    analytic.insert(analytic.end(), r.gate_grad.begin(), r.gate_grad.end());

    const std::size_t nm = fx.model.params().size();
    auto f = [&](const std::vector<double>& x) {
      Model model = fx.model;
      GateNet gate = fx.gate;
      std::copy(x.begin(), x.begin() + nm, model.params().values().begin());
      std::copy(x.begin() + nm, x.end(), gate.params().values().begin());
      return alignment_objective(model, gate, fx.plans, proj, 64, nullptr, false).loss;
    };
    const auto fd = oracle::central_differences(f, fx.flat(), 1e-6);
    EXPECT_LT(oracle::norm_relative_error(analytic, fd), 1e-4) << "seed " << seed;
  }
}

TEST(AlignmentObjective, FrozenAlignmentHasNoGateGradient) {
  AlignFixture fx(6);
  const ProjectionSet proj(8, 4, 7);
  const auto frozen = freeze_alignment(fx.model, fx.gate, fx.plans, proj, 64);
  const auto r = alignment_objective(fx.model, fx.gate, fx.plans, proj, 64, &frozen);
  for (double g : r.gate_grad) EXPECT_EQ(g, 0.0);
  // The regularizer is a constant of the frozen gates.
  double expected = 0.0;
  for (const auto& g : frozen.gates) {
    std::vector<double> t(g.data(), g.data() + g.size());
    expected += gate_loss(t).loss;
  }
  EXPECT_NEAR(r.gate, expected, 1e-12);
  double norm = 0.0;
  for (double g : r.model_grad) norm += g * g;
  EXPECT_GT(norm, 0.0);
}

TEST(AlignmentObjective, GateCountMismatchThrows) {
  AlignFixture fx(8);
  GateNet wrong(4, 3, {6}, 1);
  EXPECT_THROW(alignment_objective(fx.model, wrong, fx.plans, ProjectionSet(4, 4, 1), 64),
               ValidationError);
}

TEST(GateNet, GatesLieInTheOpenInterval) {
  GateNet gate(4, 3, {6}, 2);
  Rng rng(3);
  const auto pass = gate.forward(random_matrix(4, 10, rng));
  ASSERT_EQ(pass.gates.rows(), 2);
  ASSERT_EQ(pass.gates.cols(), 10);
  EXPECT_GT(pass.gates.minCoeff(), 0.0);
  EXPECT_LT(pass.gates.maxCoeff(), 1.0);
}
