#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "icpa/error.hpp"
#include "icpa/oracle.hpp"
#include "icpa/pareto.hpp"

using namespace icpa;

namespace {

std::vector<LossVector> random_points(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<LossVector> pts(n, LossVector(m));
  for (auto& p : pts)
    for (auto& x : p) x = rng.uniform();
  return pts;
}

// Points on the simplex-like surface Σ x = 1, all mutually non-dominated.
std::vector<LossVector> random_front(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<LossVector> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(sample_lambda(m, rng));
  return pts;
}

}  // namespace

TEST(Dominates, HandCases) {
  EXPECT_FALSE(dominates({1, 2}, {1, 2}));
  EXPECT_TRUE(dominates({1, 2}, {1, 3}));
  EXPECT_FALSE(dominates({1, 3}, {2, 2}));
  EXPECT_FALSE(dominates({2, 2}, {1, 3}));
  EXPECT_FALSE(dominates({1, 3}, {1, 2}));
}

TEST(ExtractFront, HandCases) {
  EXPECT_EQ(extract_front({{1, 2}, {2, 1}, {2, 2}}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(extract_front({{4, 4}}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(extract_front({{1, 1}, {2, 2}, {3, 3}}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(extract_front({{1, 2}, {1, 2}, {3, 3}}), (std::vector<std::size_t>{0, 1}));
}

TEST(ExtractFront, MatchesBruteForce) {
  Rng rng(1);
  for (std::size_t m : {2u, 3u, 4u}) {
    const auto pts = random_points(100, m, rng);
    EXPECT_EQ(extract_front(pts), oracle::enumerate_front(pts)) << "m = " << m;
  }
}

TEST(ExtractFront, FrontPointsAreMutuallyNonDominated) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_points(60, 3, rng);
    const auto front = extract_front(pts);
    for (std::size_t i : front)
      for (std::size_t j = 0; j < pts.size(); ++j) EXPECT_FALSE(dominates(pts[j], pts[i]));
  }
}

TEST(Huf, SinglePointIsItsRectangle) {
  const auto r = huf({{2, 3}}, {0, 0});
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.volume, 6.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(Huf, TwoRectanglesByInclusionExclusion) {
  EXPECT_EQ(huf({{1, 3}, {3, 1}}, {0, 0}).volume, 5.0);
  EXPECT_EQ(huf({{1, 3}, {3, 1}, {2, 2}}, {0, 0}).volume, 6.0);
  EXPECT_EQ(huf({{2, 4}, {4, 2}}, {1, 1}).volume, 5.0);
}

TEST(Huf, CeilingClipsTheRegion) {
  EXPECT_EQ(huf({{2, 3}}, {0, 0}, LossVector{1, 1}).volume, 1.0);
}

TEST(Huf, PointOnBaselineGivesZero) {
  EXPECT_EQ(huf({{0, 0}}, {0, 0}).volume, 0.0);
  EXPECT_EQ(huf({{0, 0, 0}}, {0, 0, 0}).volume, 0.0);
}

TEST(Huf, PointBelowBaselineThrows) {
  EXPECT_THROW(huf({{-1, 2}}, {0, 0}), ValidationError);
}

TEST(Huf, ExactSweepMatchesGridOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto front = random_front(6, 2, rng);
    const LossVector nu0{0, 0};
    LossVector ceiling{0, 0};
    for (const auto& p : front)
      for (std::size_t j = 0; j < 2; ++j) ceiling[j] = std::max(ceiling[j], p[j]);
    const double exact = huf(front, nu0).volume;
    const double grid = oracle::grid_hypervolume(front, nu0, ceiling, 2000);
    EXPECT_NEAR(exact, grid, 2e-3);
  }
}

TEST(Huf, MonteCarloAgreesWithGridInThreeDimensions) {
  Rng rng(4);
  const auto front = random_front(8, 3, rng);
  const LossVector nu0{0, 0, 0};
  const LossVector ceiling{1, 1, 1};
  const auto r = huf(front, nu0, ceiling, 5, 200000);
  EXPECT_FALSE(r.exact);
  EXPECT_EQ(r.samples, 200000u);
  EXPECT_GT(r.std_error, 0.0);
  const double grid = oracle::grid_hypervolume(front, nu0, ceiling, 200);
  EXPECT_LE(std::abs(r.volume - grid), 3 * r.std_error);
}

TEST(Huf, DeterministicForASeed) {
  Rng rng(5);
  const auto front = random_front(5, 3, rng);
  EXPECT_EQ(huf(front, {0, 0, 0}, std::nullopt, 9).volume,
            huf(front, {0, 0, 0}, std::nullopt, 9).volume);
}

TEST(VRec, HandCases) {
  EXPECT_EQ(v_rec({1, 2}, {1, 2}).volume, 0.0);
  const auto r = v_rec({2, 3}, {0, 0});
  EXPECT_EQ(r.volume, 6.0);
  EXPECT_EQ(r.am_gm_bound, 6.25);
  const auto one = v_rec({1.5}, {0.25});
  EXPECT_EQ(one.volume, 1.25);
  EXPECT_EQ(one.am_gm_bound, 1.25);
}

TEST(VRec, BoundNeverBelowVolume) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.index(5);
    LossVector l(m), nu0(m, 0.0);
    for (auto& x : l) x = 3 * rng.uniform();
    const auto r = v_rec(l, nu0);
    EXPECT_GE(r.am_gm_bound, r.volume * (1 - 1e-12));
  }
}

TEST(Tnt, HandCases) {
  EXPECT_EQ(tnt({1, 2}, {1, 2}), (std::vector<double>{0, 0}));
  const auto e = tnt({0.9, 2.0}, {1.0, 2.0});
  EXPECT_NEAR(e[0], -0.1, 1e-15);
  EXPECT_EQ(e[1], 0.0);
}

TEST(SampleLambda, SingleSourceIsOne) {
  Rng rng(7);
  EXPECT_EQ(sample_lambda(1, rng), (std::vector<double>{1.0}));
}

TEST(SampleLambda, TwoSourcesAreSymmetric) {
  Rng rng(8);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto l = sample_lambda(2, rng);
    ASSERT_NEAR(l[0] + l[1], 1.0, 1e-12);
    ASSERT_GE(l[0], 0.0);
    sum += l[0];
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Preference, NearOneHotOnTheTarget) {
  const auto p = PreferenceVector::make(3, 1, 0.05);
  EXPECT_EQ(p.z, (std::vector<double>{0.05, 1.0, 0.05}));
  EXPECT_THROW(PreferenceVector::make(3, 3, 0.05), ValidationError);
  EXPECT_THROW(PreferenceVector::make(3, 0, -1.0), ValidationError);
}

TEST(MinNorm, OrthogonalUnitVectors) {
  const auto r = min_norm_point(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR(r.alpha[0], 0.5, 1e-6);
  EXPECT_NEAR(r.alpha[1], 0.5, 1e-6);
}

TEST(MinNorm, PicksTheShorterVectorWhenItIsTheMinimum) {
  Eigen::MatrixXd g(2, 2);
  g << 1, 2, 2, 5;  // <a,b> exceeds |a|^2, so a itself is the closest hull point
  const auto r = min_norm_point(g);
  EXPECT_NEAR(r.alpha[0], 1.0, 1e-9);
}

TEST(Pmtl, SingleSourceIsOne) {
  const auto r = pmtl_weights({0.3}, {{1.0, -2.0}}, PreferenceVector::make(1, 0, 0.05));
  EXPECT_EQ(r.weights, (std::vector<double>{1.0}));
  EXPECT_FALSE(r.restricted);
}

TEST(Pmtl, IdenticalGradientsGiveTheSharedDirection) {
  const Gradient g{0.3, -0.4, 1.2};
  const auto r = pmtl_weights({1.0, 2.0}, {g, g}, PreferenceVector::make(2, 0, 1.0));
  EXPECT_NEAR(r.weights[0] + r.weights[1], 1.0, 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_NEAR(r.weights[0] * g[i] + r.weights[1] * g[i], g[i], 1e-12);
}

TEST(Pmtl, OrthogonalUnitGradientsSplitEvenly) {
  const auto r = pmtl_weights({1.0, 2.0}, {{1.0, 0.0}, {0.0, 1.0}}, PreferenceVector::make(2, 0, 1.0));
  ASSERT_EQ(r.active, (std::vector<std::size_t>{1}));
  EXPECT_NEAR(r.weights[0], 0.5, 1e-6);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-6);
  const double d0 = r.weights[0], d1 = r.weights[1];
  EXPECT_NEAR(d0 * d0 + d1 * d1, 0.5, 1e-6);
}

TEST(Pmtl, InactiveSourcesLeaveTheTargetAlone) {
  const auto r = pmtl_weights({2.0, 0.01}, {{1.0, 0.0}, {0.0, 1.0}}, PreferenceVector::make(2, 0, 0.05));
  EXPECT_TRUE(r.active.empty());
  EXPECT_EQ(r.weights, (std::vector<double>{1.0, 0.0}));
}

TEST(Pmtl, OpposedGradientsAreRestricted) {
  const auto r = pmtl_weights({1.0, 2.0}, {{1.0, 0.0}, {-1.0, 0.0}}, PreferenceVector::make(2, 0, 1.0));
  EXPECT_TRUE(r.restricted);
  EXPECT_EQ(r.weights, (std::vector<double>{1.0, 0.0}));
}

TEST(Pmtl, DirectionNeverAscendsConstrainedObjectives) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.index(3), dim = 4;
    LossVector losses(m);
    std::vector<Gradient> grads(m, Gradient(dim));
    for (auto& l : losses) l = 0.1 + rng.uniform();
    for (auto& g : grads)
      for (auto& x : g) x = rng.normal();
    const auto pref = PreferenceVector::make(m, rng.index(m), 0.3);
    const auto r = pmtl_weights(losses, grads, pref);
    double wsum = 0.0;
    Gradient d(dim, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      EXPECT_GE(r.weights[j], 0.0);
      wsum += r.weights[j];
      axpy(r.weights[j], grads[j], d);
    }
    EXPECT_NEAR(wsum, 1.0, 1e-12);
    if (r.restricted) continue;
    EXPECT_GE(dot(d, grads[pref.target]), -1e-8);
    for (std::size_t j : r.active) EXPECT_GE(dot(d, grads[j]), -1e-8);
  }
}

TEST(Convexity, HandCases) {
  EXPECT_EQ(convexity_fraction({{0, 2}, {2, 0}}), 1.0);
  // The middle point sits above the chord and no weighting selects it.
  EXPECT_NEAR(convexity_fraction({{0, 2}, {1.5, 1.5}, {2, 0}}), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(convexity_fraction({{0, 2}, {0.5, 0.5}, {2, 0}}), 1.0);
}
