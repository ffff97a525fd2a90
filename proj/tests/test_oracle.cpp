#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "icpa/oracle.hpp"
#include "icpa/rng.hpp"

using namespace icpa;
using oracle::Point;

namespace {

std::vector<Point> random_space(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<Point> pts(n, Point(m));
  for (auto& p : pts)
    for (auto& x : p) x = std::round(10 * rng.uniform()) / 10;  // coarse grid forces ties
  return pts;
}

}  // namespace

TEST(ExactOt, HandCases) {
  EXPECT_EQ(oracle::exact_ot_1d({1, 5, 2}, {1, 5, 2}), 0.0);
  EXPECT_NEAR(oracle::exact_ot_1d({0, 2}, {1, 3}), 2.0, 1e-15);
  EXPECT_NEAR(oracle::exact_ot_1d({2, 0}, {3, 1}), 2.0, 1e-15);
  EXPECT_NEAR(oracle::exact_ot_1d({0, 2}, {3, 1}), 2.0, 1e-15);
}

TEST(ExactOt, OrderInvariantAndMatchesSortedPairing) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    const double cost = oracle::exact_ot_1d(a, b);
    auto ra = a, rb = b;
    std::reverse(ra.begin(), ra.end());
    EXPECT_NEAR(oracle::exact_ot_1d(ra, rb), cost, 1e-12);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double sorted = 0.0;
    for (std::size_t i = 0; i < n; ++i) sorted += (a[i] - b[i]) * (a[i] - b[i]);
    EXPECT_NEAR(cost, sorted, 1e-9);
  }
}

TEST(ExactOt, RejectsBadSizes) {
  EXPECT_THROW(oracle::exact_ot_1d({1, 2}, {1}), std::exception);
  EXPECT_THROW(oracle::exact_ot_1d(std::vector<double>(13), std::vector<double>(13)), std::exception);
}

TEST(EnumerateFront, HandCases) {
  EXPECT_EQ(oracle::enumerate_front({{1, 2}, {2, 1}}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(oracle::enumerate_front({{3, 3}, {1, 1}, {2, 2}}), (std::vector<std::size_t>{1}));
}

TEST(FrontWitness, WitnessForEveryObjective) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.index(3);
    const auto space = random_space(1 + rng.index(300), m, rng);
    const auto check = oracle::verify_theorem2(space);
    ASSERT_TRUE(check.ok) << check.detail;
    const auto front = oracle::enumerate_front(space);
    ASSERT_EQ(check.witness.size(), m);
    for (std::size_t j = 0; j < m; ++j) {
      EXPECT_TRUE(std::binary_search(front.begin(), front.end(), check.witness[j]));
      double best = space[0][j];
      for (const auto& p : space) best = std::min(best, p[j]);
      EXPECT_EQ(space[check.witness[j]][j], best);
    }
  }
}

TEST(FrontWitness, SinglePointWitnessesEverything) {
  const auto check = oracle::verify_theorem2({{0.3, 0.7, 0.1}});
  EXPECT_TRUE(check.ok);
  EXPECT_EQ(check.witness, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(ConstrainedMinimizer, ZeroConstraintsGiveTheGlobalMinimum) {
  Rng rng(3);
  const auto space = random_space(200, 3, rng);
  // f1 is the worst point, so every point meets ΔL = 0.
  Point worst(3, 2.0);
  auto s = space;
  s.push_back(worst);
  const auto check = oracle::verify_theorem1(s, s.size() - 1, {0, 0, 0}, 1);
  ASSERT_TRUE(check.feasible);
  EXPECT_TRUE(check.ok) << check.detail;
  double best = 2.0;
  for (const auto& p : s) best = std::min(best, p[1]);
  EXPECT_EQ(check.minimum, best);
}

TEST(ConstrainedMinimizer, ImpossibleConstraintsAreInfeasible) {
  const auto check = oracle::verify_theorem1({{1, 1}, {2, 0.5}}, 0, {0, 10}, 0);
  EXPECT_FALSE(check.feasible);
  EXPECT_FALSE(check.witness.has_value());
}

TEST(ConstrainedMinimizer, ConstrainedMinimizerMeetsTheFront) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.index(3);
    const auto space = random_space(50 + rng.index(150), m, rng);
    const std::size_t f1 = rng.index(space.size());
    std::vector<double> delta(m);
    for (auto& d : delta) d = 0.3 * rng.uniform();
    const auto check = oracle::verify_theorem1(space, f1, delta, rng.index(m));
    if (check.feasible) {
      EXPECT_TRUE(check.ok) << check.detail;
    }
  }
}

TEST(GridHypervolume, ConvergesToTheRectangle) {
  const double coarse = oracle::grid_hypervolume({{2, 3}}, {0, 0}, {4, 4}, 10);
  const double fine = oracle::grid_hypervolume({{2, 3}}, {0, 0}, {4, 4}, 400);
  EXPECT_NEAR(fine, 6.0, 1e-9);
  EXPECT_NEAR(coarse, 6.0, 0.5);
}

TEST(GridHypervolume, TwoRectanglesGiveFive) {
  EXPECT_NEAR(oracle::grid_hypervolume({{1, 3}, {3, 1}}, {0, 0}, {3, 3}, 300), 5.0, 0.05);
}

TEST(GridHypervolume, EmptyRegion) {
  EXPECT_EQ(oracle::grid_hypervolume({{0, 0}}, {0, 0}, {1, 1}, 50), 0.0);
}

TEST(FiniteDifferences, QuadraticIsExact) {
  auto f = [](const std::vector<double>& x) { return 3 * x[0] * x[0] + x[0] * x[1]; };
  const auto g = oracle::central_differences(f, {1.0, 2.0}, 1e-4);
  EXPECT_NEAR(g[0], 8.0, 1e-7);
  EXPECT_NEAR(g[1], 1.0, 1e-7);
}

TEST(RelativeError, UsesTheFloor) {
  EXPECT_EQ(oracle::max_relative_error({1.0}, {1.0}), 0.0);
  EXPECT_NEAR(oracle::max_relative_error({2.0}, {1.0}), 0.5, 1e-15);
  EXPECT_NEAR(oracle::max_relative_error({1e-9}, {0.0}, 1e-6), 1e-3, 1e-15);
  EXPECT_NEAR(oracle::norm_relative_error({3.0, 0.0}, {0.0, 4.0}), 5.0 / 4.0, 1e-15);
}
