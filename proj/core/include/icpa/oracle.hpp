#pragma once

// Brute-force reference implementations. This header and its library share
// no code with the main modules so that cross-checks compare independent
// computations.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace icpa::oracle {

using Point = std::vector<double>;

/// Minimum over all bijections σ of Σ (a_i - b_σ(i))², by dynamic programming
/// over subsets of b. Requires |a| = |b| ≤ 12.
double exact_ot_1d(const std::vector<double>& a, const std::vector<double>& b);

/// O(n²) pairwise dominance scan. Returns ascending indices.
std::vector<std::size_t> enumerate_front(const std::vector<Point>& space);

struct Theorem2Check {
  bool ok = true;
  /// witness[j]: a front index attaining the minimum of objective j.
  std::vector<std::size_t> witness;
  std::string detail;
};

/// For each objective, finds a front point attaining the space-wide minimum.
Theorem2Check verify_theorem2(const std::vector<Point>& space);

struct Theorem1Check {
  bool feasible = false;
  bool ok = false;
  /// Minimum of objective j over points satisfying the improvement constraints.
  double minimum = 0.0;
  std::optional<std::size_t> witness;  // a front point attaining it
  std::string detail;
};

/// Constraint set: L_k(f1) - L_k(f) ≥ delta[k] for every k ≠ j (delta[j] is
/// ignored). Checks that the constrained minimizers of L_j meet the front.
Theorem1Check verify_theorem1(const std::vector<Point>& space, std::size_t f1,
                              const std::vector<double>& delta, std::size_t j);

/// Counts cells of a resolution^m grid over [nu0, ceiling] whose centers lie
/// below some front point (and within the ceiling), times the cell volume.
double grid_hypervolume(const std::vector<Point>& front, const Point& nu0, const Point& ceiling,
                        std::size_t resolution);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every i.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-6);

/// ||a - b||₂ / max(||a||₂, ||b||₂, floor).
double norm_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                           double floor = 1e-12);

}  // namespace icpa::oracle
