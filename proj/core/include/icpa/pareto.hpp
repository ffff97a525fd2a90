#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "icpa/params.hpp"
#include "icpa/rng.hpp"

namespace icpa {

using LossVector = std::vector<double>;

/// a ≤ b elementwise with at least one strict coordinate.
bool dominates(const LossVector& a, const LossVector& b);

/// Indices (ascending) of points not dominated by any other point. Duplicates
/// of a front point are all kept.
std::vector<std::size_t> extract_front(const std::vector<LossVector>& points);

struct HufResult {
  double volume = 0.0;
  /// Zero for the exact sweep (m ≤ 2).
  double std_error = 0.0;
  bool exact = true;
  std::size_t samples = 0;
};

/// Volume of {v : nu0 ≤ v ≤ ceiling, v ≤ L for some L in front}. Exact for
/// m ≤ 2; Monte Carlo with `samples` draws otherwise. The ceiling defaults to
/// the componentwise max of the front. Throws if a point lies below nu0.
HufResult huf(const std::vector<LossVector>& front, const LossVector& nu0,
              std::optional<LossVector> ceiling = std::nullopt, std::uint64_t seed = 0,
              std::size_t samples = 200000);

struct VRec {
  double volume = 0.0;
  /// ((1/m) Σ (L_j - nu0_j))^m, never below volume.
  double am_gm_bound = 0.0;
};

VRec v_rec(const LossVector& losses, const LossVector& nu0);

/// ε_j = L_j - nu0_j (negative values mean positive transfer).
std::vector<double> tnt(const LossVector& losses, const LossVector& nu0);

/// m draws from Uniform(0,1) divided by their sum.
std::vector<double> sample_lambda(std::size_t m, Rng& rng);

struct PreferenceVector {
  std::vector<double> z;
  std::size_t target = 0;

  static PreferenceVector make(std::size_t m, std::size_t target, double eps_pref);
};

struct MinNormResult {
  std::vector<double> alpha;
  std::size_t iterations = 0;
  double gap = 0.0;
};

/// Frank-Wolfe on min_α αᵀ G α over the simplex, G a Gram matrix. Stops after
/// max_iter iterations or when the duality gap drops below
/// tol * max(1, max diag G).
MinNormResult min_norm_point(const Eigen::MatrixXd& gram, std::size_t max_iter = 100,
                             double tol = 1e-6);

struct PmtlResult {
  std::vector<double> weights;
  /// True when no common non-ascent direction was found and the weights fell
  /// back to one-hot on the target.
  bool restricted = false;
  /// Sources whose normalized loss exceeds their preference share.
  std::vector<std::size_t> active;
  std::size_t iterations = 0;
};

/// Preference-constrained descent weights. The constrained set is the target
/// plus every active source with z_j > 0. The min-norm point of the hull of
/// g_j / z_j over that set gives a direction with non-negative inner product
/// against each constrained gradient; its hull coefficients rescaled by 1/z_j
/// and normalized become the weights.
PmtlResult pmtl_weights(const LossVector& losses, const std::vector<Gradient>& grads,
                        const PreferenceVector& pref);

/// Fraction of front points that minimize some non-negative weighting of the
/// objectives (exact lower hull for m = 2, a simplex grid otherwise).
double convexity_fraction(const std::vector<LossVector>& front);

}  // namespace icpa
