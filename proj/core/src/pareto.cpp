#include "icpa/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "icpa/error.hpp"

namespace icpa {

bool dominates(const LossVector& a, const LossVector& b) {
  if (a.size() != b.size()) throw ValidationError("dominates: length mismatch");
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

std::vector<std::size_t> extract_front(const std::vector<LossVector>& points) {
  if (points.empty()) throw ValidationError("extract_front: empty point set");
  const std::size_t m = points[0].size();
  for (const auto& p : points)
    if (p.size() != m) throw ValidationError("extract_front: ragged point set");
  // In lexicographic order no point can be dominated by a later one, so each
  // point only needs checking against the front accumulated so far.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<std::size_t> front;
  for (std::size_t i : order) {
    bool dominated = false;
    for (std::size_t f : front)
      if (dominates(points[f], points[i])) {
        dominated = true;
        break;
      }
    if (!dominated) front.push_back(i);
  }
  std::sort(front.begin(), front.end());
  return front;
}

HufResult huf(const std::vector<LossVector>& front, const LossVector& nu0,
              std::optional<LossVector> ceiling, std::uint64_t seed, std::size_t samples) {
  const std::size_t m = nu0.size();
  if (m == 0) throw ValidationError("huf: empty baseline");
  for (const auto& p : front) {
    if (p.size() != m) throw ValidationError("huf: dimension mismatch");
    for (std::size_t j = 0; j < m; ++j)
      if (p[j] < nu0[j]) throw ValidationError("huf: front point below baseline optimum");
  }
  HufResult out;
  if (front.empty()) return out;
  LossVector cap = ceiling.value_or(LossVector{});
  if (!ceiling) {
    cap = front[0];
    for (const auto& p : front)
      for (std::size_t j = 0; j < m; ++j) cap[j] = std::max(cap[j], p[j]);
  }
  if (cap.size() != m) throw ValidationError("huf: ceiling dimension mismatch");

  // Boxes [0, upper] relative to nu0.
  std::vector<LossVector> upper;
  for (const auto& p : front) {
    LossVector u(m);
    bool empty = false;
    for (std::size_t j = 0; j < m; ++j) {
      u[j] = std::min(p[j], cap[j]) - nu0[j];
      if (u[j] <= 0.0) empty = true;
    }
    if (!empty) upper.push_back(std::move(u));
  }
  if (upper.empty()) return out;

  if (m == 1) {
    for (const auto& u : upper) out.volume = std::max(out.volume, u[0]);
    return out;
  }
  if (m == 2) {
    std::sort(upper.begin(), upper.end(), std::greater<>());
    double best_y = 0.0;
    for (std::size_t i = 0; i < upper.size(); ++i) {
      best_y = std::max(best_y, upper[i][1]);
      const double next_x = i + 1 < upper.size() ? upper[i + 1][0] : 0.0;
      out.volume += (upper[i][0] - next_x) * best_y;
    }
    return out;
  }

  LossVector box(m, 0.0);
  for (const auto& u : upper)
    for (std::size_t j = 0; j < m; ++j) box[j] = std::max(box[j], u[j]);
  double box_volume = 1.0;
  for (double b : box) box_volume *= b;
  if (samples == 0) throw ValidationError("huf: samples must be positive");
  Rng rng(seed);
  std::size_t hits = 0;
  LossVector v(m);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t j = 0; j < m; ++j) v[j] = rng.uniform() * box[j];
    for (const auto& u : upper) {
      bool inside = true;
      for (std::size_t j = 0; j < m && inside; ++j) inside = v[j] <= u[j];
      if (inside) {
        ++hits;
        break;
      }
    }
  }
  const double n = static_cast<double>(samples);
  const double frac = static_cast<double>(hits) / n;
  out.exact = false;
  out.samples = samples;
  out.volume = box_volume * frac;
  out.std_error = box_volume * std::sqrt(frac * (1.0 - frac) / n);
  return out;
}

VRec v_rec(const LossVector& losses, const LossVector& nu0) {
  if (losses.size() != nu0.size() || losses.empty()) throw ValidationError("v_rec: dimension mismatch");
  VRec out{1.0, 0.0};
  double sum = 0.0;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    const double gap = losses[j] - nu0[j];
    if (gap < 0.0) throw ValidationError("v_rec: loss below baseline optimum");
    out.volume *= gap;
    sum += gap;
  }
  const double m = static_cast<double>(losses.size());
  out.am_gm_bound = std::pow(sum / m, m);
  return out;
}

std::vector<double> tnt(const LossVector& losses, const LossVector& nu0) {
  if (losses.size() != nu0.size()) throw ValidationError("tnt: dimension mismatch");
  std::vector<double> eps(losses.size());
  for (std::size_t j = 0; j < losses.size(); ++j) eps[j] = losses[j] - nu0[j];
  return eps;
}

std::vector<double> sample_lambda(std::size_t m, Rng& rng) {
  if (m == 0) throw ValidationError("sample_lambda: m must be >= 1");
  std::vector<double> lambda(m);
  double sum = 0.0;
  for (double& l : lambda) sum += l = rng.uniform_open();
  for (double& l : lambda) l /= sum;
  return lambda;
}

PreferenceVector PreferenceVector::make(std::size_t m, std::size_t target, double eps_pref) {
  if (target >= m) throw ValidationError("preference target out of range");
  if (!(eps_pref >= 0.0)) throw ValidationError("eps_pref must be >= 0");
  PreferenceVector p;
  p.z.assign(m, eps_pref);
  p.z[target] = 1.0;
  p.target = target;
  return p;
}

MinNormResult min_norm_point(const Eigen::MatrixXd& gram, std::size_t max_iter, double tol) {
  const Eigen::Index n = gram.rows();
  if (n == 0 || gram.cols() != n) throw ValidationError("min_norm_point: bad Gram matrix");
  MinNormResult out;
  Eigen::Index start = 0;
  gram.diagonal().minCoeff(&start);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  alpha[start] = 1.0;
  const double threshold = tol * std::max(1.0, gram.diagonal().maxCoeff());
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    const Eigen::VectorXd g_alpha = gram * alpha;
    const double quad = alpha.dot(g_alpha);
    Eigen::Index t = 0;
    const double best = g_alpha.minCoeff(&t);
    out.gap = 2.0 * (quad - best);
    if (out.gap < threshold) break;
    const double denom = quad - 2.0 * best + gram(t, t);
    const double gamma = denom > 0.0 ? std::clamp((quad - best) / denom, 0.0, 1.0) : 1.0;
    alpha *= 1.0 - gamma;
    alpha[t] += gamma;
  }
  out.alpha.assign(alpha.data(), alpha.data() + n);
  return out;
}

PmtlResult pmtl_weights(const LossVector& losses, const std::vector<Gradient>& grads,
                        const PreferenceVector& pref) {
  const std::size_t m = losses.size();
  if (grads.size() != m || pref.z.size() != m) throw ValidationError("pmtl: dimension mismatch");
  if (pref.target >= m) throw ValidationError("pmtl: target out of range");
  for (std::size_t j = 1; j < m; ++j)
    if (grads[j].size() != grads[0].size()) throw ValidationError("pmtl: gradient size mismatch");

  PmtlResult out;
  out.weights.assign(m, 0.0);
  const std::size_t target = pref.target;
  const double loss_sum = std::accumulate(losses.begin(), losses.end(), 0.0);
  const double z_sum = std::accumulate(pref.z.begin(), pref.z.end(), 0.0);
  for (std::size_t j = 0; j < m; ++j)
    if (j != target && loss_sum > 0.0 && losses[j] / loss_sum > pref.z[j] / z_sum)
      out.active.push_back(j);

  std::vector<std::size_t> rel{target};
  for (std::size_t j : out.active)
    if (pref.z[j] > 0.0) rel.push_back(j);

  auto fallback = [&] {
    std::fill(out.weights.begin(), out.weights.end(), 0.0);
    out.weights[target] = 1.0;
    out.restricted = true;
    return out;
  };

  const auto r = static_cast<Eigen::Index>(rel.size());
  Eigen::MatrixXd gram(r, r);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = a; b < r; ++b) {
      const double v = dot(grads[rel[a]], grads[rel[b]]) / (pref.z[rel[a]] * pref.z[rel[b]]);
      gram(a, b) = gram(b, a) = v;
    }
  const MinNormResult mn = min_norm_point(gram);
  out.iterations = mn.iterations;

  double wsum = 0.0;
  for (Eigen::Index a = 0; a < r; ++a) {
    out.weights[rel[a]] = mn.alpha[a] / pref.z[rel[a]];
    wsum += out.weights[rel[a]];
  }
  if (!(wsum > 0.0)) return fallback();
  for (double& w : out.weights) w /= wsum;

  // Check the contract on the combined direction.
  const std::size_t dim = grads[target].size();
  Gradient d(dim, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    if (out.weights[j] > 0.0) axpy(out.weights[j], grads[j], d);
  const double d_norm2 = dot(d, d);
  const double scale = std::max(1.0, gram.diagonal().maxCoeff());
  if (!(d_norm2 > 1e-24 * scale)) {
    // Every constrained gradient vanishes or they cancel exactly: the target's
    // own gradient is still a valid (possibly zero) step.
    if (dot(grads[target], grads[target]) == 0.0 && rel.size() == 1) {
      std::fill(out.weights.begin(), out.weights.end(), 0.0);
      out.weights[target] = 1.0;
      return out;
    }
    return fallback();
  }
  for (std::size_t j : rel)
    if (dot(d, grads[j]) < -1e-8) return fallback();
  return out;
}

namespace {

double cross(const LossVector& o, const LossVector& a, const LossVector& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

void simplex_grid(std::size_t m, std::size_t steps, std::vector<double>& cur, std::size_t left,
                  const std::function<void(const std::vector<double>&)>& fn) {
  if (cur.size() + 1 == m) {
    cur.push_back(static_cast<double>(left) / static_cast<double>(steps));
    fn(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= left; ++k) {
    cur.push_back(static_cast<double>(k) / static_cast<double>(steps));
    simplex_grid(m, steps, cur, left - k, fn);
    cur.pop_back();
  }
}

}  // namespace

double convexity_fraction(const std::vector<LossVector>& front) {
  if (front.empty()) return 0.0;
  const std::size_t m = front[0].size();
  if (front.size() == 1 || m == 1) return 1.0;
  std::vector<bool> supported(front.size(), false);
  if (m == 2) {
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), 0U);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return front[a] < front[b]; });
    std::vector<std::size_t> hull;
    for (std::size_t i : order) {
      while (hull.size() >= 2 &&
             cross(front[hull[hull.size() - 2]], front[hull.back()], front[i]) < 0.0)
        hull.pop_back();
      hull.push_back(i);
    }
    for (std::size_t i : hull) supported[i] = true;
    // Points equal to a hull vertex are supported too.
    for (std::size_t i = 0; i < front.size(); ++i)
      for (std::size_t h : hull)
        if (front[i] == front[h]) supported[i] = true;
  } else {
    std::vector<double> cur;
    simplex_grid(m, 20, cur, 20, [&](const std::vector<double>& lambda) {
      double best = 0.0;
      std::vector<double> score(front.size());
      for (std::size_t i = 0; i < front.size(); ++i) {
        score[i] = 0.0;
        for (std::size_t j = 0; j < m; ++j) score[i] += lambda[j] * front[i][j];
        if (i == 0 || score[i] < best) best = score[i];
      }
      for (std::size_t i = 0; i < front.size(); ++i)
        if (score[i] <= best + 1e-12 * std::max(1.0, std::abs(best))) supported[i] = true;
    });
  }
  const auto count = std::count(supported.begin(), supported.end(), true);
  return static_cast<double>(count) / static_cast<double>(front.size());
}

}  // namespace icpa
