#include "icpa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace icpa::oracle {

double exact_ot_1d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("exact_ot_1d: size mismatch");
  const std::size_t n = a.size();
  if (n > 12) throw std::invalid_argument("exact_ot_1d: at most 12 points");
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> best(states, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  for (std::size_t mask = 0; mask < states; ++mask) {
    if (best[mask] == std::numeric_limits<double>::infinity()) continue;
    const auto i = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (i == n) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (std::size_t{1} << k)) continue;
      const double d = a[i] - b[k];
      const std::size_t next = mask | (std::size_t{1} << k);
      best[next] = std::min(best[next], best[mask] + d * d);
    }
  }
  return best[states - 1];
}

namespace {

bool weakly_below(const Point& a, const Point& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

bool strictly_better(const Point& a, const Point& b) { return weakly_below(a, b) && a != b; }

}  // namespace

std::vector<std::size_t> enumerate_front(const std::vector<Point>& space) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < space.size(); ++i) {
    bool dominated = false;
    for (std::size_t k = 0; k < space.size() && !dominated; ++k)
      dominated = k != i && strictly_better(space[k], space[i]);
    if (!dominated) front.push_back(i);
  }
  return front;
}

Theorem2Check verify_theorem2(const std::vector<Point>& space) {
  Theorem2Check out;
  if (space.empty()) {
    out.ok = false;
    out.detail = "empty space";
    return out;
  }
  const std::size_t m = space[0].size();
  const auto front = enumerate_front(space);
  for (std::size_t j = 0; j < m; ++j) {
    double lowest = space[0][j];
    for (const auto& p : space) lowest = std::min(lowest, p[j]);
    auto it = std::find_if(front.begin(), front.end(),
                           [&](std::size_t f) { return space[f][j] == lowest; });
    if (it == front.end()) {
      out.ok = false;
      out.detail += "objective " + std::to_string(j) + " has no front witness; ";
      out.witness.push_back(space.size());
    } else {
      out.witness.push_back(*it);
    }
  }
  return out;
}

Theorem1Check verify_theorem1(const std::vector<Point>& space, std::size_t f1,
                              const std::vector<double>& delta, std::size_t j) {
  Theorem1Check out;
  if (f1 >= space.size()) throw std::invalid_argument("verify_theorem1: f1 out of range");
  const Point& base = space[f1];
  std::vector<std::size_t> feasible;
  for (std::size_t i = 0; i < space.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < base.size() && ok; ++k)
      if (k != j) ok = base[k] - space[i][k] >= delta[k];
    if (ok) feasible.push_back(i);
  }
  if (feasible.empty()) {
    out.detail = "no point satisfies the improvement constraints";
    return out;
  }
  out.feasible = true;
  out.minimum = space[feasible[0]][j];
  for (std::size_t i : feasible) out.minimum = std::min(out.minimum, space[i][j]);
  const auto front = enumerate_front(space);
  for (std::size_t i : feasible)
    if (space[i][j] == out.minimum && std::binary_search(front.begin(), front.end(), i)) {
      out.witness = i;
      break;
    }
  out.ok = out.witness.has_value();
  if (!out.ok) out.detail = "constrained minimizers miss the front";
  return out;
}

namespace {

// Recursively walks cell centers over the first m-1 axes; along the last
// axis the covered centers form a prefix and are counted in closed form.
double count_cells(const std::vector<Point>& front, const Point& lo, const std::vector<double>& h,
                   std::size_t resolution, std::size_t axis, const std::vector<std::size_t>& alive) {
  const std::size_t m = lo.size();
  if (axis + 1 == m) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t f : alive) top = std::max(top, front[f][axis]);
    std::size_t count = 0;
    for (std::size_t k = 0; k < resolution; ++k) {
      const double c = lo[axis] + (static_cast<double>(k) + 0.5) * h[axis];
      if (c <= top) ++count;
      else break;
    }
    return static_cast<double>(count);
  }
  double total = 0.0;
  std::vector<std::size_t> next;
  for (std::size_t k = 0; k < resolution; ++k) {
    const double c = lo[axis] + (static_cast<double>(k) + 0.5) * h[axis];
    next.clear();
    for (std::size_t f : alive)
      if (c <= front[f][axis]) next.push_back(f);
    if (next.empty()) break;
    total += count_cells(front, lo, h, resolution, axis + 1, next);
  }
  return total;
}

}  // namespace

double grid_hypervolume(const std::vector<Point>& front, const Point& nu0, const Point& ceiling,
                        std::size_t resolution) {
  if (resolution < 10) throw std::invalid_argument("grid_hypervolume: resolution must be >= 10");
  const std::size_t m = nu0.size();
  std::vector<double> h(m);
  double cell = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    h[j] = (ceiling[j] - nu0[j]) / static_cast<double>(resolution);
    if (!(h[j] > 0.0)) return 0.0;
    cell *= h[j];
  }
  std::vector<Point> clipped;
  for (const auto& p : front) {
    Point q(m);
    for (std::size_t j = 0; j < m; ++j) q[j] = std::min(p[j], ceiling[j]);
    clipped.push_back(std::move(q));
  }
  std::vector<std::size_t> alive(clipped.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  if (alive.empty()) return 0.0;
  return cell * count_cells(clipped, nu0, h, resolution, 0, alive);
}

std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                          double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

double norm_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                           double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("norm_relative_error: size mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace icpa::oracle
