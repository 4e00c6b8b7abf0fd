#pragma once

// Reference implementations used only by tests. None of them call into the
// library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace oracle {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Exact projection by enumerating supports: on a support S the KKT point is
// v_S - tau with tau = (sum v_S - 1) / |S|; keep the feasible one closest to v.
inline std::vector<double> simplex_active_set(std::span<const double> v) {
  const std::size_t k = v.size();
  std::vector<double> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    double sum = 0.0;
    std::size_t size = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (1u << j)) {
        sum += v[j];
        ++size;
      }
    }
    const double tau = (sum - 1.0) / static_cast<double>(size);
    std::vector<double> p(k, 0.0);
    bool feasible = true;
    for (std::size_t j = 0; j < k; ++j) {
      if (!(mask & (1u << j))) continue;
      p[j] = v[j] - tau;
      if (p[j] < 0.0) feasible = false;
    }
    if (!feasible) continue;
    double cost = 0.0;
    for (std::size_t j = 0; j < k; ++j) cost += (p[j] - v[j]) * (p[j] - v[j]);
    if (cost < best_cost) {
      best_cost = cost;
      best = p;
    }
  }
  return best;
}

// Grid minimizer of ||p - v||^2 over the simplex at resolution 1/steps (k = 2, 3).
// For k = 3 the inner coordinate is found by ternary search over grid indices,
// which is exact on the grid because the cost is convex along that line.
inline std::vector<double> simplex_grid(std::span<const double> v, int steps = 10000) {
  const double h = 1.0 / steps;
  if (v.size() == 2) {
    std::vector<double> best{0.0, 1.0};
    double best_cost = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= steps; ++a) {
      const double p0 = a * h, p1 = 1.0 - p0;
      const double cost = (p0 - v[0]) * (p0 - v[0]) + (p1 - v[1]) * (p1 - v[1]);
      if (cost < best_cost) {
        best_cost = cost;
        best = {p0, p1};
      }
    }
    return best;
  }
  std::vector<double> best{0.0, 0.0, 1.0};
  double best_cost = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= steps; ++a) {
    const double p0 = a * h;
    auto cost_at = [&](int b) {
      const double p1 = b * h, p2 = 1.0 - p0 - p1;
      return (p0 - v[0]) * (p0 - v[0]) + (p1 - v[1]) * (p1 - v[1]) + (p2 - v[2]) * (p2 - v[2]);
    };
    int lo = 0, hi = steps - a;
    while (hi - lo > 2) {
      const int m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (cost_at(m1) <= cost_at(m2)) hi = m2;
      else lo = m1;
    }
    for (int b = lo; b <= hi; ++b) {
      const double c = cost_at(b);
      if (c < best_cost) {
        best_cost = c;
        best = {p0, b * h, 1.0 - p0 - b * h};
      }
    }
  }
  return best;
}

// Binomial coefficient as a double; exact for the small n used in tests.
inline double choose(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  r = std::min(r, n - r);
  double out = 1.0;
  for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return std::round(out);
}

struct Table {
  std::vector<std::vector<int>> n;  // counts
  std::vector<int> a, b;            // row and column sums
  int total = 0;
};

inline Table contingency(std::span<const int> x, std::span<const int> y) {
  std::map<int, int> rx, ry;
  for (int v : x) rx.emplace(v, 0);
  for (int v : y) ry.emplace(v, 0);
  int r = 0;
  for (auto& kv : rx) kv.second = r++;
  int c = 0;
  for (auto& kv : ry) kv.second = c++;
  Table t;
  t.n.assign(rx.size(), std::vector<int>(ry.size(), 0));
  t.a.assign(rx.size(), 0);
  t.b.assign(ry.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++t.n[rx[x[i]]][ry[y[i]]];
    ++t.a[rx[x[i]]];
    ++t.b[ry[y[i]]];
  }
  t.total = static_cast<int>(x.size());
  return t;
}

inline double entropy(const std::vector<int>& marginal, int total) {
  double h = 0.0;
  for (int m : marginal) {
    if (m == 0) continue;
    const double p = static_cast<double>(m) / total;
    h -= p * std::log(p);
  }
  return h;
}

inline double mutual_information(const Table& t) {
  double mi = 0.0;
  const double n = t.total;
  for (std::size_t i = 0; i < t.a.size(); ++i) {
    for (std::size_t j = 0; j < t.b.size(); ++j) {
      const int nij = t.n[i][j];
      if (nij == 0) continue;
      mi += nij / n * std::log(n * nij / (static_cast<double>(t.a[i]) * t.b[j]));
    }
  }
  return mi;
}

// E[MI] under the hypergeometric model, summed term by term with exact
// binomial probabilities.
inline double expected_mi(const Table& t) {
  const int n = t.total;
  double e = 0.0;
  for (int ai : t.a) {
    for (int bj : t.b) {
      const int lo = std::max(1, ai + bj - n), hi = std::min(ai, bj);
      for (int nij = lo; nij <= hi; ++nij) {
        const double p = choose(ai, nij) * choose(n - ai, bj - nij) / choose(n, bj);
        e += p * (static_cast<double>(nij) / n) * std::log(static_cast<double>(n) * nij / (static_cast<double>(ai) * bj));
      }
    }
  }
  return e;
}

// Arithmetic-mean AMI; 0 when either side is constant, 1 for a pure renaming.
inline double ami(std::span<const int> x, std::span<const int> y) {
  const Table t = contingency(x, y);
  if (t.a.size() == 1 || t.b.size() == 1) return 0.0;
  if (t.a.size() == t.b.size()) {
    bool renaming = true;
    for (const auto& row : t.n) renaming &= std::count(row.begin(), row.end(), 0) + 1 == static_cast<long>(row.size());
    if (renaming) return 1.0;
  }
  const double mi = mutual_information(t);
  const double emi = expected_mi(t);
  const double mean_h = 0.5 * (entropy(t.a, t.total) + entropy(t.b, t.total));
  return (mi - emi) / (mean_h - emi);
}

// Single-frame soft k-means with the proximal weight step, for the lambda = 0
// decomposition. points: N x m row-major; centers: k x m; weights: N x k.
struct Frame {
  std::size_t n = 0, m = 0, k = 0;
  std::vector<double> points, centers, weights;

  std::span<const double> point(std::size_t i) const { return {points.data() + i * m, m}; }
  std::span<const double> center(std::size_t j) const { return {centers.data() + j * m, m}; }
};

inline void frame_weight_step(Frame& f, double d_k) {
  for (std::size_t i = 0; i < f.n; ++i) {
    std::vector<double> v(f.k);
    for (std::size_t j = 0; j < f.k; ++j) v[j] = f.weights[i * f.k + j] - sq_dist(f.point(i), f.center(j)) / d_k;
    const auto p = simplex_active_set(v);
    std::copy(p.begin(), p.end(), f.weights.begin() + i * f.k);
  }
}

// Weighted means; a cluster with no weight moves to the unused point whose
// nearest other center is farthest (first such point on ties).
inline void frame_center_step(Frame& f) {
  std::vector<std::size_t> used;
  for (std::size_t j = 0; j < f.k; ++j) {
    double total = 0.0;
    std::vector<double> sum(f.m, 0.0);
    for (std::size_t i = 0; i < f.n; ++i) {
      const double w = f.weights[i * f.k + j];
      total += w;
      for (std::size_t d = 0; d < f.m; ++d) sum[d] += w * f.points[i * f.m + d];
    }
    if (total < 1e-12) {
      std::size_t pick = 0;
      double gap = -1.0;
      for (std::size_t i = 0; i < f.n; ++i) {
        if (std::find(used.begin(), used.end(), i) != used.end()) continue;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < f.k; ++o) {
          if (o != j) nearest = std::min(nearest, sq_dist(f.point(i), f.center(o)));
        }
        if (nearest > gap) {
          gap = nearest;
          pick = i;
        }
      }
      used.push_back(pick);
      for (std::size_t d = 0; d < f.m; ++d) f.centers[j * f.m + d] = f.points[pick * f.m + d];
      continue;
    }
    for (std::size_t d = 0; d < f.m; ++d) f.centers[j * f.m + d] = sum[d] / total;
  }
}

inline double frame_objective(const Frame& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < f.k; ++j) total += f.weights[i * f.k + j] * sq_dist(f.point(i), f.center(j));
  }
  return total;
}

}  // namespace oracle
