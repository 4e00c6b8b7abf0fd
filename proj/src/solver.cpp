#include "stkm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace stkm {

namespace {

constexpr double kDegenerateDenominator = 1e-12;

double squared_norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

void check_shapes(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w) {
  if (c.steps() != x.steps() || c.dims() != x.dims()) {
    throw Error(ErrorCode::ShapeMismatch, "center tensor does not match trajectory T x m");
  }
  if (w.steps() != x.steps() || w.points() != x.points() || w.clusters() != c.clusters()) {
    throw Error(ErrorCode::ShapeMismatch, "weight tensor does not match T x k x N");
  }
}

double weighted_distance_sum(const TrajectoryTensor& x, const CenterTensor& c,
                             const WeightTensor& w, DistanceKind kind, double c_const) {
  double total = 0.0;
  for (std::size_t t = 0; t < x.steps(); ++t) {
    for (std::size_t i = 0; i < x.points(); ++i) {
      auto col = w.column(t, i);
      for (std::size_t j = 0; j < c.clusters(); ++j) {
        if (col[j] == 0.0) continue;
        total += col[j] * point_distance(x.point(t, i), c.center(t, j), kind, c_const);
      }
    }
  }
  return total;
}

double temporal_penalty(const CenterTensor& c, std::size_t points, double lambda) {
  if (lambda == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < c.steps(); ++t) {
    for (std::size_t j = 0; j < c.clusters(); ++j) {
      total += squared_norm_diff(c.center(t, j), c.center(t + 1, j));
    }
  }
  return static_cast<double>(points) * lambda * total;
}

// Re-seed an empty cluster at the point whose best (other) center is farthest.
void reseed(const TrajectoryTensor& x, CenterTensor& c, std::size_t t, std::size_t j,
            std::vector<std::size_t>& taken, DistanceKind kind, double c_const) {
  std::size_t best_point = 0;
  double best_gap = -1.0;
  for (std::size_t i = 0; i < x.points(); ++i) {
    if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t other = 0; other < c.clusters(); ++other) {
      if (other == j) continue;
      nearest = std::min(nearest, point_distance(x.point(t, i), c.center(t, other), kind, c_const));
    }
    if (nearest > best_gap) {
      best_gap = nearest;
      best_point = i;
    }
  }
  taken.push_back(best_point);
  auto src = x.point(t, best_point);
  std::copy(src.begin(), src.end(), c.center(t, j).begin());
}

struct ClusterMoments {
  double weight = 0.0;
  std::vector<double> weighted_sum;
};

ClusterMoments moments(const TrajectoryTensor& x, const WeightTensor& w, std::size_t t,
                       std::size_t j) {
  ClusterMoments m;
  m.weighted_sum.assign(x.dims(), 0.0);
  for (std::size_t i = 0; i < x.points(); ++i) {
    const double wi = w(t, j, i);
    if (wi == 0.0) continue;
    m.weight += wi;
    auto p = x.point(t, i);
    for (std::size_t d = 0; d < x.dims(); ++d) m.weighted_sum[d] += wi * p[d];
  }
  return m;
}

// sum_i w ||x - c||^2 up to a c-independent constant, plus quadratic pulls.
double local_quadratic(std::span<const double> c, const ClusterMoments& m, double pull,
                       std::span<const double> next, std::span<const double> prev) {
  double v = 0.0;
  for (std::size_t d = 0; d < c.size(); ++d) v += m.weight * c[d] * c[d] - 2.0 * c[d] * m.weighted_sum[d];
  if (!next.empty()) v += pull * squared_norm_diff(c, next);
  if (!prev.empty()) v += pull * squared_norm_diff(c, prev);
  return v;
}

}  // namespace

double point_distance(std::span<const double> x, std::span<const double> c, DistanceKind kind,
                      double c_const) {
  const double sq = squared_norm_diff(x, c);
  return kind == DistanceKind::SquaredEuclidean ? sq : std::log(c_const + sq);
}

double objective(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w,
                 double lambda) {
  check_shapes(x, c, w);
  return weighted_distance_sum(x, c, w, DistanceKind::SquaredEuclidean, 1.0) +
         temporal_penalty(c, x.points(), lambda);
}

double robust_objective(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w,
                        double lambda, double c_const) {
  check_shapes(x, c, w);
  return weighted_distance_sum(x, c, w, DistanceKind::RobustLog, c_const) +
         temporal_penalty(c, x.points(), lambda);
}

std::vector<double> project_simplex(std::span<const double> v) {
  const std::size_t k = v.size();
  if (k == 0) return {};
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    cumulative += sorted[r];
    const double candidate = (cumulative - 1.0) / static_cast<double>(r + 1);
    if (sorted[r] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> p(k);
  for (std::size_t j = 0; j < k; ++j) p[j] = std::clamp(v[j] - tau, 0.0, 1.0);
  return p;
}

std::vector<double> gauss_seidel_center(const TrajectoryTensor& x, const WeightTensor& w,
                                        std::size_t t, std::size_t j, double lambda,
                                        std::span<const double> next_center) {
  const ClusterMoments m = moments(x, w, t, j);
  const double pull = next_center.empty() ? 0.0 : static_cast<double>(x.points()) * lambda;
  const double denom = m.weight + pull;
  if (denom < kDegenerateDenominator) {
    throw Error(ErrorCode::DegenerateCluster, "cluster " + std::to_string(j) +
                                                  " has no weight and no temporal pull at t=" +
                                                  std::to_string(t));
  }
  std::vector<double> out(x.dims());
  for (std::size_t d = 0; d < x.dims(); ++d) {
    const double next = next_center.empty() ? 0.0 : next_center[d];
    out[d] = (m.weighted_sum[d] + pull * next) / denom;
  }
  return out;
}

CenterTensor update_centers(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w,
                            double lambda) {
  check_shapes(x, c, w);
  CenterTensor out = c;
  const std::size_t steps = x.steps();
  const std::size_t dims = x.dims();
  const double pull = static_cast<double>(x.points()) * lambda;
  for (std::size_t step = steps; step-- > 0;) {
    std::vector<std::size_t> taken;
    for (std::size_t j = 0; j < c.clusters(); ++j) {
      const ClusterMoments m = moments(x, w, step, j);
      const bool has_next = step + 1 < steps;
      const double forward_pull = has_next ? pull : 0.0;
      const double denom = m.weight + forward_pull;
      if (m.weight + pull < kDegenerateDenominator) {
        reseed(x, out, step, j, taken, DistanceKind::SquaredEuclidean, 1.0);
        continue;
      }
      if (denom < kDegenerateDenominator) {
        // Empty last step: only the backward penalty remains.
        auto prev = out.center(step - 1, j);
        std::copy(prev.begin(), prev.end(), out.center(step, j).begin());
        continue;
      }
      std::span<const double> next = has_next ? std::span<const double>(out.center(step + 1, j))
                                              : std::span<const double>();
      std::vector<double> candidate(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        candidate[d] = (m.weighted_sum[d] + (has_next ? forward_pull * next[d] : 0.0)) / denom;
      }
      auto current = out.center(step, j);
      if (pull > 0.0 && step > 0) {
        std::span<const double> prev = out.center(step - 1, j);
        const double before = local_quadratic(current, m, pull, next, prev);
        const double after = local_quadratic(candidate, m, pull, next, prev);
        if (after > before) {
          const double full = m.weight + pull + forward_pull;
          for (std::size_t d = 0; d < dims; ++d) {
            candidate[d] = (m.weighted_sum[d] + pull * prev[d] +
                            (has_next ? forward_pull * next[d] : 0.0)) /
                           full;
          }
        }
      }
      std::copy(candidate.begin(), candidate.end(), current.begin());
    }
  }
  return out;
}

CenterTensor update_centers_robust(const TrajectoryTensor& x, const CenterTensor& c,
                                   const WeightTensor& w, double lambda, double c_const) {
  check_shapes(x, c, w);
  CenterTensor out = c;
  const std::size_t steps = x.steps();
  const std::size_t dims = x.dims();
  const double pull = static_cast<double>(x.points()) * lambda;
  std::vector<double> grad(dims);
  for (std::size_t step = steps; step-- > 0;) {
    std::vector<std::size_t> taken;
    for (std::size_t j = 0; j < c.clusters(); ++j) {
      auto current = out.center(step, j);
      std::fill(grad.begin(), grad.end(), 0.0);
      double total_weight = 0.0;
      for (std::size_t i = 0; i < x.points(); ++i) {
        const double wi = w(step, j, i);
        if (wi == 0.0) continue;
        total_weight += wi;
        auto p = x.point(step, i);
        const double scale = 2.0 * wi / (c_const + squared_norm_diff(p, current));
        for (std::size_t d = 0; d < dims; ++d) grad[d] += scale * (current[d] - p[d]);
      }
      std::size_t neighbors = 0;
      for (std::size_t other : {step + 1, step - 1}) {
        if (pull == 0.0 || other >= steps) continue;  // step - 1 wraps at step 0
        ++neighbors;
        auto nb = out.center(other, j);
        for (std::size_t d = 0; d < dims; ++d) grad[d] += 2.0 * pull * (current[d] - nb[d]);
      }
      const double lipschitz = 2.0 * total_weight / c_const + 2.0 * pull * static_cast<double>(neighbors);
      if (lipschitz < kDegenerateDenominator) {
        reseed(x, out, step, j, taken, DistanceKind::RobustLog, c_const);
        continue;
      }
      for (std::size_t d = 0; d < dims; ++d) current[d] -= grad[d] / lipschitz;
    }
  }
  return out;
}

WeightTensor update_weights(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w,
                            double d_k, DistanceKind kind, double c_const) {
  check_shapes(x, c, w);
  if (!(d_k > 1.0)) throw Error(ErrorCode::InvalidConfig, "d_k must be > 1.0");
  const std::size_t k = c.clusters();
  std::vector<double> data(w.data().size());
  std::vector<double> shifted(k);
  for (std::size_t t = 0; t < x.steps(); ++t) {
    for (std::size_t i = 0; i < x.points(); ++i) {
      auto col = w.column(t, i);
      for (std::size_t j = 0; j < k; ++j) {
        shifted[j] = col[j] - point_distance(x.point(t, i), c.center(t, j), kind, c_const) / d_k;
      }
      const auto projected = project_simplex(shifted);
      std::copy(projected.begin(), projected.end(), data.begin() + (t * x.points() + i) * k);
    }
  }
  return WeightTensor(w.steps(), k, w.points(), std::move(data));
}

Initialization init(const TrajectoryTensor& x, std::size_t k, std::uint64_t seed, DistanceKind kind,
                    double c_const) {
  const std::size_t n = x.points();
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (k > n) {
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " exceeds the number of objects " + std::to_string(n));
  }
  std::mt19937_64 rng = seeded_rng(seed, "init");
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Seeding potential is zero at a chosen seed under either distance.
  const double floor = kind == DistanceKind::SquaredEuclidean ? 0.0 : std::log(c_const);
  auto potential = [&](std::size_t a, std::size_t b) {
    return std::max(0.0, point_distance(x.point(0, a), x.point(0, b), kind, c_const) - floor);
  };

  const std::size_t trials = 4 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

  // First seed: best of `trials` uniform candidates by total potential.
  std::vector<std::size_t> seeds;
  std::vector<bool> chosen(n, false);
  std::vector<double> closest(n);
  {
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t first = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const std::size_t candidate = any(rng);
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) cost += potential(i, candidate);
      if (cost < best_cost) {
        best_cost = cost;
        first = candidate;
      }
    }
    seeds.push_back(first);
    chosen[first] = true;
    for (std::size_t i = 0; i < n; ++i) closest[i] = potential(i, first);
  }

  while (seeds.size() < k) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    std::size_t pick = n;
    if (total <= 0.0) {
      // Every remaining point coincides with a seed.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    } else {
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t trial = 0; trial < trials; ++trial) {
        const double target = unit(rng) * total;
        double cumulative = 0.0;
        std::size_t candidate = n;
        for (std::size_t i = 0; i < n; ++i) {
          cumulative += closest[i];
          if (closest[i] > 0.0 && cumulative > target) {
            candidate = i;
            break;
          }
        }
        if (candidate == n) {
          // Rounding pushed target past the last positive entry.
          for (std::size_t i = n; i-- > 0;) {
            if (closest[i] > 0.0) {
              candidate = i;
              break;
            }
          }
        }
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) cost += std::min(closest[i], potential(i, candidate));
        if (cost < best_cost) {
          best_cost = cost;
          pick = candidate;
        }
      }
    }
    seeds.push_back(pick);
    chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) closest[i] = std::min(closest[i], potential(i, pick));
  }

  CenterTensor centers(x.steps(), x.dims(), k);
  for (std::size_t t = 0; t < x.steps(); ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      auto src = x.point(0, seeds[j]);
      std::copy(src.begin(), src.end(), centers.center(t, j).begin());
    }
  }
  return {std::move(centers), WeightTensor::uniform(x.steps(), k, n)};
}

namespace {

bool relative_change_below(double previous, double current, double tol) {
  const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
  return std::abs(previous - current) / scale < tol;
}

}  // namespace

FitResult fit(const TrajectoryTensor& x, const SolverConfig& config) {
  if (config.distance == DistanceKind::RobustLog) return fit_robust(x, config);
  config.validate();
  Initialization start = init(x, config.k, config.seed);
  FitResult result{std::move(start.centers), std::move(start.weights), {}, 0, false};
  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    result.weights = update_weights(x, result.centers, result.weights, config.d_k);
    result.centers = update_centers(x, result.centers, result.weights, config.lambda);
    result.objective_trace.push_back(objective(x, result.centers, result.weights, config.lambda));
    result.iterations = iter + 1;
    const auto& trace = result.objective_trace;
    if (trace.size() >= 2 && relative_change_below(trace[trace.size() - 2], trace.back(), config.tol)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FitResult fit_robust(const TrajectoryTensor& x, const SolverConfig& config) {
  config.validate();
  if (config.distance != DistanceKind::RobustLog) {
    throw Error(ErrorCode::InvalidConfig, "fit_robust requires the robust_log distance");
  }
  const double cc = config.c_const;
  Initialization start = init(x, config.k, config.seed, DistanceKind::RobustLog, cc);
  FitResult result{std::move(start.centers), std::move(start.weights), {}, 0, false};
  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    result.weights =
        update_weights(x, result.centers, result.weights, config.d_k, DistanceKind::RobustLog, cc);
    result.centers = update_centers_robust(x, result.centers, result.weights, config.lambda, cc);
    result.objective_trace.push_back(
        robust_objective(x, result.centers, result.weights, config.lambda, cc));
    result.iterations = iter + 1;
    const auto& trace = result.objective_trace;
    if (trace.size() >= 2 && relative_change_below(trace[trace.size() - 2], trace.back(), config.tol)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace stkm
