#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stkm/core.hpp"

namespace stkm {

struct FitResult {
  CenterTensor centers;
  WeightTensor weights;
  // Objective after each full sweep (weights then centers).
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

struct Initialization {
  CenterTensor centers;
  WeightTensor weights;
};

/// Point-to-center dissimilarity: ||x - c||^2, or log(c_const + ||x - c||^2).
double point_distance(std::span<const double> x, std::span<const double> c,
                      DistanceKind kind = DistanceKind::SquaredEuclidean, double c_const = 1.0);

/// Spatiotemporal k-means objective
///   sum_i sum_j sum_t w_{t,j,i} dist(x_{t,i}, c_{t,j}) + lambda ||c_{t,j} - c_{t+1,j}||^2
/// with the penalty inside the sum over points (counted N times) and dropped
/// at the last step.
double objective(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w,
                 double lambda);
double robust_objective(const TrajectoryTensor& x, const CenterTensor& c, const WeightTensor& w,
                        double lambda, double c_const);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::span<const double> v);

/// Closed-form Gauss-Seidel center for cluster j at step t given its
/// successor (empty span at the last step):
///   (sum_i w x + N lambda c_next) / (sum_i w + N lambda).
/// Throws DegenerateCluster when the denominator vanishes.
std::vector<double> gauss_seidel_center(const TrajectoryTensor& x, const WeightTensor& w,
                                        std::size_t t, std::size_t j, double lambda,
                                        std::span<const double> next_center);

/// One backward sweep (t = T-1 .. 0) of the Gauss-Seidel center update.
///
/// The closed-form candidate only sees the forward neighbor. When it would
/// raise the local objective once the backward coupling to c_{t-1,j} is
/// counted, the exact block minimizer over both neighbors is used instead.
/// Clusters with no weight and no penalty are re-seeded at the point farthest
/// from its best center; an empty last step with lambda > 0 copies its
/// predecessor.
CenterTensor update_centers(const TrajectoryTensor& x, const CenterTensor& c,
                            const WeightTensor& w, double lambda);

/// One backward sweep of damped gradient steps on the robust objective, step
/// 1/L with L = 2 sum_i w / c_const + 2 N lambda per temporal neighbor.
CenterTensor update_centers_robust(const TrajectoryTensor& x, const CenterTensor& c,
                                   const WeightTensor& w, double lambda, double c_const);

/// Proximal weight step: W_{t,:,i} <- proj(W_{t,:,i} - dist(x_{t,i}, c_{t,:}) / d_k).
WeightTensor update_weights(const TrajectoryTensor& x, const CenterTensor& c,
                            const WeightTensor& w, double d_k,
                            DistanceKind kind = DistanceKind::SquaredEuclidean,
                            double c_const = 1.0);

/// Greedy k-means++ seeding on the first frame under the given distance,
/// replicated across all steps, with uniform weights 1/k. Every seed,
/// including the first, is the best of 4 + floor(ln k) sampled candidates by
/// total potential; the first candidates are drawn uniformly.
Initialization init(const TrajectoryTensor& x, std::size_t k, std::uint64_t seed,
                    DistanceKind kind = DistanceKind::SquaredEuclidean, double c_const = 1.0);

/// Alternating minimization until the relative objective change drops below
/// tol or max_iter sweeps have run. Each sweep updates the weights against
/// the current centers first, so the seeded centers drive the first
/// assignment instead of being averaged away by the uniform start weights.
/// Dispatches to fit_robust when the config selects the robust distance.
FitResult fit(const TrajectoryTensor& x, const SolverConfig& config);
FitResult fit_robust(const TrajectoryTensor& x, const SolverConfig& config);

}  // namespace stkm
