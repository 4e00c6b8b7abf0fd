#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stkm/core.hpp"

namespace stkm {

/// Pairwise agreement of assignment histories. Entries are agreement counts
/// divided by the number of steps T, so they are exact multiples of 1/T.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::size_t points, std::size_t steps, std::vector<std::uint32_t> agreements);

  std::size_t points() const noexcept { return points_; }
  std::size_t steps() const noexcept { return steps_; }

  double operator()(std::size_t i, std::size_t j) const {
    return static_cast<double>(agreements_[i * points_ + j]) / static_cast<double>(steps_);
  }
  std::uint32_t agreements(std::size_t i, std::size_t j) const { return agreements_[i * points_ + j]; }

  double max_off_diagonal() const;

 private:
  std::size_t points_;
  std::size_t steps_;
  std::vector<std::uint32_t> agreements_;
};

struct Phase2Config {
  std::size_t k_target = 2;
  double theta_grid_step = 0.01;
  std::size_t votes_first_round = 5;
  std::size_t votes_max = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ThetaSearchResult {
  double theta = 0.0;
  Partition partition;
};

struct Phase2Result {
  Partition partition;
  double theta = 0.0;    // from the earliest run that produced the winner
  std::size_t runs = 0;  // shuffles executed
  std::size_t votes = 0; // runs that produced the winner
};

/// a_{t,i} = argmax_j w_{t,j,i}, ties toward the smallest j.
AssignmentHistory extract_assignments(const WeightTensor& w);

/// Fraction of time steps at which two histories carry the same label.
double similarity(std::span<const int> a, std::span<const int> b);

SimilarityMatrix similarity_matrix(const AssignmentHistory& assignments);

/// Greedy seed-based grouping: visiting points in `order`, a point joins the
/// first group whose seed point is at least theta-similar to it, otherwise it
/// seeds a new group. Labels follow seed-creation order.
Partition cluster_at_theta(const SimilarityMatrix& a, double theta,
                           std::span<const std::size_t> order);

/// Grid of candidate thresholds 0, 1/n, ..., 1 with n = max(ceil(1/step), 2T).
std::vector<double> theta_grid(double step, std::size_t steps);

/// Smallest grid theta giving exactly k_target groups, or the theta whose
/// group count is closest to k_target (ties toward the smaller theta).
ThetaSearchResult search_theta(const SimilarityMatrix& a, std::size_t k_target,
                               std::span<const std::size_t> order, double grid_step = 0.01);

/// Majority vote over shuffled processing orders. Returned partitions are
/// canonical (labels in order of smallest member index).
Phase2Result long_term_clusters(const AssignmentHistory& assignments, const Phase2Config& config);

/// Per-step mean position of each long-term cluster's members. The result has
/// max_label + 1 clusters; every label in range must have a member.
CenterTensor long_term_center_paths(const TrajectoryTensor& x, const Partition& partition);

}  // namespace stkm
