#pragma once

#include <cstdint>
#include <vector>

#include "stkm/core.hpp"

namespace stkm {

enum class CenterMotion { Linear, RandomWalk, MergeSplit };

const char* to_string(CenterMotion motion);
CenterMotion parse_center_motion(const std::string& name);

struct ScenarioConfig {
  std::size_t n_clusters = 3;
  // One entry per cluster, or a single entry applied to every cluster.
  std::vector<std::size_t> points_per_cluster{30};
  std::size_t T = 50;
  std::size_t m = 2;
  CenterMotion center_motion = CenterMotion::Linear;
  double step_sigma = 0.5;      // random_walk
  std::size_t meet_time = 8;    // merge_split: clusters 0 and 1 coincide on [meet_time, part_time)
  std::size_t part_time = 12;
  double spread_sigma = 1.0;
  // Distance between neighboring cluster start positions.
  double separation = 20.0;
  // Common drift per step; each cluster also gets a private heading offset
  // that changes pairwise distances by at most 20% of `separation`.
  double speed = 0.2;
  double outlier_fraction = 0.0;
  // Axis-aligned box [lo, hi] per dimension; empty means 2*separation around
  // the origin in every dimension.
  std::vector<double> outlier_box_lo;
  std::vector<double> outlier_box_hi;
  std::uint64_t seed = 0;

  std::size_t inlier_count() const;
  std::size_t outlier_count() const;
  void validate() const;
};

struct Scenario {
  TrajectoryTensor trajectories;
  Partition ground_truth;  // outliers carry kUnassigned
  CenterTensor center_paths;
};

/// Moving-cluster data with static membership: members are their cluster
/// center plus isotropic Gaussian noise drawn independently at every step;
/// outliers are redrawn uniformly in the outlier box at every step. Members
/// are ordered cluster by cluster, outliers last.
Scenario generate(const ScenarioConfig& config);

}  // namespace stkm
