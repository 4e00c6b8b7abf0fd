#include "stkm/phase2.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace stkm {

SimilarityMatrix::SimilarityMatrix(std::size_t points, std::size_t steps,
                                   std::vector<std::uint32_t> agreements)
    : points_(points), steps_(steps), agreements_(std::move(agreements)) {
  if (steps_ == 0) throw Error(ErrorCode::InvalidShape, "similarity needs at least one step");
  if (agreements_.size() != points_ * points_) {
    throw Error(ErrorCode::ShapeMismatch, "similarity matrix is not N x N");
  }
}

double SimilarityMatrix::max_off_diagonal() const {
  std::uint32_t best = 0;
  for (std::size_t i = 0; i < points_; ++i) {
    for (std::size_t j = 0; j < points_; ++j) {
      if (i != j) best = std::max(best, agreements_[i * points_ + j]);
    }
  }
  return static_cast<double>(best) / static_cast<double>(steps_);
}

void Phase2Config::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (k_target < 1) fail("k_target must be >= 1");
  if (!(theta_grid_step > 0.0 && theta_grid_step <= 1.0)) fail("theta_grid_step must lie in (0, 1]");
  if (votes_first_round < 1) fail("votes_first_round must be >= 1");
  if (votes_first_round > votes_max) fail("votes_first_round must not exceed votes_max");
}

AssignmentHistory extract_assignments(const WeightTensor& w) {
  std::vector<int> labels(w.steps() * w.points());
  for (std::size_t t = 0; t < w.steps(); ++t) {
    for (std::size_t i = 0; i < w.points(); ++i) {
      auto col = w.column(t, i);
      // max_element returns the first maximum.
      labels[t * w.points() + i] = static_cast<int>(std::max_element(col.begin(), col.end()) - col.begin());
    }
  }
  return AssignmentHistory(w.steps(), w.points(), w.clusters(), std::move(labels));
}

double similarity(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "histories differ in length");
  if (a.empty()) throw Error(ErrorCode::LengthMismatch, "empty histories");
  std::size_t agree = 0;
  for (std::size_t t = 0; t < a.size(); ++t) agree += (a[t] == b[t]);
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

SimilarityMatrix similarity_matrix(const AssignmentHistory& assignments) {
  const std::size_t n = assignments.points();
  const std::size_t steps = assignments.steps();
  std::vector<std::uint32_t> agree(n * n, 0);
  const auto& labels = assignments.labels();
  for (std::size_t t = 0; t < steps; ++t) {
    const int* row = labels.data() + t * n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) agree[i * n + j] += (row[i] == row[j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    agree[i * n + i] = static_cast<std::uint32_t>(steps);
    for (std::size_t j = i + 1; j < n; ++j) agree[j * n + i] = agree[i * n + j];
  }
  return SimilarityMatrix(n, steps, std::move(agree));
}

Partition cluster_at_theta(const SimilarityMatrix& a, double theta, std::span<const std::size_t> order) {
  const std::size_t n = a.points();
  if (order.size() != n) throw Error(ErrorCode::LengthMismatch, "order is not a permutation of 0..N-1");
  // Compare on agreement counts; the slack absorbs rounding in theta * T.
  const double needed = theta * static_cast<double>(a.steps()) - 1e-9;
  std::vector<int> labels(n, kUnassigned);
  std::vector<std::size_t> seeds;
  for (std::size_t i : order) {
    if (i >= n || labels[i] != kUnassigned) {
      throw Error(ErrorCode::LengthMismatch, "order is not a permutation of 0..N-1");
    }
    for (std::size_t g = 0; g < seeds.size(); ++g) {
      if (static_cast<double>(a.agreements(i, seeds[g])) >= needed) {
        labels[i] = static_cast<int>(g);
        break;
      }
    }
    if (labels[i] == kUnassigned) {
      labels[i] = static_cast<int>(seeds.size());
      seeds.push_back(i);
    }
  }
  return Partition(std::move(labels));
}

std::vector<double> theta_grid(double step, std::size_t steps) {
  if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorCode::InvalidConfig, "theta grid step outside (0, 1]");
  const auto coarse = static_cast<std::size_t>(std::ceil(1.0 / step - 1e-9));
  const std::size_t intervals = std::max(coarse, 2 * steps);
  std::vector<double> grid(intervals + 1);
  for (std::size_t g = 0; g <= intervals; ++g) {
    grid[g] = static_cast<double>(g) / static_cast<double>(intervals);
  }
  return grid;
}

ThetaSearchResult search_theta(const SimilarityMatrix& a, std::size_t k_target,
                               std::span<const std::size_t> order, double grid_step) {
  if (k_target < 1 || k_target > a.points()) {
    throw Error(ErrorCode::InvalidConfig, "k_target must lie in 1..N");
  }
  ThetaSearchResult best;
  std::size_t best_gap = static_cast<std::size_t>(-1);
  for (double theta : theta_grid(grid_step, a.steps())) {
    Partition p = cluster_at_theta(a, theta, order);
    const std::size_t count = p.cluster_count();
    const std::size_t gap = count > k_target ? count - k_target : k_target - count;
    if (gap < best_gap) {
      best_gap = gap;
      best = {theta, std::move(p)};
      if (gap == 0) break;
    }
  }
  return best;
}

Phase2Result long_term_clusters(const AssignmentHistory& assignments, const Phase2Config& config) {
  config.validate();
  const std::size_t n = assignments.points();
  if (config.k_target > n) throw Error(ErrorCode::InvalidConfig, "k_target exceeds the number of objects");
  const SimilarityMatrix a = similarity_matrix(assignments);

  struct Tally {
    std::size_t votes = 0;
    std::size_t first_run = 0;
    double theta = 0.0;
  };
  std::map<std::vector<int>, Tally> tallies;
  std::mt19937_64 master = seeded_rng(config.seed, "phase2");
  std::vector<std::size_t> order(n);

  Phase2Result result;
  for (std::size_t run = 0; run < config.votes_max; ++run) {
    std::mt19937_64 run_rng(master());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), run_rng);
    ThetaSearchResult found = search_theta(a, config.k_target, order, config.theta_grid_step);
    auto [it, inserted] = tallies.try_emplace(found.partition.canonical().labels(), Tally{0, run, found.theta});
    ++it->second.votes;
    result.runs = run + 1;
    if (result.runs < config.votes_first_round) continue;
    // Strict majority ends the vote.
    if (2 * it->second.votes > result.runs) {
      result.partition = Partition(it->first);
      result.theta = it->second.theta;
      result.votes = it->second.votes;
      return result;
    }
  }
  const auto winner = std::max_element(tallies.begin(), tallies.end(), [](const auto& l, const auto& r) {
    if (l.second.votes != r.second.votes) return l.second.votes < r.second.votes;
    return l.second.first_run > r.second.first_run;
  });
  result.partition = Partition(winner->first);
  result.theta = winner->second.theta;
  result.votes = winner->second.votes;
  return result;
}

CenterTensor long_term_center_paths(const TrajectoryTensor& x, const Partition& partition) {
  if (partition.size() != x.points()) throw Error(ErrorCode::ShapeMismatch, "partition size != N");
  int max_label = kUnassigned;
  for (int l : partition.labels()) max_label = std::max(max_label, l);
  if (max_label == kUnassigned) throw Error(ErrorCode::EmptyCluster, "partition has no clusters");
  const auto clusters = static_cast<std::size_t>(max_label) + 1;
  std::vector<std::size_t> members(clusters, 0);
  for (int l : partition.labels()) {
    if (l != kUnassigned) ++members[static_cast<std::size_t>(l)];
  }
  for (std::size_t j = 0; j < clusters; ++j) {
    if (members[j] == 0) throw Error(ErrorCode::EmptyCluster, "cluster " + std::to_string(j) + " has no members");
  }
  CenterTensor paths(x.steps(), x.dims(), clusters);
  for (std::size_t t = 0; t < x.steps(); ++t) {
    for (std::size_t i = 0; i < x.points(); ++i) {
      const int l = partition[i];
      if (l == kUnassigned) continue;
      auto c = paths.center(t, static_cast<std::size_t>(l));
      auto p = x.point(t, i);
      for (std::size_t d = 0; d < x.dims(); ++d) c[d] += p[d];
    }
    for (std::size_t j = 0; j < clusters; ++j) {
      for (double& v : paths.center(t, j)) v /= static_cast<double>(members[j]);
    }
  }
  return paths;
}

}  // namespace stkm
