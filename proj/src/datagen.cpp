#include "stkm/datagen.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace stkm {

const char* to_string(CenterMotion motion) {
  switch (motion) {
    case CenterMotion::Linear: return "linear";
    case CenterMotion::RandomWalk: return "random_walk";
    case CenterMotion::MergeSplit: return "merge_split";
  }
  return "linear";
}

CenterMotion parse_center_motion(const std::string& name) {
  if (name == "linear") return CenterMotion::Linear;
  if (name == "random_walk") return CenterMotion::RandomWalk;
  if (name == "merge_split") return CenterMotion::MergeSplit;
  throw Error(ErrorCode::InvalidConfig, "unknown center_motion '" + name + "'");
}

std::size_t ScenarioConfig::inlier_count() const {
  std::size_t total = 0;
  for (std::size_t j = 0; j < n_clusters; ++j) {
    total += points_per_cluster.size() == 1 ? points_per_cluster[0] : points_per_cluster.at(j);
  }
  return total;
}

std::size_t ScenarioConfig::outlier_count() const {
  // Smallest count with round(fraction * (inliers + count)) == count.
  const std::size_t inliers = inlier_count();
  std::size_t count = 0;
  while (static_cast<std::size_t>(std::llround(outlier_fraction * static_cast<double>(inliers + count))) > count) {
    ++count;
  }
  return count;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (n_clusters < 1) fail("n_clusters must be >= 1");
  if (points_per_cluster.size() != 1 && points_per_cluster.size() != n_clusters) {
    fail("points_per_cluster needs one entry or one per cluster");
  }
  for (std::size_t p : points_per_cluster) {
    if (p < 1) fail("points_per_cluster entries must be >= 1");
  }
  if (T < 2) fail("T must be >= 2");
  if (m < 1) fail("m must be >= 1");
  if (!(spread_sigma > 0.0 && std::isfinite(spread_sigma))) fail("spread_sigma must be > 0");
  if (!(separation >= 0.0) || !(speed >= 0.0) || !(step_sigma >= 0.0)) {
    fail("separation, speed and step_sigma must be non-negative");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) fail("outlier_fraction must lie in [0, 1)");
  if (center_motion == CenterMotion::MergeSplit) {
    if (n_clusters < 2) fail("merge_split needs at least 2 clusters");
    if (!(meet_time < part_time && part_time < T)) fail("merge_split needs meet_time < part_time < T");
  }
  if (outlier_box_lo.size() != outlier_box_hi.size()) fail("outlier box bounds differ in length");
  if (!outlier_box_lo.empty()) {
    if (outlier_box_lo.size() != m) fail("outlier box must have m bounds");
    for (std::size_t d = 0; d < m; ++d) {
      if (!(outlier_box_lo[d] < outlier_box_hi[d])) fail("outlier box needs lo < hi");
    }
  }
}

namespace {

std::vector<double> random_direction(std::mt19937_64& rng, std::size_t m) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(m);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<std::vector<double>> start_positions(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::vector<std::vector<double>> starts(cfg.n_clusters, std::vector<double>(cfg.m, 0.0));
  if (cfg.n_clusters == 1) return starts;
  const double n = static_cast<double>(cfg.n_clusters);
  if (cfg.m == 1) {
    for (std::size_t j = 0; j < cfg.n_clusters; ++j) {
      starts[j][0] = cfg.separation * (static_cast<double>(j) - 0.5 * (n - 1.0));
    }
    return starts;
  }
  // Regular polygon whose neighboring vertices are `separation` apart.
  const double radius = cfg.separation / (2.0 * std::sin(std::numbers::pi / n));
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  for (std::size_t j = 0; j < cfg.n_clusters; ++j) {
    const double angle = phase + 2.0 * std::numbers::pi * static_cast<double>(j) / n;
    starts[j][0] = radius * std::cos(angle);
    starts[j][1] = radius * std::sin(angle);
  }
  return starts;
}

}  // namespace

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng = seeded_rng(cfg.seed, "datagen");
  const std::size_t m = cfg.m;
  const std::size_t steps = cfg.T;
  const std::size_t k = cfg.n_clusters;

  const auto starts = start_positions(cfg, rng);
  std::vector<double> drift = random_direction(rng, m);
  for (double& v : drift) v *= cfg.speed;
  const double offset_limit = 0.1 * cfg.separation / static_cast<double>(steps - 1);
  std::vector<std::vector<double>> heading(k);
  for (auto& h : heading) {
    h = random_direction(rng, m);
    const double scale = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * offset_limit;
    for (double& v : h) v *= scale;
  }

  CenterTensor paths(steps, m, k);
  std::normal_distribution<double> walk(0.0, cfg.step_sigma);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> wander(m, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      auto c = paths.center(t, j);
      const double tt = static_cast<double>(t);
      if (cfg.center_motion == CenterMotion::RandomWalk && t > 0) {
        for (double& w : wander) w += walk(rng);
      }
      for (std::size_t d = 0; d < m; ++d) {
        c[d] = starts[j][d] + drift[d] * tt + wander[d];
        if (cfg.center_motion != CenterMotion::RandomWalk) c[d] += heading[j][d] * tt;
      }
    }
  }

  if (cfg.center_motion == CenterMotion::MergeSplit) {
    // Clusters 0 and 1 travel to a shared waypoint, move as one on
    // [meet_time, part_time), then head back to their own lanes.
    const std::size_t meet = cfg.meet_time;
    const std::size_t part = cfg.part_time;
    std::vector<double> waypoint(m), last_shared(m);
    for (std::size_t d = 0; d < m; ++d) {
      waypoint[d] = 0.5 * (starts[0][d] + starts[1][d]) + drift[d] * static_cast<double>(meet);
      last_shared[d] = waypoint[d] + drift[d] * static_cast<double>(part - 1 - meet);
    }
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t t = 0; t < steps; ++t) {
        auto c = paths.center(t, j);
        for (std::size_t d = 0; d < m; ++d) {
          if (t < meet) {
            const double frac = static_cast<double>(t) / static_cast<double>(meet);
            c[d] = starts[j][d] + (waypoint[d] - starts[j][d]) * frac;
          } else if (t < part) {
            c[d] = waypoint[d] + drift[d] * static_cast<double>(t - meet);
          } else {
            const double lane_end = starts[j][d] + drift[d] * static_cast<double>(steps - 1);
            const double frac = static_cast<double>(t - (part - 1)) / static_cast<double>(steps - part);
            c[d] = last_shared[d] + (lane_end - last_shared[d]) * frac;
          }
        }
      }
    }
  }

  const std::size_t inliers = cfg.inlier_count();
  const std::size_t outliers = cfg.outlier_count();
  const std::size_t n = inliers + outliers;

  std::vector<int> truth;
  truth.reserve(n);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t size = cfg.points_per_cluster.size() == 1 ? cfg.points_per_cluster[0] : cfg.points_per_cluster[j];
    truth.insert(truth.end(), size, static_cast<int>(j));
  }
  truth.insert(truth.end(), outliers, kUnassigned);

  std::vector<double> lo = cfg.outlier_box_lo, hi = cfg.outlier_box_hi;
  if (lo.empty()) {
    lo.assign(m, -2.0 * cfg.separation);
    hi.assign(m, 2.0 * cfg.separation);
  }

  std::vector<double> data(steps * m * n);
  std::normal_distribution<double> noise(0.0, cfg.spread_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double* p = data.data() + (t * n + i) * m;
      if (truth[i] == kUnassigned) {
        for (std::size_t d = 0; d < m; ++d) p[d] = lo[d] + (hi[d] - lo[d]) * unit(rng);
      } else {
        auto c = paths.center(t, static_cast<std::size_t>(truth[i]));
        for (std::size_t d = 0; d < m; ++d) p[d] = c[d] + noise(rng);
      }
    }
  }

  return {TrajectoryTensor::with_default_labels(steps, m, n, std::move(data)), Partition(std::move(truth)),
          std::move(paths)};
}

}  // namespace stkm
