// One PASS/FAIL line per acceptance criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "stkm/datagen.hpp"
#include "stkm/metrics.hpp"
#include "stkm/phase2.hpp"
#include "stkm/solver.hpp"

namespace fs = std::filesystem;
using namespace stkm;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void descent() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t ks[] = {2, 3, 5};
  const double lambdas[] = {0.0, 0.6, 0.8, 1.0};
  const CenterMotion motions[] = {CenterMotion::Linear, CenterMotion::RandomWalk, CenterMotion::MergeSplit};
  std::mt19937_64 rng(2024);
  int bad = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 20; ++s) {
    ScenarioConfig sc;
    sc.center_motion = motions[s % 3];
    sc.n_clusters = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    sc.points_per_cluster = {std::uniform_int_distribution<std::size_t>(5, 180 / sc.n_clusters)(rng)};
    sc.T = std::uniform_int_distribution<std::size_t>(10, 100)(rng);
    sc.meet_time = sc.T / 3;
    sc.part_time = sc.T / 3 + sc.T / 4;
    sc.separation = std::uniform_real_distribution<double>(3.0, 25.0)(rng);
    sc.outlier_fraction = s % 4 == 3 ? 0.05 : 0.0;
    sc.seed = 100 + s;
    const auto data = generate(sc);
    SolverConfig cfg;
    cfg.k = ks[(s / 3) % 3];
    cfg.lambda = lambdas[s % 4];
    cfg.seed = s;
    const auto r = fit(data.trajectories, cfg);
    for (std::size_t n = 1; n < r.objective_trace.size(); ++n) {
      const double rise = r.objective_trace[n] - r.objective_trace[n - 1];
      worst = std::max(worst, rise);
      if (rise > 1e-9) ++bad;
    }
  }
  const double elapsed = seconds_since(t0);
  report(1, bad == 0 && elapsed < 60.0,
         fmt("20 scenarios, %g rising steps, largest step change %.3g, %.1f s", bad, worst, elapsed));
}

void stationarity() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const std::size_t steps = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    std::vector<double> xs(steps * n * m);
    for (double& v : xs) v = gauss(rng);
    const auto x = TrajectoryTensor::with_default_labels(steps, m, n, xs);
    std::vector<double> ws(steps * n * k);
    for (std::size_t col = 0; col < steps * n; ++col) {
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += ws[col * k + j] = -std::log(1.0 - unit(rng));
      for (std::size_t j = 0; j < k; ++j) ws[col * k + j] /= total;
    }
    const WeightTensor w(steps, k, n, ws);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, steps - 1)(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    const double lambda = unit(rng);
    std::vector<double> next;
    if (t + 1 < steps) {
      next.resize(m);
      for (double& v : next) v = gauss(rng);
    }
    const auto c = gauss_seidel_center(x, w, t, j, lambda, next);
    const double pull = static_cast<double>(n) * lambda;
    auto local = [&](const std::vector<double>& at) {
      double f = 0.0;
      for (std::size_t i = 0; i < n; ++i) f += w(t, j, i) * oracle::sq_dist(x.point(t, i), at);
      if (!next.empty()) f += pull * oracle::sq_dist(at, next);
      return f;
    };
    const double h = 1e-5;
    double g2 = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
      auto hi = c, lo = c;
      hi[d] += h;
      lo[d] -= h;
      const double g = (local(hi) - local(lo)) / (2.0 * h);
      g2 += g * g;
    }
    // Scale: magnitude of the individual gradient terms at the update.
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += 2.0 * w(t, j, i) * std::sqrt(oracle::sq_dist(x.point(t, i), c));
    if (!next.empty()) scale += 2.0 * pull * std::sqrt(oracle::sq_dist(c, next));
    worst = std::max(worst, std::sqrt(g2) / std::max(scale, 1e-12));
  }
  report(2, worst < 1e-4, fmt("100 (t, j, W) configurations, worst relative gradient %.3g", worst));
}

void decomposition() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  std::size_t sweeps_checked = 0;
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(6, 50)(rng);
    const std::size_t steps = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
    const std::size_t m = 2;
    std::vector<double> blob(k * m);
    for (double& v : blob) v = 6.0 * gauss(rng);
    std::vector<double> xs(steps * n * m);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < m; ++d) xs[(t * n + i) * m + d] = blob[(i % k) * m + d] + 0.3 * t + gauss(rng);
      }
    }
    const auto x = TrajectoryTensor::with_default_labels(steps, m, n, xs);
    SolverConfig cfg;
    cfg.k = k;
    cfg.lambda = 0.0;
    cfg.seed = inst;
    const auto start = init(x, k, cfg.seed);

    std::vector<oracle::Frame> frames(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      auto& f = frames[t];
      f.n = n;
      f.m = m;
      f.k = k;
      f.points.assign(xs.begin() + t * n * m, xs.begin() + (t + 1) * n * m);
      f.centers.assign(start.centers.data().begin() + t * k * m, start.centers.data().begin() + (t + 1) * k * m);
      f.weights.assign(n * k, 1.0 / k);
    }
    auto compare = [&](const CenterTensor& c, const WeightTensor& w) {
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t v = 0; v < k * m; ++v) worst = std::max(worst, std::abs(c.data()[t * k * m + v] - frames[t].centers[v]));
        for (std::size_t v = 0; v < n * k; ++v) worst = std::max(worst, std::abs(w.data()[t * n * k + v] - frames[t].weights[v]));
      }
    };

    const auto fitted = fit(x, cfg);
    CenterTensor c = start.centers;
    WeightTensor w = start.weights;
    for (std::size_t sweep = 0; sweep < fitted.iterations; ++sweep) {
      w = update_weights(x, c, w, cfg.d_k);
      c = update_centers(x, c, w, 0.0);
      double per_frame = 0.0;
      for (auto& f : frames) {
        oracle::frame_weight_step(f, cfg.d_k);
        oracle::frame_center_step(f);
        per_frame += oracle::frame_objective(f);
      }
      compare(c, w);
      worst = std::max(worst, std::abs(objective(x, c, w, 0.0) - per_frame) / std::max(1.0, per_frame));
      ++sweeps_checked;
    }
    compare(fitted.centers, fitted.weights);
  }
  report(3, worst <= 1e-10,
         fmt("10 instances, %g sweeps, largest deviation from per-frame fits %.3g", static_cast<double>(sweeps_checked), worst));
}

void simplex() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double worst_grid = 0.0, worst_exact = 0.0;
  for (std::size_t k = 2; k <= 6; ++k) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> v(k);
      for (double& e : v) e = u(rng);
      const auto p = project_simplex(v);
      const auto ref = k <= 3 ? oracle::simplex_grid(v) : oracle::simplex_active_set(v);
      double diff = 0.0;
      for (std::size_t j = 0; j < k; ++j) diff = std::max(diff, std::abs(p[j] - ref[j]));
      if (k <= 3) worst_grid = std::max(worst_grid, diff);
      else worst_exact = std::max(worst_exact, diff);
    }
  }
  report(4, worst_grid <= 1e-3 && worst_exact <= 1e-10,
         fmt("k=2,3 vs grid: %.3g; k=4..6 vs active set: %.3g", worst_grid, worst_exact));
}

void ami_oracle() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  bool exact_ok = true;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = std::uniform_int_distribution<int>(2, 30)(rng);
    const int ka = std::uniform_int_distribution<int>(1, 6)(rng);
    const int kb = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<int> a(n), b(n);
    for (int& v : a) v = std::uniform_int_distribution<int>(0, ka - 1)(rng);
    for (int& v : b) v = std::uniform_int_distribution<int>(0, kb - 1)(rng);
    const double got = ami(a, b);
    worst = std::max(worst, std::abs(got - oracle::ami(a, b)));
    worst = std::max(worst, std::abs(expected_mutual_information(ContingencyTable(a, b)) -
                                     oracle::expected_mi(oracle::contingency(a, b))));
    // Renaming either side leaves the score bit-identical.
    std::vector<int> names(6);
    std::iota(names.begin(), names.end(), 10);
    std::shuffle(names.begin(), names.end(), rng);
    std::vector<int> ra(n), rb(n);
    for (int i = 0; i < n; ++i) ra[i] = names[a[i]];
    std::shuffle(names.begin(), names.end(), rng);
    for (int i = 0; i < n; ++i) rb[i] = -names[b[i]];
    exact_ok &= ami(ra, b) == got && ami(a, rb) == got && ami(ra, rb) == got;
  }
  const std::vector<int> constant(12, 4), mixed{0, 1, 2, 0, 1, 2, 0, 1, 2, 3, 3, 3};
  std::vector<int> renamed(mixed.size());
  std::transform(mixed.begin(), mixed.end(), renamed.begin(), [](int v) { return 7 - v; });
  exact_ok &= ami(constant, constant) == 0.0 && ami(constant, mixed) == 0.0 && ami(mixed, constant) == 0.0;
  exact_ok &= ami(mixed, mixed) == 1.0 && ami(mixed, renamed) == 1.0;
  report(5, worst <= 1e-10 && exact_ok,
         fmt("50 instances, largest deviation from oracle %.3g; exact checks ", worst) + (exact_ok ? "ok" : "failed"));
}

void static_paths() {
  int lt_ok = 0, tot_ok = 0;
  double slowest = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig sc;
    sc.n_clusters = 3;
    sc.points_per_cluster = {34, 33, 33};
    sc.T = 50;
    sc.spread_sigma = 1.0;
    sc.separation = 20.0;
    sc.seed = seed;
    const auto data = generate(sc);
    SolverConfig cfg;
    cfg.k = 3;
    cfg.lambda = 0.8;
    cfg.seed = seed;
    const auto r = fit(data.trajectories, cfg);
    const auto history = extract_assignments(r.weights);
    Phase2Config p2;
    p2.k_target = 3;
    p2.seed = seed;
    const auto lt = long_term_clusters(history, p2);
    lt_ok += long_term_ami(lt.partition, data.ground_truth) == 1.0;
    tot_ok += total_ami(history, data.ground_truth) >= 0.8;
    slowest = std::max(slowest, seconds_since(t0));
  }
  report(6, lt_ok >= 9 && tot_ok >= 9 && slowest < 30.0,
         fmt("long-term AMI = 1 in %g/10, total AMI >= 0.8 in %g/10, slowest seed %.2f s", lt_ok, tot_ok, slowest));
}

void merge_split() {
  int passing = 0;
  double worst_share = 1.0;
  for (int seed = 0; seed < 10; ++seed) {
    ScenarioConfig sc;
    sc.n_clusters = 3;
    sc.points_per_cluster = {33};
    sc.T = 30;
    sc.center_motion = CenterMotion::MergeSplit;
    sc.meet_time = 10;
    sc.part_time = 20;
    sc.spread_sigma = 1.0;
    sc.separation = 60.0;
    sc.seed = seed;
    const auto data = generate(sc);
    SolverConfig cfg;
    cfg.k = 3;
    cfg.lambda = 0.8;
    cfg.seed = seed;
    const auto history = extract_assignments(fit(data.trajectories, cfg).weights);
    const std::size_t n = history.points();
    std::size_t good_steps = 0;
    for (std::size_t t = sc.meet_time; t < sc.part_time; ++t) {
      std::vector<std::size_t> counts(cfg.k, 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[history(t, i)];
      const auto populated = std::count_if(counts.begin(), counts.end(),
                                           [&](std::size_t c) { return c >= 0.05 * static_cast<double>(n); });
      good_steps += populated <= 2;
    }
    const double share = static_cast<double>(good_steps) / static_cast<double>(sc.part_time - sc.meet_time);
    worst_share = std::min(worst_share, share);
    passing += share >= 0.8;
  }
  report(7, passing == 10,
         fmt("merged steps with <= 2 populated clusters: >= 80%% in %g/10 seeds, lowest share %.2f", passing, worst_share));
}

double inlier_long_term_ami(const FitResult& r, const Scenario& s, std::size_t inliers, std::uint64_t seed) {
  Phase2Config p2;
  p2.k_target = 2;
  p2.seed = seed;
  const auto lt = long_term_clusters(extract_assignments(r.weights), p2);
  const std::vector<int> pred(lt.partition.labels().begin(), lt.partition.labels().begin() + inliers);
  const std::vector<int> truth(s.ground_truth.labels().begin(), s.ground_truth.labels().begin() + inliers);
  return ami(pred, truth);
}

void outliers() {
  int passing = 0;
  std::string detail;
  for (int seed = 0; seed < 10; ++seed) {
    ScenarioConfig sc;
    sc.n_clusters = 2;
    sc.points_per_cluster = {45};
    sc.T = 30;
    sc.spread_sigma = 1.0;
    sc.separation = 8.0;
    sc.outlier_fraction = 0.1;
    sc.outlier_box_lo = {-60.0, -60.0};
    sc.outlier_box_hi = {60.0, 60.0};
    sc.seed = seed;
    const auto data = generate(sc);
    SolverConfig cfg;
    cfg.k = 2;
    cfg.lambda = 0.8;
    cfg.seed = seed;
    const double standard = inlier_long_term_ami(fit(data.trajectories, cfg), data, sc.inlier_count(), seed);
    cfg.distance = DistanceKind::RobustLog;
    cfg.c_const = 1.0;
    const double robust = inlier_long_term_ami(fit_robust(data.trajectories, cfg), data, sc.inlier_count(), seed);
    passing += robust >= 0.9 && robust > standard;
    detail += fmt(" %.2f/%.2f", robust, standard);
  }
  report(8, passing >= 8, fmt("robust >= 0.9 and above standard in %g/10 seeds; robust/standard:", passing) + detail);
}

void phase2_exactness() {
  std::mt19937_64 rng(13);
  int exact = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
    const int groups = std::uniform_int_distribution<int>(1, static_cast<int>(std::min<std::size_t>(n, 8)))(rng);
    const std::size_t steps = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
    std::vector<int> labels(n);
    for (auto& l : labels) l = std::uniform_int_distribution<int>(0, groups - 1)(rng);
    const Partition p(labels);
    std::vector<int> tiled;
    for (std::size_t t = 0; t < steps; ++t) tiled.insert(tiled.end(), labels.begin(), labels.end());
    const AssignmentHistory history(steps, n, static_cast<std::size_t>(groups), tiled);
    Phase2Config cfg;
    cfg.k_target = p.cluster_count();
    cfg.seed = rep;
    exact += long_term_clusters(history, cfg).partition == p.canonical();
  }
  report(9, exact == 20, fmt("constant histories recovered exactly in %g/20", exact));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
#ifdef STKM_CLI_PATH
  const fs::path cli = STKM_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "stkm_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto sh = [&](const std::string& args) {
    const std::string cmd = "\"" + cli.string() + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  bool ok = sh("generate --out \"" + (dir / "data").string() + "\" --n_clusters 3 --points_per_cluster 20 --T 25 --seed 4") == 0;
  for (const char* run : {"a", "b"}) {
    ok &= sh("run --input \"" + (dir / "data.csv").string() + "\" --truth \"" + (dir / "data.truth.csv").string() +
             "\" --k 3 --lambda 0.8 --seed 9 --phase2_seed 9 --out \"" + (dir / run).string() + "\"") == 0;
  }
  std::size_t compared = 0;
  if (ok) {
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      const auto name = entry.path().filename();
      std::string lhs = slurp(dir / "a" / name), rhs = slurp(dir / "b" / name);
      if (name == "run.json") {
        auto strip = [](const std::string& text) {
          auto doc = nlohmann::json::parse(text);
          doc.erase("timings_ms");
          return doc.dump(2);
        };
        lhs = strip(lhs);
        rhs = strip(rhs);
      }
      ok &= !lhs.empty() && lhs == rhs;
      ++compared;
    }
  }
  report(10, ok && compared >= 8, fmt("two CLI runs, %g artifacts byte-compared (timings excluded)", compared));
#else
  report(10, false, "CLI path not configured");
#endif
}

}  // namespace

int main() {
  descent();
  stationarity();
  decomposition();
  simplex();
  ami_oracle();
  static_paths();
  merge_split();
  outliers();
  phase2_exactness();
  determinism();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
