#include "stkm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stkm/io.hpp"
#include "stkm/metrics.hpp"

namespace stkm {

using nlohmann::json;

const char* to_string(DistanceKind kind) {
  return kind == DistanceKind::SquaredEuclidean ? "squared_euclidean" : "robust_log";
}

DistanceKind parse_distance(const std::string& name) {
  if (name == "squared_euclidean") return DistanceKind::SquaredEuclidean;
  if (name == "robust_log") return DistanceKind::RobustLog;
  throw Error(ErrorCode::InvalidConfig, "unknown distance '" + name + "'");
}

void PipelineConfig::validate() const {
  solver.validate();
  resolved_phase2().validate();
  if (interval && !(*interval > 0.0 && std::isfinite(*interval))) {
    throw Error(ErrorCode::InvalidConfig, "interval must be a positive bin width");
  }
}

Phase2Config PipelineConfig::resolved_phase2() const {
  Phase2Config out = phase2;
  if (k_target_follows_k) out.k_target = solver.k;
  return out;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; })) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& target, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    target = it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for ") + where + "." + key);
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& doc) {
  reject_unknown(doc, {"solver", "phase2", "interval"}, "config");
  PipelineConfig cfg;
  if (auto it = doc.find("solver"); it != doc.end()) {
    const json& s = *it;
    reject_unknown(s, {"k", "lambda", "d_k", "max_iter", "tol", "seed", "distance", "c_const"}, "solver");
    read_field(s, "k", cfg.solver.k, "solver");
    read_field(s, "lambda", cfg.solver.lambda, "solver");
    read_field(s, "d_k", cfg.solver.d_k, "solver");
    read_field(s, "max_iter", cfg.solver.max_iter, "solver");
    read_field(s, "tol", cfg.solver.tol, "solver");
    read_field(s, "seed", cfg.solver.seed, "solver");
    read_field(s, "c_const", cfg.solver.c_const, "solver");
    std::string distance = to_string(cfg.solver.distance);
    read_field(s, "distance", distance, "solver");
    cfg.solver.distance = parse_distance(distance);
  }
  if (auto it = doc.find("phase2"); it != doc.end()) {
    const json& p = *it;
    reject_unknown(p, {"k_target", "theta_grid_step", "votes_first_round", "votes_max", "seed"}, "phase2");
    if (p.contains("k_target")) {
      read_field(p, "k_target", cfg.phase2.k_target, "phase2");
      cfg.k_target_follows_k = false;
    }
    read_field(p, "theta_grid_step", cfg.phase2.theta_grid_step, "phase2");
    read_field(p, "votes_first_round", cfg.phase2.votes_first_round, "phase2");
    read_field(p, "votes_max", cfg.phase2.votes_max, "phase2");
    read_field(p, "seed", cfg.phase2.seed, "phase2");
  }
  if (auto it = doc.find("interval"); it != doc.end() && !it->is_null()) {
    double width = 0.0;
    read_field(doc, "interval", width, "config");
    cfg.interval = width;
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(doc);
}

json to_json(const PipelineConfig& config) {
  const Phase2Config p = config.resolved_phase2();
  json doc;
  doc["solver"] = {{"k", config.solver.k},
                   {"lambda", config.solver.lambda},
                   {"d_k", config.solver.d_k},
                   {"max_iter", config.solver.max_iter},
                   {"tol", config.solver.tol},
                   {"seed", config.solver.seed},
                   {"distance", to_string(config.solver.distance)},
                   {"c_const", config.solver.c_const}};
  doc["phase2"] = {{"k_target", p.k_target},
                   {"theta_grid_step", p.theta_grid_step},
                   {"votes_first_round", p.votes_first_round},
                   {"votes_max", p.votes_max},
                   {"seed", p.seed}};
  doc["interval"] = config.interval ? json(*config.interval) : json(nullptr);
  return doc;
}

json RunRecord::to_json() const {
  json doc;
  doc["dataset"] = dataset;
  doc["config"] = stkm::to_json(config);
  doc["shape"] = {{"T", steps}, {"m", dims}, {"N", points}};
  doc["fit"] = {{"iterations", iterations}, {"converged", converged}, {"final_objective", final_objective}};
  doc["phase2"] = {{"theta", theta},
                   {"runs", phase2_runs},
                   {"votes", phase2_votes},
                   {"clusters", long_term.cluster_count()},
                   {"partition", long_term.labels()}};
  if (scores) doc["metrics"] = {{"total_ami", scores->total_ami}, {"long_term_ami", scores->long_term_ami}};
  doc["tables"] = {{"positions", "positions.csv"},
                   {"centers", "centers.csv"},
                   {"long_term_centers", "long_term_centers.csv"},
                   {"objective", "objective.csv"},
                   {"assignments", "assignments.csv"},
                   {"ribbons", "ribbons.csv"},
                   {"partition", "partition.csv"}};
  doc["timings_ms"] = {{"load", timings.load_ms},
                       {"fit", timings.fit_ms},
                       {"phase2", timings.phase2_ms},
                       {"metrics", timings.metrics_ms}};
  return doc;
}

namespace {

void write_tables(const RunRecord& rec, const TrajectoryTensor& x, const AssignmentHistory& history,
                  const std::filesystem::path& dir) {
  save_centers(rec.centers, rec.timestamps, dir / "centers.csv");
  save_centers(long_term_center_paths(x, rec.long_term), rec.timestamps, dir / "long_term_centers.csv");
  save_assignments(history, rec.point_ids, rec.timestamps, dir / "assignments.csv");
  save_partition(rec.long_term, rec.point_ids, dir / "partition.csv");
  {
    std::ofstream out(dir / "objective.csv", std::ios::binary);
    out << "iteration,objective\n";
    for (std::size_t n = 0; n < rec.objective_trace.size(); ++n) {
      out << n + 1 << ',' << format_number(rec.objective_trace[n]) << '\n';
    }
  }
  {
    std::ofstream out(dir / "positions.csv", std::ios::binary);
    out << "t,id";
    for (std::size_t d = 0; d < x.dims(); ++d) out << ",x" << d + 1;
    out << ",label,long_term\n";
    for (std::size_t t = 0; t < x.steps(); ++t) {
      for (std::size_t i = 0; i < x.points(); ++i) {
        out << format_number(rec.timestamps[t]) << ',' << rec.point_ids[i];
        for (double v : x.point(t, i)) out << ',' << format_number(v);
        out << ',' << history(t, i) << ',' << rec.long_term[i] << '\n';
      }
    }
  }
  {
    // Assignment-history ribbons grouped by long-term cluster.
    std::vector<std::size_t> order(x.points());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rec.long_term[a] < rec.long_term[b]; });
    std::ofstream out(dir / "ribbons.csv", std::ios::binary);
    out << "long_term,id,t,label\n";
    for (std::size_t i : order) {
      for (std::size_t t = 0; t < x.steps(); ++t) {
        out << rec.long_term[i] << ',' << rec.point_ids[i] << ',' << format_number(rec.timestamps[t]) << ','
            << history(t, i) << '\n';
      }
    }
  }
}

}  // namespace

RunRecord run_pipeline(const std::filesystem::path& dataset,
                       const std::optional<std::filesystem::path>& ground_truth, const PipelineConfig& config,
                       const std::filesystem::path& out_dir) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  RunRecord rec;
  rec.dataset = dataset.string();
  rec.config = config;

  auto clock = std::chrono::steady_clock::now();
  const TrajectoryTensor x = stage("load", [&] { return load_trajectories(dataset, config.interval); });
  std::optional<Partition> truth;
  if (ground_truth) truth = stage("load", [&] { return load_ground_truth(*ground_truth, x.point_ids()); });
  rec.timings.load_ms = elapsed_ms(clock);
  rec.steps = x.steps();
  rec.dims = x.dims();
  rec.points = x.points();
  rec.point_ids = x.point_ids();
  rec.timestamps = x.timestamps();

  clock = std::chrono::steady_clock::now();
  FitResult fitted = stage("fit", [&] { return fit(x, config.solver); });
  rec.timings.fit_ms = elapsed_ms(clock);
  rec.iterations = fitted.iterations;
  rec.converged = fitted.converged;
  rec.objective_trace = fitted.objective_trace;
  rec.final_objective = fitted.objective_trace.empty() ? 0.0 : fitted.objective_trace.back();
  rec.centers = fitted.centers;

  clock = std::chrono::steady_clock::now();
  const AssignmentHistory history = extract_assignments(fitted.weights);
  rec.assignments = history.labels();
  Phase2Result lt = stage("phase2", [&] { return long_term_clusters(history, config.resolved_phase2()); });
  rec.timings.phase2_ms = elapsed_ms(clock);
  rec.long_term = lt.partition;
  rec.theta = lt.theta;
  rec.phase2_runs = lt.runs;
  rec.phase2_votes = lt.votes;

  if (truth) {
    clock = std::chrono::steady_clock::now();
    rec.scores = stage("metrics", [&] { return Scores{total_ami(history, *truth), long_term_ami(lt.partition, *truth)}; });
    rec.timings.metrics_ms = elapsed_ms(clock);
  }

  stage("persist", [&] {
    std::filesystem::create_directories(out_dir);
    write_tables(rec, x, history, out_dir);
    std::ofstream out(out_dir / "run.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (out_dir / "run.json").string());
    out << rec.to_json().dump(2) << '\n';
    return 0;
  });
  return rec;
}

std::filesystem::path truth_path_for(const std::filesystem::path& dataset) {
  auto p = dataset;
  p.replace_filename(dataset.stem().string() + ".truth.csv");
  return p;
}

SweepResult sweep(std::span<const std::filesystem::path> datasets, std::span<const double> lambdas,
                  const PipelineConfig& base, const std::filesystem::path& out_dir, bool k_from_truth,
                  std::span<const double> bucket_edges) {
  if (!std::is_sorted(bucket_edges.begin(), bucket_edges.end())) {
    throw Error(ErrorCode::InvalidConfig, "bucket edges must be ascending");
  }
  for (double l : lambdas) {
    PipelineConfig probe = base;
    probe.solver.lambda = l;
    probe.validate();
  }
  SweepResult result;
  std::filesystem::create_directories(out_dir);

  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& dataset = datasets[d];
    const auto truth_file = truth_path_for(dataset);
    const bool has_truth = std::filesystem::exists(truth_file);
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%03zu_", d);
    for (double l : lambdas) {
      SweepRun run;
      run.dataset = dataset.string();
      run.lambda = l;
      try {
        PipelineConfig cfg = base;
        cfg.solver.lambda = l;
        if (k_from_truth && has_truth) {
          const auto x = load_trajectories(dataset, cfg.interval);
          const auto k = load_ground_truth(truth_file, x.point_ids()).cluster_count();
          cfg.solver.k = k;
          cfg.k_target_follows_k = true;
        }
        const auto dir = out_dir / (prefix + dataset.stem().string()) / ("lambda_" + format_number(l));
        const RunRecord rec = run_pipeline(dataset, has_truth ? std::optional(truth_file) : std::nullopt, cfg, dir);
        run.size = rec.steps * rec.points;
        run.scores = rec.scores;
        run.ok = true;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      result.runs.push_back(std::move(run));
    }
  }

  // Bucket i covers [edge[i-1], edge[i]) with open ends at 0 and infinity.
  const std::size_t bucket_count = bucket_edges.size() + 1;
  auto bucket_of = [&](std::size_t size) {
    return static_cast<std::size_t>(std::upper_bound(bucket_edges.begin(), bucket_edges.end(), static_cast<double>(size)) -
                                    bucket_edges.begin());
  };
  std::vector<std::vector<const SweepRun*>> grouped(bucket_count);
  for (const auto& run : result.runs) {
    if (run.ok) {
      grouped[bucket_of(run.size)].push_back(&run);
    } else {
      ++result.failed;
    }
  }
  for (std::size_t b = 0; b < bucket_count; ++b) {
    if (grouped[b].empty()) continue;
    SweepBucket row;
    row.lo = b == 0 ? 0.0 : bucket_edges[b - 1];
    row.hi = b == bucket_edges.size() ? std::numeric_limits<double>::infinity() : bucket_edges[b];
    row.runs = grouped[b].size();
    std::vector<double> total, long_term;
    for (const SweepRun* run : grouped[b]) {
      if (!run->scores) continue;
      total.push_back(run->scores->total_ami);
      long_term.push_back(run->scores->long_term_ami);
    }
    row.scored = total.size();
    if (!total.empty()) {
      row.median_total_ami = median(total);
      row.mean_total_ami = mean(total);
      row.median_long_term_ami = median(long_term);
      row.mean_long_term_ami = mean(long_term);
    }
    result.aggregate.push_back(row);
  }
  {
    std::ofstream out(out_dir / "runs.csv", std::ios::binary);
    out << "dataset,lambda,size,status,total_ami,long_term_ami,error\n";
    for (const auto& run : result.runs) {
      out << run.dataset << ',' << format_number(run.lambda) << ',' << run.size << ',' << (run.ok ? "ok" : "failed") << ',';
      if (run.scores) out << format_number(run.scores->total_ami) << ',' << format_number(run.scores->long_term_ami);
      else out << ',';
      std::string err = run.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out << ',' << err << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "aggregate.csv", std::ios::binary);
    out << "size_lo,size_hi,runs,scored,median_total_ami,mean_total_ami,median_long_term_ami,mean_long_term_ami\n";
    for (const auto& row : result.aggregate) {
      out << format_number(row.lo) << ',' << format_number(row.hi) << ',' << row.runs << ',' << row.scored;
      if (row.scored > 0) {
        out << ',' << format_number(row.median_total_ami) << ',' << format_number(row.mean_total_ami) << ','
            << format_number(row.median_long_term_ami) << ',' << format_number(row.mean_long_term_ami);
      } else {
        out << ",,,,";
      }
      out << '\n';
    }
  }
  return result;
}

}  // namespace stkm
