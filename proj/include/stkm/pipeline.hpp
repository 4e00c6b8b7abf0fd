#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stkm/core.hpp"
#include "stkm/phase2.hpp"
#include "stkm/solver.hpp"

namespace stkm {

/// Solver, Phase-2 and preprocessing settings for one run.
///
/// File form (JSON, every key optional, unknown keys rejected):
///   { "solver": { "k", "lambda", "d_k", "max_iter", "tol", "seed",
///                 "distance": "squared_euclidean" | "robust_log", "c_const" },
///     "phase2": { "k_target", "theta_grid_step", "votes_first_round",
///                 "votes_max", "seed" },
///     "interval": <bin width> }
/// An absent phase2.k_target follows solver.k.
struct PipelineConfig {
  SolverConfig solver;
  Phase2Config phase2;
  bool k_target_follows_k = true;
  std::optional<double> interval;

  void validate() const;
  // k_target resolved against solver.k.
  Phase2Config resolved_phase2() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);

const char* to_string(DistanceKind kind);
DistanceKind parse_distance(const std::string& name);

struct StageTimings {
  double load_ms = 0.0;
  double fit_ms = 0.0;
  double phase2_ms = 0.0;
  double metrics_ms = 0.0;
};

struct Scores {
  double total_ami = 0.0;
  double long_term_ami = 0.0;
};

struct RunRecord {
  std::string dataset;
  PipelineConfig config;
  std::size_t steps = 0, dims = 0, points = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double final_objective = 0.0;
  std::vector<double> objective_trace;
  std::vector<std::string> point_ids;
  std::vector<double> timestamps;
  CenterTensor centers{2, 1, 1};
  std::vector<int> assignments;  // T x N row-major
  Partition long_term;
  double theta = 0.0;
  std::size_t phase2_runs = 0;
  std::size_t phase2_votes = 0;
  std::optional<Scores> scores;
  StageTimings timings;

  // The persisted document; timings live under "timings_ms".
  nlohmann::json to_json() const;
};

/// Load, fit, extract assignments, derive long-term clusters and, when
/// ground truth is given, score. Writes run.json plus plot tables into
/// `out_dir` (positions, centers, long-term centers, objective, assignments,
/// ribbons, partition). Module errors are rethrown prefixed with the stage.
RunRecord run_pipeline(const std::filesystem::path& dataset,
                       const std::optional<std::filesystem::path>& ground_truth,
                       const PipelineConfig& config, const std::filesystem::path& out_dir);

/// Sibling ground-truth file for a dataset: `<stem>.truth.csv`.
std::filesystem::path truth_path_for(const std::filesystem::path& dataset);

struct SweepRun {
  std::string dataset;
  double lambda = 0.0;
  std::size_t size = 0;  // T * N
  bool ok = false;
  std::string error;
  std::optional<Scores> scores;
};

struct SweepBucket {
  double lo = 0.0, hi = 0.0;  // size range [lo, hi)
  std::size_t runs = 0, scored = 0;
  double median_total_ami = 0.0, mean_total_ami = 0.0;
  double median_long_term_ami = 0.0, mean_long_term_ami = 0.0;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<SweepBucket> aggregate;
  std::size_t failed = 0;
};

inline const std::vector<double> kDefaultSizeBuckets{800, 3000, 6000, 10000, 15000, 20000, 25000, 30000, 35000};

/// run_pipeline for every (dataset, lambda) pair into out_dir/<stem>/lambda_<value>/,
/// then aggregate median and mean AMIs per dataset-size bucket (T*N) into
/// runs.csv and aggregate.csv. A failing run is recorded and the sweep goes on.
/// With k_from_truth, k and k_target are set to the ground-truth cluster count.
SweepResult sweep(std::span<const std::filesystem::path> datasets, std::span<const double> lambdas,
                  const PipelineConfig& base, const std::filesystem::path& out_dir,
                  bool k_from_truth = false,
                  std::span<const double> bucket_edges = kDefaultSizeBuckets);

}  // namespace stkm
