#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stkm/datagen.hpp"
#include "stkm/io.hpp"
#include "stkm/metrics.hpp"
#include "stkm/phase2.hpp"
#include "stkm/pipeline.hpp"
#include "stkm/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raw flag values; applied on top of a config file only when given.
struct ConfigFlags {
  std::string config_path;
  std::size_t k = 0;
  double lambda = 0, d_k = 0, tol = 0, c_const = 0;
  std::size_t max_iter = 0;
  std::uint64_t seed = 0;
  std::string distance;
  std::size_t k_target = 0;
  double theta_grid_step = 0;
  std::size_t votes_first_round = 0, votes_max = 0;
  std::uint64_t phase2_seed = 0;
  double interval = 0;

  CLI::Option *o_k = nullptr, *o_lambda = nullptr, *o_d_k = nullptr, *o_tol = nullptr, *o_c_const = nullptr;
  CLI::Option *o_max_iter = nullptr, *o_seed = nullptr, *o_distance = nullptr, *o_interval = nullptr;
  CLI::Option *o_config = nullptr, *o_k_target = nullptr, *o_step = nullptr, *o_first = nullptr;
  CLI::Option *o_max = nullptr, *o_p2seed = nullptr;
};

void add_solver_flags(CLI::App* app, ConfigFlags& f) {
  f.o_config = app->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  f.o_k = app->add_option("--k", f.k, "number of clusters (default 2)");
  f.o_lambda = app->add_option("--lambda", f.lambda, "temporal penalty in [0,1] (default 0.8)");
  f.o_d_k = app->add_option("--d_k", f.d_k, "weight step denominator > 1 (default 1.1)");
  f.o_max_iter = app->add_option("--max_iter", f.max_iter, "sweep limit (default 200)");
  f.o_tol = app->add_option("--tol", f.tol, "relative objective change to stop (default 1e-6)");
  f.o_seed = app->add_option("--seed", f.seed, "solver seed (default 0)");
  f.o_distance = app->add_option("--distance", f.distance, "squared_euclidean | robust_log");
  f.o_c_const = app->add_option("--c_const", f.c_const, "robust distance constant >= 1 (default 1)");
  f.o_interval = app->add_option("--interval", f.interval, "time bin width for irregular input");
}

void add_phase2_flags(CLI::App* app, ConfigFlags& f) {
  f.o_k_target = app->add_option("--k_target", f.k_target, "long-term cluster count (default k)");
  f.o_step = app->add_option("--theta_grid_step", f.theta_grid_step, "theta grid spacing (default 0.01)");
  f.o_first = app->add_option("--votes_first_round", f.votes_first_round, "initial shuffled runs (default 5)");
  f.o_max = app->add_option("--votes_max", f.votes_max, "run limit (default 20)");
  f.o_p2seed = app->add_option("--phase2_seed", f.phase2_seed, "phase-2 shuffle seed (default 0)");
}

stkm::PipelineConfig resolve(const ConfigFlags& f) {
  stkm::PipelineConfig cfg;
  if (f.o_config && f.o_config->count()) cfg = stkm::load_pipeline_config(f.config_path);
  auto given = [](CLI::Option* o) { return o && o->count() > 0; };
  if (given(f.o_k)) cfg.solver.k = f.k;
  if (given(f.o_lambda)) cfg.solver.lambda = f.lambda;
  if (given(f.o_d_k)) cfg.solver.d_k = f.d_k;
  if (given(f.o_max_iter)) cfg.solver.max_iter = f.max_iter;
  if (given(f.o_tol)) cfg.solver.tol = f.tol;
  if (given(f.o_seed)) cfg.solver.seed = f.seed;
  if (given(f.o_distance)) cfg.solver.distance = stkm::parse_distance(f.distance);
  if (given(f.o_c_const)) cfg.solver.c_const = f.c_const;
  if (given(f.o_interval)) cfg.interval = f.interval;
  if (given(f.o_k_target)) {
    cfg.phase2.k_target = f.k_target;
    cfg.k_target_follows_k = false;
  }
  if (given(f.o_step)) cfg.phase2.theta_grid_step = f.theta_grid_step;
  if (given(f.o_first)) cfg.phase2.votes_first_round = f.votes_first_round;
  if (given(f.o_max)) cfg.phase2.votes_max = f.votes_max;
  if (given(f.o_p2seed)) cfg.phase2.seed = f.phase2_seed;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw stkm::Error(stkm::ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void print(const json& doc) { std::cout << doc.dump(2) << '\n'; }

struct GenerateArgs {
  stkm::ScenarioConfig sc;
  std::string motion = "linear";
  double outlier_box = 0.0;
  std::string out;
};

int cmd_generate(GenerateArgs& g, CLI::Option* box_opt) {
  g.sc.center_motion = stkm::parse_center_motion(g.motion);
  if (box_opt->count()) {
    g.sc.outlier_box_lo.assign(g.sc.m, -g.outlier_box);
    g.sc.outlier_box_hi.assign(g.sc.m, g.outlier_box);
  }
  const stkm::Scenario s = stkm::generate(g.sc);
  const fs::path stem(g.out);
  auto with = [&](const char* suffix) {
    fs::path p = stem;
    p += suffix;
    return p;
  };
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  stkm::save_trajectories(s.trajectories, with(".csv"));
  stkm::save_partition(s.ground_truth, s.trajectories.point_ids(), with(".truth.csv"));
  stkm::save_centers(s.center_paths, s.trajectories.timestamps(), with(".centers.csv"));
  print({{"trajectories", with(".csv").string()},
         {"truth", with(".truth.csv").string()},
         {"centers", with(".centers.csv").string()},
         {"T", s.trajectories.steps()},
         {"N", s.trajectories.points()}});
  return 0;
}

int cmd_fit(const ConfigFlags& f, const std::string& input, const std::string& out_dir) {
  const auto cfg = resolve(f);
  const auto x = stkm::load_trajectories(input, cfg.interval);
  const auto r = stkm::fit(x, cfg.solver);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  stkm::save_centers(r.centers, x.timestamps(), dir / "centers.csv");
  stkm::save_assignments(stkm::extract_assignments(r.weights), x.point_ids(), x.timestamps(),
                         dir / "assignments.csv");
  {
    auto out = open_out(dir / "objective.csv");
    out << "iteration,objective\n";
    for (std::size_t n = 0; n < r.objective_trace.size(); ++n) {
      out << n + 1 << ',' << stkm::format_number(r.objective_trace[n]) << '\n';
    }
  }
  {
    auto out = open_out(dir / "weights.csv");
    out << "id,t,cluster,weight\n";
    for (std::size_t t = 0; t < x.steps(); ++t) {
      for (std::size_t i = 0; i < x.points(); ++i) {
        for (std::size_t j = 0; j < r.weights.clusters(); ++j) {
          out << x.point_ids()[i] << ',' << stkm::format_number(x.timestamps()[t]) << ',' << j << ','
              << stkm::format_number(r.weights(t, j, i)) << '\n';
        }
      }
    }
  }
  print({{"iterations", r.iterations},
         {"converged", r.converged},
         {"final_objective", r.objective_trace.empty() ? 0.0 : r.objective_trace.back()},
         {"out", dir.string()}});
  return 0;
}

int cmd_phase2(const ConfigFlags& f, const std::string& input, const std::string& out) {
  auto cfg = resolve(f);
  const auto loaded = stkm::load_assignments(input);
  if (cfg.k_target_follows_k && !f.o_k->count() && !(f.o_config && f.o_config->count())) {
    throw stkm::Error(stkm::ErrorCode::InvalidConfig, "phase2 needs --k_target (or --k)");
  }
  const auto res = stkm::long_term_clusters(loaded.history, cfg.resolved_phase2());
  stkm::save_partition(res.partition, loaded.ids, out);
  print({{"theta", res.theta},
         {"runs", res.runs},
         {"votes", res.votes},
         {"clusters", res.partition.cluster_count()},
         {"out", out}});
  return 0;
}

int cmd_evaluate(const std::string& assignments, const std::string& partition, const std::string& truth) {
  if (assignments.empty() && partition.empty()) {
    throw stkm::Error(stkm::ErrorCode::InvalidConfig, "evaluate needs --assignments and/or --partition");
  }
  json doc;
  std::optional<std::vector<std::string>> ids;
  if (!assignments.empty()) {
    const auto loaded = stkm::load_assignments(assignments);
    ids = loaded.ids;
    doc["total_ami"] = stkm::total_ami(loaded.history, stkm::load_ground_truth(truth, loaded.ids));
  }
  if (!partition.empty()) {
    // Partition ids are read in file order.
    std::vector<std::string> pids;
    {
      std::ifstream in(partition);
      if (!in) throw stkm::Error(stkm::ErrorCode::Io, "cannot open " + partition);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        pids.push_back(line.substr(0, line.find(',')));
      }
    }
    const auto p = stkm::load_ground_truth(partition, pids);
    doc["long_term_ami"] = stkm::long_term_ami(p, stkm::load_ground_truth(truth, pids));
  }
  print(doc);
  return 0;
}

int cmd_run(const ConfigFlags& f, const std::string& input, const std::string& truth, const std::string& out) {
  const auto cfg = resolve(f);
  std::optional<fs::path> truth_path;
  if (!truth.empty()) truth_path = truth;
  const auto rec = stkm::run_pipeline(input, truth_path, cfg, out);
  json doc = {{"iterations", rec.iterations},
              {"converged", rec.converged},
              {"final_objective", rec.final_objective},
              {"theta", rec.theta},
              {"long_term_clusters", rec.long_term.cluster_count()},
              {"out", out}};
  if (rec.scores) doc["metrics"] = {{"total_ami", rec.scores->total_ami}, {"long_term_ami", rec.scores->long_term_ami}};
  print(doc);
  return 0;
}

int cmd_sweep(const ConfigFlags& f, const std::vector<std::string>& datasets, const std::vector<double>& lambdas,
              const std::string& out, bool k_from_truth) {
  const auto cfg = resolve(f);
  std::vector<fs::path> paths(datasets.begin(), datasets.end());
  const auto res = stkm::sweep(paths, lambdas, cfg, out, k_from_truth);
  for (const auto& run : res.runs) {
    if (!run.ok) std::cerr << "failed: " << run.dataset << " lambda=" << run.lambda << ": " << run.error << '\n';
  }
  print({{"runs", res.runs.size()}, {"failed", res.failed}, {"buckets", res.aggregate.size()}, {"out", out}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal k-means"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a synthetic moving-cluster scenario");
  g->add_option("--out", gen.out, "output stem; writes <stem>.csv, <stem>.truth.csv, <stem>.centers.csv")->required();
  g->add_option("--n_clusters", gen.sc.n_clusters, "number of clusters (default 3)");
  g->add_option("--points_per_cluster", gen.sc.points_per_cluster, "one size, or one per cluster (default 30)");
  g->add_option("--T", gen.sc.T, "time steps (default 50)");
  g->add_option("--m", gen.sc.m, "dimensions (default 2)");
  g->add_option("--center_motion", gen.motion, "linear | random_walk | merge_split");
  g->add_option("--step_sigma", gen.sc.step_sigma, "random_walk step deviation (default 0.5)");
  g->add_option("--meet_time", gen.sc.meet_time, "merge_split: first shared step (default 8)");
  g->add_option("--part_time", gen.sc.part_time, "merge_split: first separate step (default 12)");
  g->add_option("--spread_sigma", gen.sc.spread_sigma, "within-cluster deviation (default 1)");
  g->add_option("--separation", gen.sc.separation, "distance between neighboring clusters (default 20)");
  g->add_option("--speed", gen.sc.speed, "drift per step (default 0.2)");
  g->add_option("--outlier_fraction", gen.sc.outlier_fraction, "fraction of outlier points (default 0)");
  auto* box_opt = g->add_option("--outlier_box", gen.outlier_box, "outliers uniform in [-b, b]^m");
  g->add_option("--seed", gen.sc.seed, "generator seed (default 0)");

  ConfigFlags fit_flags;
  std::string fit_input, fit_out;
  auto* f = app.add_subcommand("fit", "fit centers and weights; write centers, weights, assignments");
  f->add_option("--input", fit_input, "trajectory file id,t,x1..xm")->required()->check(CLI::ExistingFile);
  f->add_option("--out", fit_out, "output directory")->required();
  add_solver_flags(f, fit_flags);

  ConfigFlags p2_flags;
  std::string p2_input, p2_out;
  auto* p = app.add_subcommand("phase2", "long-term clusters from an assignment history");
  p->add_option("--input", p2_input, "assignments file id,t,label")->required()->check(CLI::ExistingFile);
  p->add_option("--out", p2_out, "partition file id,label")->required();
  add_solver_flags(p, p2_flags);
  add_phase2_flags(p, p2_flags);

  std::string ev_assign, ev_part, ev_truth;
  auto* e = app.add_subcommand("evaluate", "AMI of assignments and/or a partition against ground truth");
  e->add_option("--assignments", ev_assign, "assignments file id,t,label")->check(CLI::ExistingFile);
  e->add_option("--partition", ev_part, "partition file id,label")->check(CLI::ExistingFile);
  e->add_option("--truth", ev_truth, "ground truth id,label")->required()->check(CLI::ExistingFile);

  ConfigFlags run_flags;
  std::string run_input, run_truth, run_out;
  auto* r = app.add_subcommand("run", "full pipeline: load, fit, phase 2, metrics, export");
  r->add_option("--input", run_input, "trajectory file id,t,x1..xm")->required()->check(CLI::ExistingFile);
  r->add_option("--truth", run_truth, "ground truth id,label")->check(CLI::ExistingFile);
  r->add_option("--out", run_out, "output directory")->required();
  add_solver_flags(r, run_flags);
  add_phase2_flags(r, run_flags);

  ConfigFlags sw_flags;
  std::vector<std::string> sw_datasets;
  std::vector<double> sw_lambdas{0.6, 0.8, 1.0};
  std::string sw_out;
  bool sw_k_from_truth = false;
  auto* s = app.add_subcommand("sweep", "run every (dataset, lambda) pair and aggregate AMI by size");
  s->add_option("--datasets", sw_datasets, "trajectory files; truth read from <stem>.truth.csv");
  s->add_option("--lambdas", sw_lambdas, "lambda grid (default 0.6 0.8 1.0)");
  s->add_option("--out", sw_out, "output directory")->required();
  s->add_flag("--k-from-truth", sw_k_from_truth, "set k and k_target from each ground truth");
  add_solver_flags(s, sw_flags);
  add_phase2_flags(s, sw_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*g) return cmd_generate(gen, box_opt);
    if (*f) return cmd_fit(fit_flags, fit_input, fit_out);
    if (*p) return cmd_phase2(p2_flags, p2_input, p2_out);
    if (*e) return cmd_evaluate(ev_assign, ev_part, ev_truth);
    if (*r) return cmd_run(run_flags, run_input, run_truth, run_out);
    if (*s) return cmd_sweep(sw_flags, sw_datasets, sw_lambdas, sw_out, sw_k_from_truth);
  } catch (const stkm::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return stkm::is_validation_error(err.code()) ? 1 : 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
