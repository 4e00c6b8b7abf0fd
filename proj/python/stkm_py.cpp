#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <optional>

#include "stkm/datagen.hpp"
#include "stkm/io.hpp"
#include "stkm/metrics.hpp"
#include "stkm/phase2.hpp"
#include "stkm/pipeline.hpp"
#include "stkm/solver.hpp"

namespace py = pybind11;
using namespace stkm;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I32 = py::array_t<int, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_array(const std::vector<T>& data, std::vector<py::ssize_t> shape) {
  py::array_t<T> out(shape);
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

void require_dims(const py::array& a, py::ssize_t ndim, const char* name) {
  if (a.ndim() != ndim) {
    throw Error(ErrorCode::ShapeMismatch, std::string(name) + " must have " + std::to_string(ndim) + " dimensions");
  }
}

// positions: (T, N, m)
TrajectoryTensor tensor_from(const F64& positions) {
  require_dims(positions, 3, "positions");
  const auto steps = static_cast<std::size_t>(positions.shape(0));
  const auto points = static_cast<std::size_t>(positions.shape(1));
  const auto dims = static_cast<std::size_t>(positions.shape(2));
  std::vector<double> data(positions.data(), positions.data() + positions.size());
  return TrajectoryTensor::with_default_labels(steps, dims, points, std::move(data));
}

// centers: (T, k, m)
CenterTensor centers_from(const F64& centers) {
  require_dims(centers, 3, "centers");
  std::vector<double> data(centers.data(), centers.data() + centers.size());
  return CenterTensor(static_cast<std::size_t>(centers.shape(0)), static_cast<std::size_t>(centers.shape(2)),
                      static_cast<std::size_t>(centers.shape(1)), std::move(data));
}

// weights: (T, N, k)
WeightTensor weights_from(const F64& weights) {
  require_dims(weights, 3, "weights");
  std::vector<double> data(weights.data(), weights.data() + weights.size());
  return WeightTensor(static_cast<std::size_t>(weights.shape(0)), static_cast<std::size_t>(weights.shape(2)),
                      static_cast<std::size_t>(weights.shape(1)), std::move(data));
}

// assignments: (T, N)
AssignmentHistory history_from(const I32& assignments) {
  require_dims(assignments, 2, "assignments");
  std::vector<int> labels(assignments.data(), assignments.data() + assignments.size());
  const int top = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  return AssignmentHistory(static_cast<std::size_t>(assignments.shape(0)),
                           static_cast<std::size_t>(assignments.shape(1)), static_cast<std::size_t>(top) + 1,
                           std::move(labels));
}

std::vector<int> labels_from(const I32& labels) {
  require_dims(labels, 1, "labels");
  return {labels.data(), labels.data() + labels.size()};
}

py::array_t<double> centers_to(const CenterTensor& c) {
  return to_array(c.data(), {static_cast<py::ssize_t>(c.steps()), static_cast<py::ssize_t>(c.clusters()),
                             static_cast<py::ssize_t>(c.dims())});
}

py::dict fit_to(const FitResult& r) {
  py::dict out;
  out["centers"] = centers_to(r.centers);
  out["weights"] = to_array(r.weights.data(), {static_cast<py::ssize_t>(r.weights.steps()),
                                               static_cast<py::ssize_t>(r.weights.points()),
                                               static_cast<py::ssize_t>(r.weights.clusters())});
  out["objective_trace"] = to_array(r.objective_trace, {static_cast<py::ssize_t>(r.objective_trace.size())});
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  return out;
}

SolverConfig solver_config(std::size_t k, double lam, double d_k, std::size_t max_iter, double tol,
                           std::uint64_t seed, const std::string& distance, double c_const) {
  SolverConfig cfg;
  cfg.k = k;
  cfg.lambda = lam;
  cfg.d_k = d_k;
  cfg.max_iter = max_iter;
  cfg.tol = tol;
  cfg.seed = seed;
  cfg.distance = parse_distance(distance);
  cfg.c_const = c_const;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_stkm, m) {
  m.doc() = "Spatiotemporal k-means core";
  py::register_exception<Error>(m, "StkmError", PyExc_ValueError);

  m.def(
      "generate",
      [](std::size_t n_clusters, std::vector<std::size_t> points_per_cluster, std::size_t T, std::size_t dims,
         const std::string& center_motion, double spread_sigma, double separation, double outlier_fraction,
         std::uint64_t seed) {
        ScenarioConfig sc;
        sc.n_clusters = n_clusters;
        sc.points_per_cluster = std::move(points_per_cluster);
        sc.T = T;
        sc.m = dims;
        sc.center_motion = parse_center_motion(center_motion);
        sc.spread_sigma = spread_sigma;
        sc.separation = separation;
        sc.outlier_fraction = outlier_fraction;
        sc.seed = seed;
        const auto s = generate(sc);
        const auto& x = s.trajectories;
        py::dict out;
        out["positions"] = to_array(x.data(), {static_cast<py::ssize_t>(x.steps()), static_cast<py::ssize_t>(x.points()),
                                               static_cast<py::ssize_t>(x.dims())});
        out["truth"] = to_array(s.ground_truth.labels(), {static_cast<py::ssize_t>(s.ground_truth.size())});
        out["centers"] = centers_to(s.center_paths);
        return out;
      },
      py::arg("n_clusters") = 3, py::arg("points_per_cluster") = std::vector<std::size_t>{30}, py::arg("T") = 50,
      py::arg("m") = 2, py::arg("center_motion") = "linear", py::arg("spread_sigma") = 1.0,
      py::arg("separation") = 20.0, py::arg("outlier_fraction") = 0.0, py::arg("seed") = 0,
      "Synthetic moving clusters. Returns positions (T, N, m), truth (N,) and centers (T, k, m).");

  m.def(
      "fit",
      [](const F64& positions, std::size_t k, double lam, double d_k, std::size_t max_iter, double tol,
         std::uint64_t seed, const std::string& distance, double c_const) {
        const auto cfg = solver_config(k, lam, d_k, max_iter, tol, seed, distance, c_const);
        return fit_to(fit(tensor_from(positions), cfg));
      },
      py::arg("positions"), py::arg("k") = 2, py::arg("lam") = 0.8, py::arg("d_k") = 1.1, py::arg("max_iter") = 200,
      py::arg("tol") = 1e-6, py::arg("seed") = 0, py::arg("distance") = "squared_euclidean",
      py::arg("c_const") = 1.0, "Alternate weight and center updates on positions (T, N, m).");

  m.def(
      "fit_robust",
      [](const F64& positions, std::size_t k, double lam, double d_k, std::size_t max_iter, double tol,
         std::uint64_t seed, double c_const) {
        const auto cfg = solver_config(k, lam, d_k, max_iter, tol, seed, "robust_log", c_const);
        return fit_to(fit_robust(tensor_from(positions), cfg));
      },
      py::arg("positions"), py::arg("k") = 2, py::arg("lam") = 0.8, py::arg("d_k") = 1.1, py::arg("max_iter") = 200,
      py::arg("tol") = 1e-6, py::arg("seed") = 0, py::arg("c_const") = 1.0);

  m.def(
      "objective",
      [](const F64& positions, const F64& centers, const F64& weights, double lam) {
        return objective(tensor_from(positions), centers_from(centers), weights_from(weights), lam);
      },
      py::arg("positions"), py::arg("centers"), py::arg("weights"), py::arg("lam"));

  m.def(
      "project_simplex",
      [](const F64& v) {
        require_dims(v, 1, "v");
        const auto p = project_simplex(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
        return to_array(p, {static_cast<py::ssize_t>(p.size())});
      },
      py::arg("v"), "Euclidean projection onto the probability simplex.");

  m.def(
      "extract_assignments",
      [](const F64& weights) {
        const auto a = extract_assignments(weights_from(weights));
        return to_array(a.labels(), {static_cast<py::ssize_t>(a.steps()), static_cast<py::ssize_t>(a.points())});
      },
      py::arg("weights"), "Hard labels (T, N) from weights (T, N, k).");

  m.def(
      "similarity_matrix",
      [](const I32& assignments) {
        const auto s = similarity_matrix(history_from(assignments));
        const auto n = s.points();
        py::array_t<double> out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(n)});
        auto view = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = s(i, j);
        }
        return out;
      },
      py::arg("assignments"));

  m.def(
      "long_term_clusters",
      [](const I32& assignments, std::size_t k_target, double theta_grid_step, std::size_t votes_first_round,
         std::size_t votes_max, std::uint64_t seed) {
        Phase2Config cfg;
        cfg.k_target = k_target;
        cfg.theta_grid_step = theta_grid_step;
        cfg.votes_first_round = votes_first_round;
        cfg.votes_max = votes_max;
        cfg.seed = seed;
        const auto r = long_term_clusters(history_from(assignments), cfg);
        py::dict out;
        out["partition"] = to_array(r.partition.labels(), {static_cast<py::ssize_t>(r.partition.size())});
        out["theta"] = r.theta;
        out["runs"] = r.runs;
        out["votes"] = r.votes;
        return out;
      },
      py::arg("assignments"), py::arg("k_target"), py::arg("theta_grid_step") = 0.01,
      py::arg("votes_first_round") = 5, py::arg("votes_max") = 20, py::arg("seed") = 0);

  m.def(
      "ami", [](const I32& a, const I32& b) { return ami(labels_from(a), labels_from(b)); }, py::arg("labels_a"),
      py::arg("labels_b"), "Adjusted mutual information, arithmetic-mean normalization.");

  m.def(
      "total_ami",
      [](const I32& assignments, const I32& truth) {
        return total_ami(history_from(assignments), Partition(labels_from(truth)));
      },
      py::arg("assignments"), py::arg("truth"));

  m.def(
      "long_term_ami",
      [](const I32& predicted, const I32& truth) {
        return long_term_ami(Partition(labels_from(predicted)), Partition(labels_from(truth)));
      },
      py::arg("predicted"), py::arg("truth"));

  m.def(
      "load_trajectories",
      [](const std::filesystem::path& path, std::optional<double> interval) {
        const auto x = load_trajectories(path, interval);
        py::dict out;
        out["positions"] = to_array(x.data(), {static_cast<py::ssize_t>(x.steps()), static_cast<py::ssize_t>(x.points()),
                                               static_cast<py::ssize_t>(x.dims())});
        out["ids"] = x.point_ids();
        out["times"] = to_array(x.timestamps(), {static_cast<py::ssize_t>(x.steps())});
        return out;
      },
      py::arg("path"), py::arg("interval") = py::none());
}
