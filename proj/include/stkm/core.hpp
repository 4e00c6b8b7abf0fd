#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stkm {

enum class ErrorCode {
  EmptyInput,
  NonFiniteCoordinate,
  DuplicateObservation,
  MissingObservation,
  InvalidShape,
  ShapeMismatch,
  LengthMismatch,
  NotOnSimplex,
  LabelOutOfRange,
  KTooLarge,
  DegenerateCluster,
  EmptyCluster,
  InvalidConfig,
  ParseError,
  UnfillableGap,
  InconsistentDimension,
  Io,
};

const char* to_string(ErrorCode code);

// True for errors caused by bad user input or configuration (CLI exit code 1).
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Positions of N objects in m dimensions over T uniform time steps.
///
/// Storage is point-major within a frame so that x_{t,i} is a contiguous span
/// of length m. Time is indexed 0..T-1; the original timestamps are kept only
/// for I/O.
class TrajectoryTensor {
 public:
  TrajectoryTensor(std::size_t steps, std::size_t dims, std::size_t points,
                   std::vector<double> data, std::vector<std::string> point_ids,
                   std::vector<double> timestamps);

  // Ids "0".."N-1" and timestamps 0..T-1.
  static TrajectoryTensor with_default_labels(std::size_t steps, std::size_t dims,
                                              std::size_t points, std::vector<double> data);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t points() const noexcept { return points_; }

  std::span<const double> point(std::size_t t, std::size_t i) const {
    return {data_.data() + (t * points_ + i) * dims_, dims_};
  }
  double operator()(std::size_t t, std::size_t d, std::size_t i) const {
    return data_[(t * points_ + i) * dims_ + d];
  }

  const std::vector<double>& data() const noexcept { return data_; }
  const std::vector<std::string>& point_ids() const noexcept { return point_ids_; }
  const std::vector<double>& timestamps() const noexcept { return timestamps_; }

  // Copy with every position shifted by `offset` (length m).
  TrajectoryTensor translated(std::span<const double> offset) const;

  bool operator==(const TrajectoryTensor&) const = default;

 private:
  std::size_t steps_;
  std::size_t dims_;
  std::size_t points_;
  std::vector<double> data_;
  std::vector<std::string> point_ids_;
  std::vector<double> timestamps_;
};

/// Cluster centers c_{t,j}, shape T x m x k.
class CenterTensor {
 public:
  CenterTensor(std::size_t steps, std::size_t dims, std::size_t clusters);
  CenterTensor(std::size_t steps, std::size_t dims, std::size_t clusters,
               std::vector<double> data);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t clusters() const noexcept { return clusters_; }

  std::span<const double> center(std::size_t t, std::size_t j) const {
    return {data_.data() + (t * clusters_ + j) * dims_, dims_};
  }
  std::span<double> center(std::size_t t, std::size_t j) {
    return {data_.data() + (t * clusters_ + j) * dims_, dims_};
  }
  double operator()(std::size_t t, std::size_t d, std::size_t j) const {
    return data_[(t * clusters_ + j) * dims_ + d];
  }

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const CenterTensor&) const = default;

 private:
  std::size_t steps_;
  std::size_t dims_;
  std::size_t clusters_;
  std::vector<double> data_;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Soft memberships w_{t,j,i}, shape T x k x N. Every column W_{t,:,i} lies on
/// the probability simplex; construction rejects anything else.
class WeightTensor {
 public:
  WeightTensor(std::size_t steps, std::size_t clusters, std::size_t points,
               std::vector<double> data);

  static WeightTensor uniform(std::size_t steps, std::size_t clusters, std::size_t points);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t clusters() const noexcept { return clusters_; }
  std::size_t points() const noexcept { return points_; }

  std::span<const double> column(std::size_t t, std::size_t i) const {
    return {data_.data() + (t * points_ + i) * clusters_, clusters_};
  }
  double operator()(std::size_t t, std::size_t j, std::size_t i) const {
    return data_[(t * points_ + i) * clusters_ + j];
  }

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const WeightTensor&) const = default;

 private:
  std::size_t steps_;
  std::size_t clusters_;
  std::size_t points_;
  std::vector<double> data_;
};

/// Hard label a_{t,i} in {0..k-1} per point per time step.
class AssignmentHistory {
 public:
  AssignmentHistory(std::size_t steps, std::size_t points, std::size_t clusters,
                    std::vector<int> labels);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t points() const noexcept { return points_; }
  std::size_t clusters() const noexcept { return clusters_; }

  int operator()(std::size_t t, std::size_t i) const { return labels_[t * points_ + i]; }
  std::vector<int> history(std::size_t i) const;

  // Row-major T x N.
  const std::vector<int>& labels() const noexcept { return labels_; }

  bool operator==(const AssignmentHistory&) const = default;

 private:
  std::size_t steps_;
  std::size_t points_;
  std::size_t clusters_;
  std::vector<int> labels_;
};

inline constexpr int kUnassigned = -1;

/// A single labeling of N points. kUnassigned marks points outside every
/// cluster (outliers in ground truth).
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  // Number of distinct non-sentinel labels.
  std::size_t cluster_count() const;

  // Relabel clusters 0,1,2,... in order of their smallest member index.
  Partition canonical() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<int> labels_;
};

enum class DistanceKind { SquaredEuclidean, RobustLog };

struct SolverConfig {
  std::size_t k = 2;
  double lambda = 0.8;
  double d_k = 1.1;
  std::size_t max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  DistanceKind distance = DistanceKind::SquaredEuclidean;
  double c_const = 1.0;

  // Throws Error(InvalidConfig) naming the offending field.
  void validate() const;
};

struct Observation {
  std::string id;
  std::vector<double> position;
  double time = 0.0;
};

struct CellIssue {
  enum class Kind { Missing, Duplicate };
  Kind kind;
  std::string id;
  double time;
  bool conflicting = false;  // duplicate with differing positions
};

struct ValidationReport {
  std::vector<CellIssue> issues;
  std::string summary() const;
};

struct ValidationOutcome {
  std::optional<TrajectoryTensor> tensor;
  ValidationReport report;
  bool ok() const noexcept { return tensor.has_value(); }
};

/// Assemble raw observations into a dense tensor. Ids are ordered by first
/// appearance and times ascending. Missing or duplicated (id, time) cells
/// produce a report instead of a tensor.
ValidationOutcome validate(std::span<const Observation> records);

/// Inverse of validate: one observation per (t, i), frame by frame.
std::vector<Observation> flatten(const TrajectoryTensor& x);

/// Generator for one consumer of a user seed. Different tags give
/// decorrelated streams for the same seed.
std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view tag);

}  // namespace stkm
