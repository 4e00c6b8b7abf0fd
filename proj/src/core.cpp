#include "stkm/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

namespace stkm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::DuplicateObservation: return "DuplicateObservation";
    case ErrorCode::MissingObservation: return "MissingObservation";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotOnSimplex: return "NotOnSimplex";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DegenerateCluster: return "DegenerateCluster";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnfillableGap: return "UnfillableGap";
    case ErrorCode::InconsistentDimension: return "InconsistentDimension";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput:
    case ErrorCode::NonFiniteCoordinate:
    case ErrorCode::DuplicateObservation:
    case ErrorCode::MissingObservation:
    case ErrorCode::InvalidShape:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::KTooLarge:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ParseError:
    case ErrorCode::UnfillableGap:
    case ErrorCode::InconsistentDimension:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

void require_finite(const std::vector<double>& data, const char* what) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteCoordinate, std::string(what) + " contains a non-finite entry");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

TrajectoryTensor::TrajectoryTensor(std::size_t steps, std::size_t dims, std::size_t points,
                                   std::vector<double> data, std::vector<std::string> point_ids,
                                   std::vector<double> timestamps)
    : steps_(steps),
      dims_(dims),
      points_(points),
      data_(std::move(data)),
      point_ids_(std::move(point_ids)),
      timestamps_(std::move(timestamps)) {
  if (steps_ < 2) throw Error(ErrorCode::InvalidShape, "need at least 2 time steps");
  if (points_ < 1) throw Error(ErrorCode::InvalidShape, "need at least 1 object");
  if (dims_ < 1) throw Error(ErrorCode::InvalidShape, "need at least 1 spatial dimension");
  if (data_.size() != steps_ * dims_ * points_) {
    throw Error(ErrorCode::ShapeMismatch, "trajectory data size does not equal T*m*N");
  }
  if (point_ids_.size() != points_) throw Error(ErrorCode::ShapeMismatch, "point_ids size != N");
  if (timestamps_.size() != steps_) throw Error(ErrorCode::ShapeMismatch, "timestamps size != T");
  require_finite(data_, "trajectory");
  for (std::size_t t = 1; t < steps_; ++t) {
    if (!(timestamps_[t] > timestamps_[t - 1])) {
      throw Error(ErrorCode::InvalidShape, "timestamps must be strictly increasing");
    }
  }
  std::vector<std::string> sorted = point_ids_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::DuplicateObservation, "point ids are not unique");
  }
}

TrajectoryTensor TrajectoryTensor::with_default_labels(std::size_t steps, std::size_t dims,
                                                       std::size_t points,
                                                       std::vector<double> data) {
  std::vector<std::string> ids(points);
  for (std::size_t i = 0; i < points; ++i) ids[i] = std::to_string(i);
  std::vector<double> times(steps);
  for (std::size_t t = 0; t < steps; ++t) times[t] = static_cast<double>(t);
  return TrajectoryTensor(steps, dims, points, std::move(data), std::move(ids), std::move(times));
}

TrajectoryTensor TrajectoryTensor::translated(std::span<const double> offset) const {
  if (offset.size() != dims_) throw Error(ErrorCode::ShapeMismatch, "offset length != m");
  std::vector<double> shifted = data_;
  for (std::size_t n = 0; n < shifted.size(); ++n) shifted[n] += offset[n % dims_];
  return TrajectoryTensor(steps_, dims_, points_, std::move(shifted), point_ids_, timestamps_);
}

// ---------------------------------------------------------------------------

CenterTensor::CenterTensor(std::size_t steps, std::size_t dims, std::size_t clusters)
    : CenterTensor(steps, dims, clusters, std::vector<double>(steps * dims * clusters, 0.0)) {}

CenterTensor::CenterTensor(std::size_t steps, std::size_t dims, std::size_t clusters,
                           std::vector<double> data)
    : steps_(steps), dims_(dims), clusters_(clusters), data_(std::move(data)) {
  if (clusters_ < 1) throw Error(ErrorCode::InvalidShape, "need at least 1 cluster");
  if (data_.size() != steps_ * dims_ * clusters_) {
    throw Error(ErrorCode::ShapeMismatch, "center data size does not equal T*m*k");
  }
  require_finite(data_, "centers");
}

// ---------------------------------------------------------------------------

WeightTensor::WeightTensor(std::size_t steps, std::size_t clusters, std::size_t points,
                           std::vector<double> data)
    : steps_(steps), clusters_(clusters), points_(points), data_(std::move(data)) {
  if (clusters_ < 1) throw Error(ErrorCode::InvalidShape, "need at least 1 cluster");
  if (data_.size() != steps_ * clusters_ * points_) {
    throw Error(ErrorCode::ShapeMismatch, "weight data size does not equal T*k*N");
  }
  for (std::size_t c = 0; c < steps_ * points_; ++c) {
    double sum = 0.0;
    for (std::size_t j = 0; j < clusters_; ++j) {
      const double w = data_[c * clusters_ + j];
      if (!(w >= 0.0 && w <= 1.0)) {
        throw Error(ErrorCode::NotOnSimplex, "weight outside [0, 1]");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      std::ostringstream msg;
      msg << "weight column (t=" << c / points_ << ", i=" << c % points_ << ") sums to " << sum;
      throw Error(ErrorCode::NotOnSimplex, msg.str());
    }
  }
}

WeightTensor WeightTensor::uniform(std::size_t steps, std::size_t clusters, std::size_t points) {
  return WeightTensor(steps, clusters, points,
                      std::vector<double>(steps * clusters * points,
                                          1.0 / static_cast<double>(clusters)));
}

// ---------------------------------------------------------------------------

AssignmentHistory::AssignmentHistory(std::size_t steps, std::size_t points, std::size_t clusters,
                                     std::vector<int> labels)
    : steps_(steps), points_(points), clusters_(clusters), labels_(std::move(labels)) {
  if (labels_.size() != steps_ * points_) {
    throw Error(ErrorCode::ShapeMismatch, "assignment labels size != T*N");
  }
  for (int a : labels_) {
    if (a < 0 || static_cast<std::size_t>(a) >= clusters_) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "assignment label " + std::to_string(a) + " outside 0..k-1");
    }
  }
}

std::vector<int> AssignmentHistory::history(std::size_t i) const {
  std::vector<int> out(steps_);
  for (std::size_t t = 0; t < steps_; ++t) out[t] = labels_[t * points_ + i];
  return out;
}

// ---------------------------------------------------------------------------

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
  for (int l : labels_) {
    if (l < kUnassigned) {
      throw Error(ErrorCode::LabelOutOfRange, "partition label " + std::to_string(l));
    }
  }
}

std::size_t Partition::cluster_count() const {
  std::vector<int> seen;
  for (int l : labels_) {
    if (l != kUnassigned) seen.push_back(l);
  }
  std::sort(seen.begin(), seen.end());
  return static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

Partition Partition::canonical() const {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == kUnassigned) {
      out[i] = kUnassigned;
      continue;
    }
    auto [it, inserted] = remap.try_emplace(labels_[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return Partition(std::move(out));
}

// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (k < 1) fail("k must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(d_k > 1.0) || !std::isfinite(d_k)) fail("d_k must be > 1.0");
  if (max_iter < 1) fail("max_iter must be positive");
  if (!(tol >= 0.0)) fail("tol must be non-negative");
  if (distance == DistanceKind::RobustLog && !(c_const >= 1.0 && std::isfinite(c_const))) {
    fail("c_const must be >= 1 for the robust distance");
  }
}

// ---------------------------------------------------------------------------

std::string ValidationReport::summary() const {
  std::ostringstream out;
  std::size_t missing = 0, duplicate = 0;
  for (const auto& issue : issues) {
    (issue.kind == CellIssue::Kind::Missing ? missing : duplicate)++;
  }
  out << missing << " missing and " << duplicate << " duplicate cell(s)";
  std::size_t shown = 0;
  for (const auto& issue : issues) {
    if (shown++ == 8) {
      out << "; ...";
      break;
    }
    out << "; " << (issue.kind == CellIssue::Kind::Missing ? "missing" : "duplicate")
        << " (id=" << issue.id << ", t=" << issue.time << ")";
    if (issue.conflicting) out << " with conflicting positions";
  }
  return out.str();
}

ValidationOutcome validate(std::span<const Observation> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no observations");

  const std::size_t dims = records.front().position.size();
  if (dims == 0) throw Error(ErrorCode::InvalidShape, "observations have no coordinates");

  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> id_index;
  std::vector<double> times;
  for (const auto& r : records) {
    if (r.position.size() != dims) {
      throw Error(ErrorCode::InconsistentDimension, "observation for id " + r.id +
                                                        " has " + std::to_string(r.position.size()) +
                                                        " coordinates, expected " +
                                                        std::to_string(dims));
    }
    for (double v : r.position) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteCoordinate, "non-finite coordinate for id " + r.id);
      }
    }
    if (!std::isfinite(r.time)) throw Error(ErrorCode::NonFiniteCoordinate, "non-finite time");
    if (id_index.try_emplace(r.id, ids.size()).second) ids.push_back(r.id);
    times.push_back(r.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const std::size_t steps = times.size();
  const std::size_t points = ids.size();
  if (steps < 2) throw Error(ErrorCode::InvalidShape, "need at least 2 distinct time steps");

  std::map<double, std::size_t> time_index;
  for (std::size_t t = 0; t < steps; ++t) time_index.emplace(times[t], t);

  std::vector<double> data(steps * dims * points, 0.0);
  std::vector<int> filled(steps * points, 0);
  ValidationReport report;
  for (const auto& r : records) {
    const std::size_t t = time_index.at(r.time);
    const std::size_t i = id_index.at(r.id);
    const std::size_t cell = t * points + i;
    double* slot = data.data() + cell * dims;
    if (filled[cell]++ == 0) {
      std::copy(r.position.begin(), r.position.end(), slot);
      continue;
    }
    const bool conflicting = !std::equal(r.position.begin(), r.position.end(), slot);
    if (filled[cell] == 2 || conflicting) {
      // One entry per duplicated cell, upgraded if any copy conflicts.
      auto existing = std::find_if(report.issues.begin(), report.issues.end(), [&](const CellIssue& c) {
        return c.kind == CellIssue::Kind::Duplicate && c.id == r.id && c.time == r.time;
      });
      if (existing == report.issues.end()) {
        report.issues.push_back({CellIssue::Kind::Duplicate, r.id, r.time, conflicting});
      } else {
        existing->conflicting = existing->conflicting || conflicting;
      }
    }
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < points; ++i) {
      if (filled[t * points + i] == 0) {
        report.issues.push_back({CellIssue::Kind::Missing, ids[i], times[t], false});
      }
    }
  }

  ValidationOutcome outcome;
  outcome.report = std::move(report);
  if (outcome.report.issues.empty()) {
    outcome.tensor.emplace(steps, dims, points, std::move(data), std::move(ids), std::move(times));
  }
  return outcome;
}

std::vector<Observation> flatten(const TrajectoryTensor& x) {
  std::vector<Observation> out;
  out.reserve(x.steps() * x.points());
  for (std::size_t t = 0; t < x.steps(); ++t) {
    for (std::size_t i = 0; i < x.points(); ++i) {
      auto p = x.point(t, i);
      out.push_back({x.point_ids()[i], std::vector<double>(p.begin(), p.end()), x.timestamps()[t]});
    }
  }
  return out;
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view tag) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (char ch : tag) words.push_back(static_cast<unsigned char>(ch));
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace stkm
