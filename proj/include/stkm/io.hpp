#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stkm/core.hpp"

namespace stkm {

// Significant digits used for every numeric value written to text tables.
inline constexpr int kTextPrecision = 12;

std::string format_number(double value, int precision = kTextPrecision);

/// A parsed trajectory row; `position` is empty when every coordinate field
/// was blank (a missing observation).
struct TrajectoryRow {
  std::string id;
  double time = 0.0;
  std::vector<double> position;
};

/// Parse `id,t,x1..xm` text. Errors carry the 1-based line number.
std::vector<TrajectoryRow> parse_trajectory_rows(std::istream& in, std::size_t& dims);

/// Bin observations into uniform intervals of width `interval` starting at the
/// earliest time. Several observations of an id in one bin are averaged;
/// empty bins are filled by per-coordinate linear interpolation between the
/// id's nearest observed bins, with nearest-value extension at the ends.
TrajectoryTensor bin_observations(std::span<const TrajectoryRow> rows, std::size_t dims, double interval);

TrajectoryTensor load_trajectories(const std::filesystem::path& path,
                                   std::optional<double> interval = std::nullopt);
void save_trajectories(const TrajectoryTensor& x, const std::filesystem::path& path);

/// Ground truth `id,label` with -1 for unassigned, reordered to `ids`.
Partition load_ground_truth(const std::filesystem::path& path, std::span<const std::string> ids);
void save_partition(const Partition& p, std::span<const std::string> ids, const std::filesystem::path& path);

/// `id,t,label` rows, frame by frame.
void save_assignments(const AssignmentHistory& a, std::span<const std::string> ids,
                      std::span<const double> timestamps, const std::filesystem::path& path);

struct LoadedAssignments {
  AssignmentHistory history;
  std::vector<std::string> ids;
  std::vector<double> timestamps;
};
LoadedAssignments load_assignments(const std::filesystem::path& path);

/// `t,cluster,x1..xm` rows.
void save_centers(const CenterTensor& c, std::span<const double> timestamps,
                  const std::filesystem::path& path);

}  // namespace stkm
