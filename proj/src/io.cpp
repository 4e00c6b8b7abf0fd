#include "stkm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace stkm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& field, std::size_t line, const char* what) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  // Accept a leading '+', which from_chars rejects.
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    parse_fail(line, std::string("cannot parse ") + what + " '" + field + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteCoordinate, "line " + std::to_string(line) + ": non-finite " + what);
  }
  return value;
}

int parse_int(const std::string& field, std::size_t line, const char* what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    parse_fail(line, std::string("cannot parse ") + what + " '" + field + "'");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

// Reads the header line, skipping blank lines; returns its fields.
std::vector<std::string> read_header(std::istream& in, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return split_fields(line);
  }
  throw Error(ErrorCode::EmptyInput, "file has no header");
}

}  // namespace

std::string format_number(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, value);
  return buf;
}

std::vector<TrajectoryRow> parse_trajectory_rows(std::istream& in, std::size_t& dims) {
  std::size_t line_no = 0;
  const auto header = read_header(in, line_no);
  if (header.size() < 3 || header[0] != "id" || header[1] != "t") {
    parse_fail(line_no, "expected header 'id,t,x1,...,xm'");
  }
  dims = header.size() - 2;

  std::vector<TrajectoryRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::InconsistentDimension, "line " + std::to_string(line_no) + ": expected " +
                                                        std::to_string(header.size()) + " fields, found " +
                                                        std::to_string(fields.size()));
    }
    if (fields[0].empty()) parse_fail(line_no, "empty id");
    TrajectoryRow row{fields[0], parse_double(fields[1], line_no, "time"), {}};
    const bool blank = std::all_of(fields.begin() + 2, fields.end(), [](const std::string& f) { return f.empty(); });
    if (!blank) {
      row.position.reserve(dims);
      for (std::size_t d = 0; d < dims; ++d) row.position.push_back(parse_double(fields[2 + d], line_no, "coordinate"));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no observations");
  return rows;
}

TrajectoryTensor bin_observations(std::span<const TrajectoryRow> rows, std::size_t dims, double interval) {
  if (!(interval > 0.0 && std::isfinite(interval))) {
    throw Error(ErrorCode::InvalidConfig, "interval must be a positive bin width");
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no observations");
  double t_min = rows.front().time, t_max = rows.front().time;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> id_index;
  for (const auto& r : rows) {
    t_min = std::min(t_min, r.time);
    t_max = std::max(t_max, r.time);
    if (id_index.try_emplace(r.id, ids.size()).second) ids.push_back(r.id);
  }
  const auto bins = static_cast<std::size_t>(std::floor((t_max - t_min) / interval + 1e-9)) + 1;
  if (bins < 2) throw Error(ErrorCode::InvalidShape, "binning produced fewer than 2 time steps");
  const std::size_t n = ids.size();

  std::vector<double> sums(bins * n * dims, 0.0);
  std::vector<std::size_t> counts(bins * n, 0);
  for (const auto& r : rows) {
    if (r.position.empty()) continue;
    if (r.position.size() != dims) throw Error(ErrorCode::InconsistentDimension, "row for id " + r.id);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(std::floor((r.time - t_min) / interval + 1e-9)));
    const std::size_t cell = b * n + id_index.at(r.id);
    ++counts[cell];
    for (std::size_t d = 0; d < dims; ++d) sums[cell * dims + d] += r.position[d];
  }

  std::vector<double> data(bins * n * dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> observed;
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t cell = b * n + i;
      if (counts[cell] == 0) continue;
      observed.push_back(b);
      for (std::size_t d = 0; d < dims; ++d) {
        data[cell * dims + d] = sums[cell * dims + d] / static_cast<double>(counts[cell]);
      }
    }
    if (observed.empty()) throw Error(ErrorCode::UnfillableGap, "id " + ids[i] + " has no observations");
    auto value = [&](std::size_t b, std::size_t d) { return data[(b * n + i) * dims + d]; };
    std::size_t next = 0;  // index into observed of the first observed bin >= b
    for (std::size_t b = 0; b < bins; ++b) {
      while (next < observed.size() && observed[next] < b) ++next;
      if (next < observed.size() && observed[next] == b) continue;
      double* slot = data.data() + (b * n + i) * dims;
      if (next == 0) {
        for (std::size_t d = 0; d < dims; ++d) slot[d] = value(observed.front(), d);
      } else if (next == observed.size()) {
        for (std::size_t d = 0; d < dims; ++d) slot[d] = value(observed.back(), d);
      } else {
        const std::size_t lo = observed[next - 1], hi = observed[next];
        const double frac = static_cast<double>(b - lo) / static_cast<double>(hi - lo);
        for (std::size_t d = 0; d < dims; ++d) slot[d] = value(lo, d) + (value(hi, d) - value(lo, d)) * frac;
      }
    }
  }

  std::vector<double> times(bins);
  for (std::size_t b = 0; b < bins; ++b) times[b] = t_min + static_cast<double>(b) * interval;
  return TrajectoryTensor(bins, dims, n, std::move(data), std::move(ids), std::move(times));
}

TrajectoryTensor load_trajectories(const std::filesystem::path& path, std::optional<double> interval) {
  auto in = open_input(path);
  std::size_t dims = 0;
  const auto rows = parse_trajectory_rows(in, dims);
  if (interval) return bin_observations(rows, dims, *interval);

  std::vector<Observation> records;
  records.reserve(rows.size());
  std::size_t blanks = 0;
  for (const auto& r : rows) {
    if (r.position.empty()) {
      ++blanks;
      continue;
    }
    records.push_back({r.id, r.position, r.time});
  }
  if (blanks > 0) {
    throw Error(ErrorCode::MissingObservation,
                path.string() + ": " + std::to_string(blanks) + " row(s) have no coordinates; supply an interval to fill gaps");
  }
  auto outcome = validate(records);
  if (!outcome.ok()) {
    const bool duplicates = std::any_of(outcome.report.issues.begin(), outcome.report.issues.end(),
                                        [](const CellIssue& c) { return c.kind == CellIssue::Kind::Duplicate; });
    throw Error(duplicates ? ErrorCode::DuplicateObservation : ErrorCode::MissingObservation,
                path.string() + ": " + outcome.report.summary() + "; supply an interval to bin and fill");
  }
  return std::move(*outcome.tensor);
}

void save_trajectories(const TrajectoryTensor& x, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "id,t";
  for (std::size_t d = 0; d < x.dims(); ++d) out << ",x" << d + 1;
  out << '\n';
  for (std::size_t t = 0; t < x.steps(); ++t) {
    for (std::size_t i = 0; i < x.points(); ++i) {
      out << x.point_ids()[i] << ',' << format_number(x.timestamps()[t]);
      for (double v : x.point(t, i)) out << ',' << format_number(v);
      out << '\n';
    }
  }
}

Partition load_ground_truth(const std::filesystem::path& path, std::span<const std::string> ids) {
  auto in = open_input(path);
  std::size_t line_no = 0;
  const auto header = read_header(in, line_no);
  if (header.size() != 2 || header[0] != "id" || header[1] != "label") parse_fail(line_no, "expected header 'id,label'");
  std::unordered_map<std::string, int> labels;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw Error(ErrorCode::InconsistentDimension, "line " + std::to_string(line_no) + ": expected 2 fields");
    const int label = parse_int(fields[1], line_no, "label");
    if (label < kUnassigned) parse_fail(line_no, "labels must be >= -1");
    if (!labels.emplace(fields[0], label).second) parse_fail(line_no, "duplicate id " + fields[0]);
  }
  std::vector<int> ordered;
  ordered.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorCode::ShapeMismatch, path.string() + ": no label for id " + id);
    ordered.push_back(it->second);
  }
  if (labels.size() != ids.size()) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": labels for ids absent from the trajectories");
  }
  return Partition(std::move(ordered));
}

void save_partition(const Partition& p, std::span<const std::string> ids, const std::filesystem::path& path) {
  if (p.size() != ids.size()) throw Error(ErrorCode::ShapeMismatch, "partition size != number of ids");
  auto out = open_output(path);
  out << "id,label\n";
  for (std::size_t i = 0; i < p.size(); ++i) out << ids[i] << ',' << p[i] << '\n';
}

void save_assignments(const AssignmentHistory& a, std::span<const std::string> ids,
                      std::span<const double> timestamps, const std::filesystem::path& path) {
  if (ids.size() != a.points() || timestamps.size() != a.steps()) {
    throw Error(ErrorCode::ShapeMismatch, "assignment history does not match ids/timestamps");
  }
  auto out = open_output(path);
  out << "id,t,label\n";
  for (std::size_t t = 0; t < a.steps(); ++t) {
    for (std::size_t i = 0; i < a.points(); ++i) {
      out << ids[i] << ',' << format_number(timestamps[t]) << ',' << a(t, i) << '\n';
    }
  }
}

LoadedAssignments load_assignments(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::size_t line_no = 0;
  const auto header = read_header(in, line_no);
  if (header.size() != 3 || header[0] != "id" || header[1] != "t" || header[2] != "label") {
    parse_fail(line_no, "expected header 'id,t,label'");
  }
  struct Row {
    std::string id;
    double time;
    int label;
  };
  std::vector<Row> rows;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> id_index;
  std::vector<double> times;
  std::string line;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) throw Error(ErrorCode::InconsistentDimension, "line " + std::to_string(line_no) + ": expected 3 fields");
    Row row{fields[0], parse_double(fields[1], line_no, "time"), parse_int(fields[2], line_no, "label")};
    if (row.label < 0) parse_fail(line_no, "assignment labels must be >= 0");
    max_label = std::max(max_label, row.label);
    if (id_index.try_emplace(row.id, ids.size()).second) ids.push_back(row.id);
    times.push_back(row.time);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no assignments");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::map<double, std::size_t> time_index;
  for (std::size_t t = 0; t < times.size(); ++t) time_index.emplace(times[t], t);

  const std::size_t n = ids.size();
  std::vector<int> labels(times.size() * n, -1);
  for (const auto& r : rows) {
    int& slot = labels[time_index.at(r.time) * n + id_index.at(r.id)];
    if (slot != -1) throw Error(ErrorCode::DuplicateObservation, "id " + r.id + " assigned twice at one time");
    slot = r.label;
  }
  if (std::find(labels.begin(), labels.end(), -1) != labels.end()) {
    throw Error(ErrorCode::MissingObservation, path.string() + ": assignment history has gaps");
  }
  AssignmentHistory history(times.size(), n, static_cast<std::size_t>(max_label) + 1, std::move(labels));
  return {std::move(history), std::move(ids), std::move(times)};
}

void save_centers(const CenterTensor& c, std::span<const double> timestamps, const std::filesystem::path& path) {
  if (timestamps.size() != c.steps()) throw Error(ErrorCode::ShapeMismatch, "timestamps do not match centers");
  auto out = open_output(path);
  out << "t,cluster";
  for (std::size_t d = 0; d < c.dims(); ++d) out << ",x" << d + 1;
  out << '\n';
  for (std::size_t t = 0; t < c.steps(); ++t) {
    for (std::size_t j = 0; j < c.clusters(); ++j) {
      out << format_number(timestamps[t]) << ',' << j;
      for (double v : c.center(t, j)) out << ',' << format_number(v);
      out << '\n';
    }
  }
}

}  // namespace stkm
