#include "stkm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace stkm {

namespace {

std::vector<std::size_t> dense_codes(std::span<const int> labels, std::size_t& distinct) {
  std::unordered_map<int, std::size_t> code;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = code.emplace(labels[i], code.size()).first->second;
  }
  distinct = code.size();
  return out;
}

}  // namespace

ContingencyTable::ContingencyTable(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "labelings differ in length");
  if (a.empty()) throw Error(ErrorCode::LengthMismatch, "labelings are empty");
  std::size_t rows = 0, cols = 0;
  const auto ra = dense_codes(a, rows);
  const auto cb = dense_codes(b, cols);
  counts_.assign(rows * cols, 0);
  row_sums_.assign(rows, 0);
  col_sums_.assign(cols, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++counts_[ra[i] * cols + cb[i]];
    ++row_sums_[ra[i]];
    ++col_sums_[cb[i]];
  }
  total_ = static_cast<std::int64_t>(a.size());
}

double entropy(std::span<const std::int64_t> marginal, std::int64_t total) {
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::int64_t c : marginal) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const ContingencyTable& table) {
  const double n = static_cast<double>(table.total());
  double mi = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const auto nij = table.count(r, c);
      if (nij == 0) continue;
      const double x = static_cast<double>(nij);
      mi += x / n *
            (std::log(n) + std::log(x) - std::log(static_cast<double>(table.row_sums()[r])) -
             std::log(static_cast<double>(table.col_sums()[c])));
    }
  }
  return std::max(mi, 0.0);
}

double expected_mutual_information(const ContingencyTable& table) {
  const std::int64_t n = table.total();
  std::vector<double> log_fact(static_cast<std::size_t>(n) + 1);
  for (std::int64_t v = 0; v <= n; ++v) log_fact[static_cast<std::size_t>(v)] = std::lgamma(static_cast<double>(v) + 1.0);
  auto lf = [&](std::int64_t v) { return log_fact[static_cast<std::size_t>(v)]; };
  const double log_n = std::log(static_cast<double>(n));
  const double nd = static_cast<double>(n);

  double emi = 0.0;
  for (std::int64_t a : table.row_sums()) {
    for (std::int64_t b : table.col_sums()) {
      const std::int64_t lo = std::max<std::int64_t>(1, a + b - n);
      const std::int64_t hi = std::min(a, b);
      const double fixed = lf(a) + lf(b) + lf(n - a) + lf(n - b) - lf(n);
      const double log_ab = std::log(static_cast<double>(a)) + std::log(static_cast<double>(b));
      for (std::int64_t nij = lo; nij <= hi; ++nij) {
        const double log_p = fixed - lf(nij) - lf(a - nij) - lf(b - nij) - lf(n - a - b + nij);
        const double x = static_cast<double>(nij);
        emi += x / nd * (log_n + std::log(x) - log_ab) * std::exp(log_p);
      }
    }
  }
  return emi;
}

double ami(std::span<const int> labels_a, std::span<const int> labels_b) {
  const ContingencyTable table(labels_a, labels_b);
  // A constant side carries no information: MI = E[MI] = 0.
  if (table.rows() == 1 || table.cols() == 1) return 0.0;

  // Identical up to renaming: one nonzero cell per row and per column.
  if (table.rows() == table.cols()) {
    std::size_t nonzero = 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      for (std::size_t c = 0; c < table.cols(); ++c) nonzero += table.count(r, c) != 0;
    }
    if (nonzero == table.rows()) return 1.0;
  }

  const double mi = mutual_information(table);
  const double emi = expected_mutual_information(table);
  const double normalizer =
      0.5 * (entropy(table.row_sums(), table.total()) + entropy(table.col_sums(), table.total()));
  double denominator = normalizer - emi;
  if (denominator == 0.0) return 0.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  denominator = denominator < 0.0 ? std::min(denominator, -eps) : std::max(denominator, eps);
  return std::min(1.0, (mi - emi) / denominator);
}

std::vector<int> relabel_unassigned_unique(std::span<const int> labels) {
  int next = 0;
  for (int l : labels) {
    if (l != kUnassigned) next = std::max(next, l + 1);
  }
  std::vector<int> out(labels.begin(), labels.end());
  for (int& l : out) {
    if (l == kUnassigned) l = next++;
  }
  return out;
}

double total_ami(const AssignmentHistory& assignments, const Partition& ground_truth) {
  if (ground_truth.size() != assignments.points()) {
    throw Error(ErrorCode::ShapeMismatch, "ground truth size != number of objects");
  }
  std::vector<int> tiled;
  tiled.reserve(assignments.labels().size());
  for (std::size_t t = 0; t < assignments.steps(); ++t) {
    tiled.insert(tiled.end(), ground_truth.labels().begin(), ground_truth.labels().end());
  }
  const auto predicted = relabel_unassigned_unique(assignments.labels());
  const auto truth = relabel_unassigned_unique(tiled);
  return ami(predicted, truth);
}

double long_term_ami(const Partition& predicted, const Partition& ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw Error(ErrorCode::ShapeMismatch, "partitions differ in size");
  }
  const auto a = relabel_unassigned_unique(predicted.labels());
  const auto b = relabel_unassigned_unique(ground_truth.labels());
  return ami(a, b);
}

}  // namespace stkm
