#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stkm/core.hpp"

namespace stkm {

class ContingencyTable {
 public:
  // Labels may be arbitrary integers; rows follow a's distinct labels in
  // order of first appearance, columns b's, so renaming labels leaves the
  // table unchanged.
  ContingencyTable(std::span<const int> a, std::span<const int> b);

  std::size_t rows() const noexcept { return row_sums_.size(); }
  std::size_t cols() const noexcept { return col_sums_.size(); }
  std::int64_t count(std::size_t r, std::size_t c) const { return counts_[r * cols() + c]; }
  const std::vector<std::int64_t>& row_sums() const noexcept { return row_sums_; }
  const std::vector<std::int64_t>& col_sums() const noexcept { return col_sums_; }
  std::int64_t total() const noexcept { return total_; }

 private:
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> row_sums_;
  std::vector<std::int64_t> col_sums_;
  std::int64_t total_ = 0;
};

// Natural-log entropies and mutual information.
double entropy(std::span<const std::int64_t> marginal, std::int64_t total);
double mutual_information(const ContingencyTable& table);

/// Expected mutual information under the hypergeometric (permutation) model,
/// evaluated in log space.
double expected_mutual_information(const ContingencyTable& table);

/// Adjusted mutual information with arithmetic-mean entropy normalization.
/// Identical labelings (up to renaming) score 1; a constant labeling on
/// either side scores 0.
double ami(std::span<const int> labels_a, std::span<const int> labels_b);

/// Replace every kUnassigned occurrence with a fresh label unused elsewhere.
std::vector<int> relabel_unassigned_unique(std::span<const int> labels);

/// AMI of the flattened T*N history against the ground truth tiled T times.
double total_ami(const AssignmentHistory& assignments, const Partition& ground_truth);

double long_term_ami(const Partition& predicted, const Partition& ground_truth);

}  // namespace stkm
