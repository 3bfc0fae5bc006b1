#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "c2fa/errors.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Nested input structure: J high-level features, the j-th of which decomposes
// into D_j low-level features. Low-level indices run in contiguous blocks,
// group 0 first.
class NestedShape {
 public:
  explicit NestedShape(std::vector<int> group_sizes)
      : group_sizes_(std::move(group_sizes)) {
    if (group_sizes_.empty())
      throw dimension_error("NestedShape requires at least one group");
    offsets_.reserve(group_sizes_.size());
    int off = 0;
    for (int d : group_sizes_) {
      if (d < 1) throw dimension_error("NestedShape group sizes must be >= 1");
      offsets_.push_back(off);
      off += d;
    }
    total_ = off;
  }

  int groups() const noexcept { return static_cast<int>(group_sizes_.size()); }
  int total() const noexcept { return total_; }
  int group_size(int j) const { return group_sizes_.at(static_cast<size_t>(j)); }
  int group_offset(int j) const { return offsets_.at(static_cast<size_t>(j)); }
  const std::vector<int>& group_sizes() const noexcept { return group_sizes_; }

  // Group owning low-level index d.
  int group_of(int d) const {
    if (d < 0 || d >= total_)
      throw dimension_error("low-level index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), d);
    return static_cast<int>(it - offsets_.begin()) - 1;
  }

  bool operator==(const NestedShape&) const = default;

 private:
  std::vector<int> group_sizes_;
  std::vector<int> offsets_;
  int total_ = 0;
};

// The J x D binary matrix that sums low-level attributions into their groups:
// row j has ones exactly on group j's contiguous block.
class AggregationMatrix {
 public:
  explicit AggregationMatrix(NestedShape shape) : shape_(std::move(shape)) {
    m_.setZero(shape_.groups(), shape_.total());
    for (int j = 0; j < shape_.groups(); ++j)
      m_.row(j).segment(shape_.group_offset(j), shape_.group_size(j)).setOnes();
  }

  const Matrix& matrix() const noexcept { return m_; }
  const NestedShape& shape() const noexcept { return shape_; }

 private:
  NestedShape shape_;
  Matrix m_;
};

inline AggregationMatrix build_aggregation_matrix(const NestedShape& shape) {
  return AggregationMatrix(shape);
}

// One explanation: high-level attributions (length J) and low-level
// attributions (length D, group blocks concatenated in order).
struct AttributionPair {
  Vector hifa;
  Vector lofa;
};

// Squared Euclidean norm of hifa - M lofa.
inline double consistency_residual(const AttributionPair& pair,
                                   const AggregationMatrix& m) {
  if (pair.hifa.size() != m.matrix().rows() ||
      pair.lofa.size() != m.matrix().cols())
    throw dimension_error("attribution pair does not match aggregation matrix");
  return (pair.hifa - m.matrix() * pair.lofa).squaredNorm();
}

inline bool is_consistent(const AttributionPair& pair,
                          const AggregationMatrix& m, double tol) {
  return consistency_residual(pair, m) <= tol;
}

}  // namespace c2fa
