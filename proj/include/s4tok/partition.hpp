#pragma once

#include <vector>

#include "s4tok/types.hpp"

namespace s4tok {

/// Superpoint labels in [0, S) plus per-superpoint sizes.
struct SuperpointPartition {
  std::vector<Index> labels;
  std::vector<Index> sizes;

  Index count() const { return static_cast<Index>(sizes.size()); }
  Index point_count() const { return static_cast<Index>(labels.size()); }

  /// Builds a partition from arbitrary integer labels, renumbering them
  /// 0, 1, ... in order of first appearance.
  static SuperpointPartition from_labels(const std::vector<Index>& raw);

  /// Throws InvalidArgument if labels are out of range, sizes disagree with
  /// the labels, or some superpoint is empty.
  void validate() const;
};

/// True when the two labelings induce the same partition of the points.
bool same_partition(const std::vector<Index>& a, const std::vector<Index>& b);

} // namespace s4tok
