#pragma once

// Adjacency between superpoints of a labeling, with running feature
// statistics, used by the merge passes of cut pursuit and the size floor.

#include <map>
#include <vector>

#include "s4tok/graph.hpp"
#include "s4tok/types.hpp"

namespace s4tok::detail {

class ComponentGraph {
public:
  /// `labels` must be contiguous in [0, C).
  ComponentGraph(const AdjacencyGraph& graph,
                 const RowMatrix& features,
                 const std::vector<Index>& labels);

  Index component_count() const { return static_cast<Index>(count_.size()); }
  bool alive(Index c) const { return alive_[c] != 0; }
  Index count(Index c) const { return count_[c]; }
  Eigen::VectorXd mean(Index c) const { return sum_.row(c).transpose() / double(count_[c]); }
  const std::map<Index, double>& neighbors(Index c) const { return adj_[c]; }
  std::uint64_t version(Index c) const { return version_[c]; }

  /// Fidelity increase caused by merging a and b.
  double merge_cost(Index a, Index b) const;

  /// Absorbs `b` into `a`.
  void merge(Index a, Index b);

  /// Final label per vertex, renumbered contiguously by first vertex.
  std::vector<Index> resolve(const std::vector<Index>& labels);

private:
  Index find(Index c);

  std::vector<Index> count_;
  RowMatrix sum_;
  std::vector<std::map<Index, double>> adj_;
  std::vector<char> alive_;
  std::vector<Index> parent_;
  std::vector<std::uint64_t> version_;
};

} // namespace s4tok::detail
