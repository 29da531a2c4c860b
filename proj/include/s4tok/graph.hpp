#pragma once

#include <vector>

#include "s4tok/types.hpp"

namespace s4tok {

struct Edge {
  Index u;
  Index v;
  double weight;
};

/// Undirected weighted graph without self-loops or duplicate edges.
/// Edges are stored once with u < v, sorted lexicographically.
class AdjacencyGraph {
public:
  AdjacencyGraph() = default;

  /// Normalizes the edge list: orients u < v, drops self-loops and merges
  /// duplicates (keeping the larger weight). Throws on out-of-range
  /// endpoints or non-positive / non-finite weights.
  AdjacencyGraph(Index vertex_count, std::vector<Edge> edges);

  Index vertex_count() const { return vertex_count_; }
  const std::vector<Edge>& edges() const { return edges_; }

  struct Arc {
    Index to;
    double weight;
  };

  /// Neighbors of `v` (CSR view), ascending by neighbor id.
  std::pair<const Arc*, const Arc*> neighbors(Index v) const
  {
    return { arcs_.data() + offsets_[v], arcs_.data() + offsets_[v + 1] };
  }

  Index degree(Index v) const { return offsets_[v + 1] - offsets_[v]; }

  /// Connected-component id per vertex, numbered by lowest member.
  std::vector<Index> connected_components() const;

  /// Connected components of the subgraph that keeps only edges whose
  /// endpoints share a label in `labels`. Ids are numbered in order of
  /// the lowest vertex.
  std::vector<Index> components_within(const std::vector<Index>& labels) const;

private:
  Index vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> offsets_;
  std::vector<Arc> arcs_;
};

/// Symmetrized k-nearest-neighbor graph with unit weights. Requires
/// 1 ≤ k < H.
AdjacencyGraph build_knn_graph(const PointCloud& cloud, Index k);

/// Path graph 0 - 1 - ... - (n−1) with unit weights.
AdjacencyGraph path_graph(Index n);

} // namespace s4tok
