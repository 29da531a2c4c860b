#pragma once

#include <vector>

#include "s4tok/types.hpp"

namespace s4tok {

/// s-t flow network over n inner vertices with terminal capacities, solved
/// with Dinic's algorithm.
///
/// Vertex v pays `sink_capacity(v)` when it ends on the source side and
/// `source_capacity(v)` when it ends on the sink side; a directed pair
/// capacity c(u→v) is paid when u is on the source side and v on the sink
/// side.
class FlowNetwork {
public:
  explicit FlowNetwork(Index vertex_count);

  Index vertex_count() const { return n_; }

  void add_terminal(Index v, double source_capacity, double sink_capacity);
  void add_edge(Index u, Index v, double capacity_uv, double capacity_vu);

  struct Cut {
    double value = 0.0;
    /// 1 when the vertex is on the source side of the minimum cut.
    std::vector<char> source_side;
  };

  /// Max flow, and the minimum cut read off the final residual graph
  /// (source side = vertices reachable from the source).
  Cut solve();

private:
  struct Arc {
    Index to;
    Index rev;
    double cap;
  };

  void add_arc(Index u, Index v, double cap_uv, double cap_vu);
  bool bfs();
  double blocking_flow();

  Index n_;
  Index source_;
  Index sink_;
  std::vector<std::vector<Arc>> adj_;
  std::vector<Index> level_;
  std::vector<std::size_t> next_;
};

} // namespace s4tok
