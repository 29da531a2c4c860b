#pragma once

#include <vector>

#include "s4tok/cut_pursuit.hpp"
#include "s4tok/geometry.hpp"
#include "s4tok/graph.hpp"
#include "s4tok/partition.hpp"

namespace s4tok {

struct SegmentationParams {
  DescriptorParams descriptors;
  /// Adjacency graph neighbors.
  Index graph_k = 10;
  double mu = 0.3;
  CutPursuitParams pursuit;
  /// Superpoints smaller than this are merged into a neighbor.
  Index min_size = 5;
};

struct SegmentationResult {
  SuperpointPartition partition;
  double energy = 0.0;
  std::vector<double> energy_trace;
  /// Superpoints absorbed by the minimum-size floor.
  Index merged_small = 0;
};

/// Per-vertex fidelity rows [n_x, n_y, n_z, f1, f2, f3].
RowMatrix descriptor_features(const std::vector<GeometricDescriptor>& descriptors);

/// Merges every component smaller than `min_size` into the adjacent
/// component with the closest mean feature, until none is left (isolated
/// components stay). Returns the number of merges.
Index enforce_min_size(const AdjacencyGraph& graph,
                       const RowMatrix& features,
                       Index min_size,
                       std::vector<Index>& labels);

/// Descriptors → k-NN graph → cut pursuit → minimum-size floor.
SegmentationResult segment(const PointCloud& cloud, const SegmentationParams& params);

} // namespace s4tok
