#include "s4tok/segmentation.hpp"

#include <limits>

#include "component_graph.hpp"
#include "s4tok/error.hpp"

namespace s4tok {

RowMatrix
descriptor_features(const std::vector<GeometricDescriptor>& descriptors)
{
  RowMatrix h(static_cast<Index>(descriptors.size()), 6);
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    const auto& g = descriptors[i];
    h.row(static_cast<Index>(i)) << g.normal.x(), g.normal.y(), g.normal.z(), g.f1, g.f2, g.f3;
  }
  return h;
}

Index
enforce_min_size(const AdjacencyGraph& graph,
                 const RowMatrix& features,
                 Index min_size,
                 std::vector<Index>& labels)
{
  if (min_size <= 1)
    return 0;
  labels = SuperpointPartition::from_labels(labels).labels;
  detail::ComponentGraph cg(graph, features, labels);

  Index merges = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (Index c = 0; c < cg.component_count(); ++c) {
      if (!cg.alive(c) || cg.count(c) >= min_size || cg.neighbors(c).empty())
        continue;
      const Eigen::VectorXd mc = cg.mean(c);
      Index target = -1;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [d, w] : cg.neighbors(c)) {
        const double dist = (cg.mean(d) - mc).squaredNorm();
        if (dist < best) {
          best = dist;
          target = d;
        }
      }
      cg.merge(target, c);
      ++merges;
      changed = true;
    }
  }
  labels = cg.resolve(labels);
  return merges;
}

SegmentationResult
segment(const PointCloud& cloud, const SegmentationParams& params)
{
  cloud.validate();
  const auto descriptors = compute_descriptors(cloud, params.descriptors);

  PottsProblem problem;
  problem.features = descriptor_features(descriptors);
  problem.graph = build_knn_graph(cloud, params.graph_k);
  problem.mu = params.mu;

  const CutPursuitResult pursuit = cut_pursuit_l0(problem, params.pursuit);

  SegmentationResult out;
  std::vector<Index> labels = pursuit.partition.labels;
  out.merged_small = enforce_min_size(problem.graph, problem.features, params.min_size, labels);
  out.partition = SuperpointPartition::from_labels(labels);
  out.energy = out.merged_small > 0 ? potts_energy(problem, out.partition.labels) : pursuit.energy;
  out.energy_trace = pursuit.energy_trace;
  return out;
}

} // namespace s4tok
