#include "s4tok/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s4tok/error.hpp"
#include "s4tok/spatial_index.hpp"

namespace s4tok {

AdjacencyGraph::AdjacencyGraph(Index vertex_count, std::vector<Edge> edges)
  : vertex_count_(vertex_count)
{
  if (vertex_count < 0)
    throw InvalidArgument("graph vertex count is negative");
  for (auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= vertex_count || e.v >= vertex_count)
      throw InvalidArgument("graph edge endpoint out of range");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw InvalidArgument("graph edge weights must be finite and positive");
    if (e.u > e.v)
      std::swap(e.u, e.v);
  }
  std::erase_if(edges, [](const Edge& e) { return e.u == e.v; });
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u < b.u || (a.u == b.u && (a.v < b.v || (a.v == b.v && a.weight > b.weight)));
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
              edges.end());
  edges_ = std::move(edges);

  offsets_.assign(static_cast<std::size_t>(vertex_count) + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  arcs_.resize(2 * edges_.size());
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    arcs_[fill[e.u]++] = { e.v, e.weight };
    arcs_[fill[e.v]++] = { e.u, e.weight };
  }
  for (Index v = 0; v < vertex_count; ++v)
    std::sort(arcs_.begin() + offsets_[v], arcs_.begin() + offsets_[v + 1],
              [](const Arc& a, const Arc& b) { return a.to < b.to; });
}

std::vector<Index>
AdjacencyGraph::connected_components() const
{
  return components_within(std::vector<Index>(static_cast<std::size_t>(vertex_count_), 0));
}

std::vector<Index>
AdjacencyGraph::components_within(const std::vector<Index>& labels) const
{
  if (static_cast<Index>(labels.size()) != vertex_count_)
    throw InvalidArgument("components_within: one label per vertex required");
  std::vector<Index> comp(static_cast<std::size_t>(vertex_count_), -1);
  std::vector<Index> stack;
  Index next = 0;
  for (Index s = 0; s < vertex_count_; ++s) {
    if (comp[s] >= 0)
      continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      auto [first, last] = neighbors(v);
      for (auto a = first; a != last; ++a) {
        if (comp[a->to] < 0 && labels[a->to] == labels[v]) {
          comp[a->to] = next;
          stack.push_back(a->to);
        }
      }
    }
    ++next;
  }
  return comp;
}

AdjacencyGraph
build_knn_graph(const PointCloud& cloud, Index k)
{
  cloud.validate();
  if (k < 1 || k >= cloud.size())
    throw InvalidArgument("build_knn_graph: need 1 <= k < H");
  const SpatialIndex index(cloud.positions);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(cloud.size() * k));
  for (Index i = 0; i < cloud.size(); ++i) {
    auto nbrs = index.knn(cloud.point(i), k + 1);
    Index added = 0;
    for (const auto& nb : nbrs) {
      if (nb.index == i || added == k)
        continue;
      edges.push_back({ i, nb.index, 1.0 });
      ++added;
    }
  }
  return AdjacencyGraph(cloud.size(), std::move(edges));
}

AdjacencyGraph
path_graph(Index n)
{
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i)
    edges.push_back({ i, i + 1, 1.0 });
  return AdjacencyGraph(n, std::move(edges));
}

} // namespace s4tok
