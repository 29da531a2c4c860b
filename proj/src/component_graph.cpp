#include "component_graph.hpp"

#include <unordered_map>

namespace s4tok::detail {

ComponentGraph::ComponentGraph(const AdjacencyGraph& graph,
                               const RowMatrix& features,
                               const std::vector<Index>& labels)
{
  Index c_count = 0;
  for (Index l : labels)
    c_count = std::max(c_count, l + 1);
  count_.assign(static_cast<std::size_t>(c_count), 0);
  sum_ = RowMatrix::Zero(c_count, features.cols());
  adj_.resize(static_cast<std::size_t>(c_count));
  alive_.assign(static_cast<std::size_t>(c_count), 1);
  version_.assign(static_cast<std::size_t>(c_count), 0);
  parent_.resize(static_cast<std::size_t>(c_count));
  for (Index c = 0; c < c_count; ++c)
    parent_[c] = c;

  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++count_[labels[i]];
    sum_.row(labels[i]) += features.row(static_cast<Index>(i));
  }
  for (const Edge& e : graph.edges()) {
    const Index a = labels[e.u];
    const Index b = labels[e.v];
    if (a == b)
      continue;
    adj_[a][b] += e.weight;
    adj_[b][a] += e.weight;
  }
}

double
ComponentGraph::merge_cost(Index a, Index b) const
{
  const double na = double(count_[a]);
  const double nb = double(count_[b]);
  const auto diff = (sum_.row(a) / na - sum_.row(b) / nb).eval();
  return na * nb / (na + nb) * diff.squaredNorm();
}

void
ComponentGraph::merge(Index a, Index b)
{
  count_[a] += count_[b];
  sum_.row(a) += sum_.row(b);
  for (const auto& [c, w] : adj_[b]) {
    adj_[c].erase(b);
    if (c == a)
      continue;
    adj_[a][c] += w;
    adj_[c][a] += w;
  }
  adj_[a].erase(b);
  adj_[b].clear();
  alive_[b] = 0;
  parent_[b] = a;
  ++version_[a];
  ++version_[b];
}

Index
ComponentGraph::find(Index c)
{
  while (parent_[c] != c) {
    parent_[c] = parent_[parent_[c]];
    c = parent_[c];
  }
  return c;
}

std::vector<Index>
ComponentGraph::resolve(const std::vector<Index>& labels)
{
  std::vector<Index> out(labels.size());
  std::unordered_map<Index, Index> renumber;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Index root = find(labels[i]);
    auto [it, inserted] = renumber.try_emplace(root, static_cast<Index>(renumber.size()));
    out[i] = it->second;
  }
  return out;
}

} // namespace s4tok::detail
