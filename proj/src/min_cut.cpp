#include "s4tok/min_cut.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "s4tok/error.hpp"

namespace s4tok {

FlowNetwork::FlowNetwork(Index vertex_count)
  : n_(vertex_count)
  , source_(vertex_count)
  , sink_(vertex_count + 1)
  , adj_(static_cast<std::size_t>(vertex_count) + 2)
{
  if (vertex_count < 0)
    throw InvalidArgument("flow network vertex count is negative");
}

void
FlowNetwork::add_arc(Index u, Index v, double cap_uv, double cap_vu)
{
  if (!(cap_uv >= 0.0) || !(cap_vu >= 0.0) || !std::isfinite(cap_uv) || !std::isfinite(cap_vu))
    throw InvalidArgument("flow capacities must be finite and non-negative");
  if (cap_uv == 0.0 && cap_vu == 0.0)
    return;
  adj_[u].push_back({ v, static_cast<Index>(adj_[v].size()), cap_uv });
  adj_[v].push_back({ u, static_cast<Index>(adj_[u].size()) - 1, cap_vu });
}

void
FlowNetwork::add_terminal(Index v, double source_capacity, double sink_capacity)
{
  if (v < 0 || v >= n_)
    throw InvalidArgument("flow network vertex out of range");
  add_arc(source_, v, source_capacity, 0.0);
  add_arc(v, sink_, sink_capacity, 0.0);
}

void
FlowNetwork::add_edge(Index u, Index v, double capacity_uv, double capacity_vu)
{
  if (u < 0 || v < 0 || u >= n_ || v >= n_)
    throw InvalidArgument("flow network vertex out of range");
  if (u == v)
    return;
  add_arc(u, v, capacity_uv, capacity_vu);
}

bool
FlowNetwork::bfs()
{
  std::fill(level_.begin(), level_.end(), -1);
  std::queue<Index> queue;
  level_[source_] = 0;
  queue.push(source_);
  while (!queue.empty()) {
    const Index v = queue.front();
    queue.pop();
    for (const Arc& a : adj_[v]) {
      if (a.cap > 0.0 && level_[a.to] < 0) {
        level_[a.to] = level_[v] + 1;
        queue.push(a.to);
      }
    }
  }
  return level_[sink_] >= 0;
}

double
FlowNetwork::blocking_flow()
{
  // Iterative augmenting-path search over the level graph; the recursion
  // depth of the textbook version would follow the graph diameter.
  double total = 0.0;
  std::vector<std::pair<Index, std::size_t>> path;
  Index v = source_;
  while (true) {
    if (v == sink_) {
      double pushed = std::numeric_limits<double>::infinity();
      for (auto [u, i] : path)
        pushed = std::min(pushed, adj_[u][i].cap);
      for (auto [u, i] : path) {
        Arc& a = adj_[u][i];
        a.cap -= pushed;
        adj_[a.to][a.rev].cap += pushed;
      }
      total += pushed;
      path.clear();
      v = source_;
      continue;
    }
    bool advanced = false;
    for (std::size_t& i = next_[v]; i < adj_[v].size(); ++i) {
      const Arc& a = adj_[v][i];
      if (a.cap > 0.0 && level_[a.to] == level_[v] + 1) {
        path.emplace_back(v, i);
        v = a.to;
        advanced = true;
        break;
      }
    }
    if (advanced)
      continue;
    if (v == source_)
      break;
    level_[v] = -1;
    const auto [u, i] = path.back();
    path.pop_back();
    ++next_[u];
    v = u;
  }
  return total;
}

FlowNetwork::Cut
FlowNetwork::solve()
{
  // Original capacities, to price the final cut independently of the
  // accumulated flow.
  std::vector<std::vector<double>> original(adj_.size());
  double largest = 0.0;
  for (std::size_t v = 0; v < adj_.size(); ++v) {
    original[v].reserve(adj_[v].size());
    for (const Arc& a : adj_[v]) {
      original[v].push_back(a.cap);
      largest = std::max(largest, a.cap);
    }
  }
  // Residuals below this are treated as saturated so that rounding
  // leftovers cannot keep the augmentation loop alive.
  const double tiny = 1e-14 * std::max(1.0, largest);

  level_.assign(adj_.size(), -1);
  next_.assign(adj_.size(), 0);
  while (bfs()) {
    std::fill(next_.begin(), next_.end(), 0);
    blocking_flow();
    for (auto& arcs : adj_)
      for (Arc& a : arcs)
        if (a.cap < tiny)
          a.cap = 0.0;
  }

  Cut cut;
  cut.source_side.assign(static_cast<std::size_t>(n_), 0);
  std::vector<char> reach(adj_.size(), 0);
  std::vector<Index> stack{ source_ };
  reach[source_] = 1;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    for (const Arc& a : adj_[v]) {
      if (a.cap > 0.0 && !reach[a.to]) {
        reach[a.to] = 1;
        stack.push_back(a.to);
      }
    }
  }
  for (Index v = 0; v < n_; ++v)
    cut.source_side[v] = reach[v];

  for (std::size_t v = 0; v < adj_.size(); ++v) {
    if (!reach[v])
      continue;
    for (std::size_t i = 0; i < adj_[v].size(); ++i)
      if (!reach[adj_[v][i].to])
        cut.value += original[v][i];
  }
  return cut;
}

} // namespace s4tok
