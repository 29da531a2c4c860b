#include "s4tok/spatial_index.hpp"

#include <algorithm>
#include <limits>

#include "s4tok/error.hpp"
#include "s4tok/rng.hpp"

namespace s4tok {

SpatialIndex::SpatialIndex(Points points, int leaf_size)
  : points_(std::move(points))
  , leaf_size_(std::max(1, leaf_size))
{
  if (points_.rows() < 1)
    throw InvalidArgument("spatial index over an empty point set");
  if (!points_.allFinite())
    throw InvalidArgument("spatial index over non-finite coordinates");

  order_.resize(static_cast<std::size_t>(points_.rows()));
  for (std::size_t i = 0; i < order_.size(); ++i)
    order_[i] = static_cast<Index>(i);
  nodes_.reserve(2 * order_.size() / static_cast<std::size_t>(leaf_size_) + 1);
  build(0, static_cast<Index>(order_.size()));
}

std::int32_t
SpatialIndex::build(Index begin, Index end)
{
  Node node;
  node.begin = begin;
  node.end = end;
  for (int d = 0; d < 3; ++d) {
    node.lo[d] = std::numeric_limits<double>::infinity();
    node.hi[d] = -std::numeric_limits<double>::infinity();
  }
  for (Index i = begin; i < end; ++i) {
    const Index p = order_[i];
    for (int d = 0; d < 3; ++d) {
      node.lo[d] = std::min(node.lo[d], points_(p, d));
      node.hi[d] = std::max(node.hi[d], points_(p, d));
    }
  }

  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_)
    return id;

  int axis = 0;
  for (int d = 1; d < 3; ++d)
    if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis])
      axis = d;
  if (node.hi[axis] == node.lo[axis])
    return id; // all coincident

  const Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) {
                     return points_(a, axis) < points_(b, axis) ||
                            (points_(a, axis) == points_(b, axis) && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double
SpatialIndex::box_sq_distance(const Node& node, const Vec3& q)
{
  double d2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    double gap = 0.0;
    if (q[d] < node.lo[d])
      gap = node.lo[d] - q[d];
    else if (q[d] > node.hi[d])
      gap = q[d] - node.hi[d];
    d2 += gap * gap;
  }
  return d2;
}

void
SpatialIndex::knn_recurse(std::int32_t id,
                          const Vec3& q,
                          Index k,
                          const Filter* accept,
                          std::vector<Neighbor>& heap) const
{
  const Node& node = nodes_[id];
  if (static_cast<Index>(heap.size()) == k &&
      box_sq_distance(node, q) > heap.front().sq_distance)
    return;

  if (node.left < 0) {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index p = order_[i];
      if (accept && !(*accept)(p))
        continue;
      const Neighbor cand{ p, squared_distance(points_, p, q) };
      if (static_cast<Index>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }

  const double dl = box_sq_distance(nodes_[node.left], q);
  const double dr = box_sq_distance(nodes_[node.right], q);
  if (dl <= dr) {
    knn_recurse(node.left, q, k, accept, heap);
    knn_recurse(node.right, q, k, accept, heap);
  } else {
    knn_recurse(node.right, q, k, accept, heap);
    knn_recurse(node.left, q, k, accept, heap);
  }
}

std::vector<Neighbor>
SpatialIndex::knn(const Vec3& query, Index k) const
{
  if (k < 1 || k > size())
    throw InvalidArgument("knn: k = " + std::to_string(k) + " but only " +
                          std::to_string(size()) + " points are indexed");
  std::vector<Neighbor> heap;
  heap.reserve(static_cast<std::size_t>(k));
  knn_recurse(0, query, k, nullptr, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

std::vector<Neighbor>
SpatialIndex::knn_filtered(const Vec3& query, Index k, const Filter& accept) const
{
  if (k < 1)
    throw InvalidArgument("knn: k must be positive");
  std::vector<Neighbor> heap;
  heap.reserve(static_cast<std::size_t>(std::min(k, size())));
  knn_recurse(0, query, k, &accept, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void
SpatialIndex::radius_recurse(std::int32_t id,
                             const Vec3& q,
                             double sq_radius,
                             IndexList& out) const
{
  const Node& node = nodes_[id];
  if (box_sq_distance(node, q) > sq_radius)
    return;
  if (node.left < 0) {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index p = order_[i];
      if (squared_distance(points_, p, q) <= sq_radius)
        out.push_back(p);
    }
    return;
  }
  radius_recurse(node.left, q, sq_radius, out);
  radius_recurse(node.right, q, sq_radius, out);
}

IndexList
SpatialIndex::radius_search(const Vec3& center, double radius) const
{
  IndexList out;
  if (!(radius >= 0.0))
    return out;
  radius_recurse(0, center, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

IndexList
SpatialIndex::ball_query(const Vec3& center,
                         double radius,
                         std::size_t cap,
                         std::uint64_t seed) const
{
  if (cap < 1)
    throw InvalidArgument("ball_query: cap must be at least 1");
  IndexList hits = radius_search(center, radius);
  if (hits.size() <= cap)
    return hits;
  Rng rng(seed);
  return sample_without_replacement(hits, cap, rng);
}

std::vector<Neighbor>
brute_force_knn(const Points& points, const Vec3& query, Index k)
{
  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i)
    all.push_back({ i, squared_distance(points, i, query) });
  std::sort(all.begin(), all.end(), closer);
  all.resize(static_cast<std::size_t>(std::min<Index>(k, points.rows())));
  return all;
}

IndexList
brute_force_radius(const Points& points, const Vec3& center, double radius)
{
  IndexList out;
  const double sq = radius * radius;
  for (Index i = 0; i < points.rows(); ++i)
    if (squared_distance(points, i, center) <= sq)
      out.push_back(i);
  return out;
}

} // namespace s4tok
