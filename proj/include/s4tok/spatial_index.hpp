#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "s4tok/types.hpp"

namespace s4tok {

struct Neighbor {
  Index index;
  double sq_distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Orders by squared distance, then by ascending point index.
inline bool
closer(const Neighbor& a, const Neighbor& b)
{
  return a.sq_distance < b.sq_distance ||
         (a.sq_distance == b.sq_distance && a.index < b.index);
}

/// Squared Euclidean distance, evaluated in a fixed order so that every
/// query path (tree, brute force, sampling) sees bit-identical values.
inline double
squared_distance(const Points& points, Index i, const Vec3& q)
{
  const double dx = points(i, 0) - q.x();
  const double dy = points(i, 1) - q.y();
  const double dz = points(i, 2) - q.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Static kd-tree over a snapshot of point positions.
///
/// Results are exact: knn returns the same list as a full scan sorted with
/// `closer`, and ball queries return every point with squared distance
/// ≤ r². The index is immutable after construction and safe for
/// concurrent queries.
class SpatialIndex {
public:
  using Filter = std::function<bool(Index)>;

  explicit SpatialIndex(Points points, int leaf_size = 16);

  Index size() const { return static_cast<Index>(points_.rows()); }
  const Points& points() const { return points_; }

  /// The k nearest points ordered by `closer`. Throws InvalidArgument when
  /// k is outside [1, size()].
  std::vector<Neighbor> knn(const Vec3& query, Index k) const;

  /// Like knn but only over points accepted by `accept`; may return fewer
  /// than k entries when fewer points pass.
  std::vector<Neighbor> knn_filtered(const Vec3& query,
                                     Index k,
                                     const Filter& accept) const;

  /// Every point within `radius` of `center` (distance ≤ radius), in
  /// ascending index order.
  IndexList radius_search(const Vec3& center, double radius) const;

  /// radius_search followed by a seeded uniform subsample down to `cap`
  /// when more candidates qualify. Output stays in ascending index order.
  IndexList ball_query(const Vec3& center,
                       double radius,
                       std::size_t cap,
                       std::uint64_t seed) const;

private:
  struct Node {
    double lo[3];
    double hi[3];
    Index begin;
    Index end;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(Index begin, Index end);
  void knn_recurse(std::int32_t node,
                   const Vec3& q,
                   Index k,
                   const Filter* accept,
                   std::vector<Neighbor>& heap) const;
  void radius_recurse(std::int32_t node,
                      const Vec3& q,
                      double sq_radius,
                      IndexList& out) const;
  static double box_sq_distance(const Node& node, const Vec3& q);

  Points points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

/// Exhaustive reference scans, used by tests and small inputs.
std::vector<Neighbor> brute_force_knn(const Points& points, const Vec3& query, Index k);
IndexList brute_force_radius(const Points& points, const Vec3& center, double radius);

} // namespace s4tok
