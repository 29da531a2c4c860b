#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace s4tok {

using Index = std::int64_t;
using IndexList = std::vector<Index>;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// N×3 coordinates, one point per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Dense row-major real matrix; rows are samples.
using RowMatrix =
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Positions plus optional per-point attributes (colors in [0,1], normals).
///
/// `attributes` has either zero columns or exactly one row per point;
/// `attribute_names` names each attribute column ("nx", "red", ...).
struct PointCloud {
  Points positions;
  RowMatrix attributes;
  std::vector<std::string> attribute_names;

  Index size() const { return static_cast<Index>(positions.rows()); }
  Index attribute_dim() const { return static_cast<Index>(attributes.cols()); }

  Vec3 point(Index i) const { return positions.row(i).transpose(); }

  /// Throws InvalidArgument unless H ≥ 1, coordinates are finite and the
  /// attribute block is consistent.
  void validate() const;

  static PointCloud from_positions(Points positions);
};

/// Returns a copy with every coordinate multiplied by `factor`.
PointCloud scaled(const PointCloud& cloud, double factor);

} // namespace s4tok
