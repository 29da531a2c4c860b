#pragma once

#include <vector>

#include "s4tok/spatial_index.hpp"
#include "s4tok/types.hpp"

namespace s4tok {

/// Greedy farthest point sampling starting at `start`. Each step selects
/// the unselected point maximizing the squared distance to the selected
/// set, ties going to the lower index.
IndexList farthest_point_sampling(const Points& points, Index n, Index start);

/// Farthest point sampling whose criterion is D_i · factors[i]. Unit
/// factors reproduce farthest_point_sampling exactly.
IndexList farthest_point_sampling_scaled(const Points& points,
                                         const std::vector<double>& factors,
                                         Index n,
                                         Index start);

/// Per-point unit normals from the covariance of the k nearest neighbors
/// (smallest-eigenvalue eigenvector). The largest-magnitude component is
/// made positive; coincident neighborhoods get +z.
std::vector<Vec3> estimate_normals(const PointCloud& cloud, Index k);
std::vector<Vec3> estimate_normals(const PointCloud& cloud,
                                   const SpatialIndex& index,
                                   Index k);

/// Flips `n` so that its largest-magnitude component is positive.
Vec3 canonical_normal_sign(const Vec3& n);

/// Unit normal plus linearity / planarity / scattering.
struct GeometricDescriptor {
  Vec3 normal = Vec3::UnitZ();
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 1.0;
};

/// Eigenvalue features of a descending spectrum. λ1 = 0 maps to (0, 0, 1).
GeometricDescriptor eigenfeatures(const Vec3& descending_eigenvalues);

struct DescriptorParams {
  /// Anchor subset size; 0 selects max(H / 4, k) clamped to H.
  Index anchor_count = 0;
  /// Anchors per neighborhood (also the neighbor count used for normals).
  Index k = 10;
};

Index resolve_anchor_count(Index cloud_size, const DescriptorParams& params);

/// Eigenfeatures from the (1/k)·M·Mᵀ covariance, where the columns of M are
/// offsets from each point to its k nearest FPS anchors. Normals come from
/// estimate_normals over the full cloud with the same k.
std::vector<GeometricDescriptor> compute_descriptors(const PointCloud& cloud,
                                                     const DescriptorParams& params);

} // namespace s4tok
