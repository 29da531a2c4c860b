#include "s4tok/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s4tok/eigen_sym3.hpp"
#include "s4tok/error.hpp"

namespace s4tok {

namespace {

IndexList
fps_core(const Points& points, const std::vector<double>* factors, Index n, Index start)
{
  const Index h = points.rows();
  if (n < 1 || n > h)
    throw InvalidArgument("farthest point sampling: n = " + std::to_string(n) +
                          " outside [1, " + std::to_string(h) + "]");
  if (start < 0 || start >= h)
    throw InvalidArgument("farthest point sampling: start index out of range");

  std::vector<double> min_d(static_cast<std::size_t>(h),
                            std::numeric_limits<double>::infinity());
  std::vector<char> taken(static_cast<std::size_t>(h), 0);
  IndexList out;
  out.reserve(static_cast<std::size_t>(n));
  out.push_back(start);
  taken[start] = 1;

  Index last = start;
  for (Index t = 1; t < n; ++t) {
    const double lx = points(last, 0);
    const double ly = points(last, 1);
    const double lz = points(last, 2);
    Index best = -1;
    double best_score = -1.0;
    for (Index i = 0; i < h; ++i) {
      const double dx = points(i, 0) - lx;
      const double dy = points(i, 1) - ly;
      const double dz = points(i, 2) - lz;
      const double d = dx * dx + dy * dy + dz * dz;
      double& md = min_d[i];
      if (d < md)
        md = d;
      if (taken[i])
        continue;
      const double score = factors ? md * (*factors)[i] : md;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    out.push_back(best);
    taken[best] = 1;
    last = best;
  }
  return out;
}

} // namespace

IndexList
farthest_point_sampling(const Points& points, Index n, Index start)
{
  return fps_core(points, nullptr, n, start);
}

IndexList
farthest_point_sampling_scaled(const Points& points,
                               const std::vector<double>& factors,
                               Index n,
                               Index start)
{
  if (static_cast<Index>(factors.size()) != points.rows())
    throw InvalidArgument("farthest point sampling: one factor per point required");
  return fps_core(points, &factors, n, start);
}

Vec3
canonical_normal_sign(const Vec3& n)
{
  int dominant = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(n[d]) > std::abs(n[dominant]))
      dominant = d;
  return n[dominant] < 0.0 ? Vec3(-n) : n;
}

std::vector<Vec3>
estimate_normals(const PointCloud& cloud, Index k)
{
  cloud.validate();
  const SpatialIndex index(cloud.positions);
  return estimate_normals(cloud, index, k);
}

std::vector<Vec3>
estimate_normals(const PointCloud& cloud, const SpatialIndex& index, Index k)
{
  if (k < 3)
    throw InvalidArgument("estimate_normals: k must be at least 3");
  if (cloud.size() < k)
    throw InvalidArgument("estimate_normals: cloud has fewer than k points");

  std::vector<Vec3> normals(static_cast<std::size_t>(cloud.size()));
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.knn(cloud.point(i), k);
    Vec3 mean = Vec3::Zero();
    for (const auto& nb : nbrs)
      mean += cloud.point(nb.index);
    mean /= static_cast<double>(k);
    Mat3 cov = Mat3::Zero();
    for (const auto& nb : nbrs) {
      const Vec3 d = cloud.point(nb.index) - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(k);

    if (!(cov.trace() > 0.0)) {
      normals[i] = Vec3::UnitZ();
      continue;
    }
    const SymEigen3 eig = eigen_sym3(cov);
    normals[i] = canonical_normal_sign(eig.vectors.col(2).normalized());
  }
  return normals;
}

GeometricDescriptor
eigenfeatures(const Vec3& values)
{
  GeometricDescriptor g;
  const double l1 = std::max(values[0], 0.0);
  if (!(l1 > 0.0))
    return g;
  const double l2 = std::clamp(values[1], 0.0, l1);
  const double l3 = std::clamp(values[2], 0.0, l2);
  g.f1 = (l1 - l2) / l1;
  g.f2 = (l2 - l3) / l1;
  g.f3 = l3 / l1;
  return g;
}

Index
resolve_anchor_count(Index cloud_size, const DescriptorParams& params)
{
  Index anchors = params.anchor_count > 0 ? params.anchor_count
                                          : std::max(cloud_size / 4, params.k);
  return std::min(anchors, cloud_size);
}

std::vector<GeometricDescriptor>
compute_descriptors(const PointCloud& cloud, const DescriptorParams& params)
{
  cloud.validate();
  const Index k = params.k;
  if (k < 3)
    throw InvalidArgument("compute_descriptors: k must be at least 3");
  if (cloud.size() < k)
    throw InvalidArgument("compute_descriptors: cloud has fewer than k points");
  const Index anchor_count = resolve_anchor_count(cloud.size(), params);
  if (anchor_count < k)
    throw InvalidArgument("compute_descriptors: anchor count below k");

  const IndexList anchor_ids = farthest_point_sampling(cloud.positions, anchor_count, 0);
  Points anchors(anchor_count, 3);
  for (Index a = 0; a < anchor_count; ++a)
    anchors.row(a) = cloud.positions.row(anchor_ids[a]);
  const SpatialIndex anchor_index(std::move(anchors));
  const SpatialIndex full_index(cloud.positions);
  const std::vector<Vec3> normals = estimate_normals(cloud, full_index, k);

  std::vector<GeometricDescriptor> out(static_cast<std::size_t>(cloud.size()));
  for (Index i = 0; i < cloud.size(); ++i) {
    const Vec3 p = cloud.point(i);
    Mat3 cov = Mat3::Zero();
    for (const auto& nb : anchor_index.knn(p, k)) {
      const Vec3 d = anchor_index.points().row(nb.index).transpose() - p;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(k);

    GeometricDescriptor g;
    if (cov.trace() > 0.0) {
      g = eigenfeatures(eigen_sym3(cov).values);
      g.normal = normals[i];
    }
    out[i] = g;
  }
  return out;
}

} // namespace s4tok
