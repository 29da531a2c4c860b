#include "s4tok/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s4tok/error.hpp"
#include "s4tok/geometry.hpp"
#include "s4tok/rng.hpp"

namespace s4tok {

std::string
to_string(GroupingMode mode)
{
  switch (mode) {
    case GroupingMode::Knn:
      return "knn";
    case GroupingMode::Ball:
      return "ball";
    case GroupingMode::KnnSpt:
      return "knn+spt";
    case GroupingMode::BallSpt:
      return "ball+spt";
  }
  return "?";
}

GroupingMode
parse_grouping_mode(const std::string& text)
{
  if (text == "knn")
    return GroupingMode::Knn;
  if (text == "ball")
    return GroupingMode::Ball;
  if (text == "knn+spt" || text == "spt")
    return GroupingMode::KnnSpt;
  if (text == "ball+spt")
    return GroupingMode::BallSpt;
  throw InvalidArgument("unknown grouping mode '" + text +
                        "' (expected knn, ball, knn+spt or ball+spt)");
}

void
TokenizerConfig::validate() const
{
  if (n_tokens < 1)
    throw InvalidArgument("tokenizer: n_tokens must be at least 1");
  if (patch_cap < 1)
    throw InvalidArgument("tokenizer: patch_cap must be at least 1");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw InvalidArgument("tokenizer: gamma must lie in [0, 1]");
  if (!(alpha >= 1.0) || !std::isfinite(alpha))
    throw InvalidArgument("tokenizer: alpha must be at least 1");
  if (pe_dim < 0 || pe_dim % 6 != 0)
    throw InvalidArgument("tokenizer: pe_dim must be a non-negative multiple of 6");
}

std::vector<double>
superpoint_weights(const SuperpointPartition& partition)
{
  partition.validate();
  const double s = static_cast<double>(partition.count());
  std::vector<double> w(partition.labels.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = 1.0 / (s * static_cast<double>(partition.sizes[partition.labels[i]]));
  return w;
}

Index
wfps_first_index(const std::vector<double>& weights, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, 0x77667073));
  return draw_multinomial(weights, rng);
}

IndexList
weighted_fps(const Points& points,
             const std::vector<double>& weights,
             Index n,
             double gamma,
             std::uint64_t seed,
             ExponentSign sign)
{
  if (static_cast<Index>(weights.size()) != points.rows())
    throw InvalidArgument("weighted_fps: one weight per point required");
  if (n < 1 || n > points.rows())
    throw InvalidArgument("weighted_fps: n = " + std::to_string(n) + " outside [1, " +
                          std::to_string(points.rows()) + "]");
  const double exponent = sign == ExponentSign::Positive ? gamma : -gamma;
  std::vector<double> factors(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0))
      throw InvalidArgument("weighted_fps: weights must be positive");
    factors[i] = std::pow(weights[i], exponent);
  }
  return farthest_point_sampling_scaled(points, factors, n, wfps_first_index(weights, seed));
}

RadiusEstimate
estimate_radius(const Points& centroids, double alpha)
{
  const Index n = centroids.rows();
  if (n < 2)
    throw InvalidArgument("estimate_radius: at least two centroids are needed to define a spacing");
  if (!(alpha > 0.0))
    throw InvalidArgument("estimate_radius: alpha must be positive");
  double total = 0.0;
  for (Index t = 0; t < n; ++t) {
    const Vec3 p = centroids.row(t).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (Index u = 0; u < n; ++u) {
      if (u == t)
        continue;
      best = std::min(best, squared_distance(centroids, u, p));
    }
    total += std::sqrt(best);
  }
  const double spacing = total / static_cast<double>(n);
  return { alpha * spacing, spacing };
}

namespace {

void
keep_center_first(IndexList& members, Index center)
{
  auto it = std::find(members.begin(), members.end(), center);
  if (it == members.end()) {
    if (!members.empty())
      members.pop_back();
    members.insert(members.begin(), center);
  }
}

} // namespace

std::vector<TokenPatch>
group_patches(const PointCloud& cloud,
              const SpatialIndex& index,
              const SuperpointPartition& partition,
              const IndexList& centroid_indices,
              double radius,
              Index cap,
              GroupingMode mode,
              std::uint64_t seed)
{
  if (partition.point_count() != cloud.size())
    throw InvalidArgument("group_patches: partition size differs from cloud size");
  if (cap < 1)
    throw InvalidArgument("group_patches: cap must be at least 1");
  if (is_ball_mode(mode) && !(radius > 0.0))
    throw InvalidArgument("group_patches: ball grouping needs a positive radius");

  const auto& labels = partition.labels;
  std::vector<TokenPatch> patches(centroid_indices.size());
  for (std::size_t t = 0; t < centroid_indices.size(); ++t) {
    const Index c = centroid_indices[t];
    if (c < 0 || c >= cloud.size())
      throw InvalidArgument("group_patches: centroid index out of range");
    TokenPatch& patch = patches[t];
    patch.center_index = c;
    patch.center = cloud.point(c);
    patch.superpoint = labels[c];
    const Index label = labels[c];

    switch (mode) {
      case GroupingMode::Knn:
      case GroupingMode::KnnSpt: {
        std::vector<Neighbor> nbrs;
        if (mode == GroupingMode::Knn)
          nbrs = index.knn(patch.center, std::min(cap, cloud.size()));
        else
          nbrs = index.knn_filtered(patch.center, cap,
                                    [&](Index i) { return labels[i] == label; });
        patch.members.reserve(nbrs.size());
        for (const auto& nb : nbrs)
          patch.members.push_back(nb.index);
        keep_center_first(patch.members, c);
        break;
      }
      case GroupingMode::Ball:
      case GroupingMode::BallSpt: {
        IndexList others;
        for (Index i : index.radius_search(patch.center, radius))
          if (i != c && (mode == GroupingMode::Ball || labels[i] == label))
            others.push_back(i);
        if (static_cast<Index>(others.size()) + 1 > cap) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
          others = sample_without_replacement(others, static_cast<std::size_t>(cap - 1), rng);
        }
        others.push_back(c);
        std::sort(others.begin(), others.end());
        patch.members = std::move(others);
        break;
      }
    }
  }
  return patches;
}

void
normalize_patch(const PointCloud& cloud, TokenPatch& patch, double radius, bool normalize)
{
  if (normalize && !(radius > 0.0))
    throw InvalidArgument("normalize_patch: radius must be positive");
  const Index din = cloud.attribute_dim();
  patch.offsets.resize(static_cast<Index>(patch.members.size()), 3 + din);
  for (std::size_t j = 0; j < patch.members.size(); ++j) {
    const Index m = patch.members[j];
    const auto row = static_cast<Index>(j);
    for (int d = 0; d < 3; ++d) {
      const double delta = cloud.positions(m, d) - patch.center[d];
      patch.offsets(row, d) = normalize ? delta / radius : delta;
    }
    if (din > 0)
      patch.offsets.row(row).tail(din) = cloud.attributes.row(m);
  }
}

RowMatrix
positional_encoding(const Points& centroids, Index pe_dim)
{
  if (pe_dim < 0 || pe_dim % 6 != 0)
    throw InvalidArgument("positional_encoding: width must be a multiple of 6");
  const Index n = centroids.rows();
  RowMatrix pe(n, pe_dim);
  if (n == 0 || pe_dim == 0)
    return pe;

  const Eigen::RowVector3d mean = centroids.colwise().mean();
  const Eigen::RowVector3d extent = centroids.colwise().maxCoeff() - centroids.colwise().minCoeff();
  double sigma = extent.maxCoeff();
  if (!(sigma > 0.0))
    sigma = 1.0;

  const Index bands = pe_dim / 6;
  const Index half = pe_dim / 2;
  constexpr double pi = 3.14159265358979323846;
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVector3d delta = centroids.row(i) - mean;
    for (Index l = 0; l < bands; ++l) {
      const double omega = std::ldexp(pi, static_cast<int>(l)) / sigma;
      for (int a = 0; a < 3; ++a) {
        const double phase = omega * delta[a];
        pe(i, 3 * l + a) = std::sin(phase);
        pe(i, half + 3 * l + a) = std::cos(phase);
      }
    }
  }
  return pe;
}

TokenizerOutput
tokenize(const PointCloud& cloud,
         const SuperpointPartition& partition,
         const TokenizerConfig& config)
{
  cloud.validate();
  partition.validate();
  config.validate();
  if (partition.point_count() != cloud.size())
    throw InvalidArgument("tokenize: partition has " + std::to_string(partition.point_count()) +
                          " labels for " + std::to_string(cloud.size()) + " points");
  if (config.n_tokens > cloud.size())
    throw InvalidArgument("tokenize: requested " + std::to_string(config.n_tokens) +
                          " tokens from " + std::to_string(cloud.size()) + " points");

  TokenizerOutput out;
  out.mode = config.mode;
  out.normalize = config.normalize;

  const auto weights = superpoint_weights(partition);
  out.centroid_indices = weighted_fps(cloud.positions, weights, config.n_tokens, config.gamma,
                                      config.seed, config.exponent_sign);
  out.centroids.resize(config.n_tokens, 3);
  for (Index t = 0; t < config.n_tokens; ++t)
    out.centroids.row(t) = cloud.positions.row(out.centroid_indices[t]);

  if (config.n_tokens >= 2 || is_ball_mode(config.mode) || config.normalize) {
    const auto est = estimate_radius(out.centroids, config.alpha);
    out.radius = est.radius;
    out.spacing = est.spacing;
  }

  const SpatialIndex index(cloud.positions);
  out.patches = group_patches(cloud, index, partition, out.centroid_indices, out.radius,
                              config.patch_cap, config.mode, config.seed);
  for (auto& patch : out.patches) {
    normalize_patch(cloud, patch, out.radius, config.normalize);
    if (patch.members.size() == 1)
      ++out.singleton_count;
  }
  out.pe = positional_encoding(out.centroids, config.pe_dim);
  return out;
}

Eigen::VectorXd
default_featurizer(const TokenPatch& patch)
{
  const RowMatrix& z = patch.offsets;
  if (z.rows() < 1)
    throw InvalidArgument("default_featurizer: patch has no members");
  if (z.cols() < 3)
    throw InvalidArgument("default_featurizer: offsets have fewer than 3 columns");
  const Index c = z.cols();
  Eigen::VectorXd out(2 * c + 3);
  const Eigen::RowVectorXd mean = z.colwise().mean();
  out.head(c) = mean.transpose();
  out.segment(c, c) = z.colwise().maxCoeff().transpose();
  for (int d = 0; d < 3; ++d)
    out[2 * c + d] = (z.col(d).array() - mean[d]).square().mean();
  return out;
}

} // namespace s4tok
