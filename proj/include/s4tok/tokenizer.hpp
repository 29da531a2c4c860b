#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "s4tok/partition.hpp"
#include "s4tok/spatial_index.hpp"
#include "s4tok/types.hpp"

namespace s4tok {

enum class GroupingMode { Knn, Ball, KnnSpt, BallSpt };

std::string to_string(GroupingMode mode);
/// Parses "knn", "ball", "knn+spt" or "ball+spt".
GroupingMode parse_grouping_mode(const std::string& text);

inline bool
is_ball_mode(GroupingMode m)
{
  return m == GroupingMode::Ball || m == GroupingMode::BallSpt;
}

inline bool
is_spt_mode(GroupingMode m)
{
  return m == GroupingMode::KnnSpt || m == GroupingMode::BallSpt;
}

/// Sign of the weight exponent in the sampling criterion D · w^(±γ).
/// Positive favours small superpoints.
enum class ExponentSign { Positive, Negative };

struct TokenizerConfig {
  Index n_tokens = 64;
  Index patch_cap = 32;
  double gamma = 0.1;
  double alpha = 1.0;
  GroupingMode mode = GroupingMode::BallSpt;
  bool normalize = true;
  std::uint64_t seed = 0;
  Index pe_dim = 96;
  ExponentSign exponent_sign = ExponentSign::Positive;

  void validate() const;
};

/// Inverse-frequency weights w_i = 1 / (S · n_{ℓ_i}).
std::vector<double> superpoint_weights(const SuperpointPartition& partition);

/// Weighted farthest point sampling. The first index is drawn from
/// Multinomial(w) with `seed`; every later step takes the unsampled point
/// maximizing D_i · w_i^(±γ), ties to the lower index.
IndexList weighted_fps(const Points& points,
                       const std::vector<double>& weights,
                       Index n,
                       double gamma,
                       std::uint64_t seed,
                       ExponentSign sign = ExponentSign::Positive);

/// First index drawn by weighted_fps for the given weights and seed.
Index wfps_first_index(const std::vector<double>& weights, std::uint64_t seed);

struct RadiusEstimate {
  double radius;
  double spacing;
};

/// Mean nearest-other-centroid distance s and r = α·s. Requires N ≥ 2.
RadiusEstimate estimate_radius(const Points& centroids, double alpha);

struct TokenPatch {
  Index center_index = 0;
  Vec3 center = Vec3::Zero();
  IndexList members;
  /// |members| × (3 + D_in): coordinate offsets then attributes.
  RowMatrix offsets;
  Index superpoint = 0;
};

/// Builds one patch per centroid. knn modes take the `cap` nearest points;
/// ball modes take points within `radius` and subsample to `cap` with a
/// per-patch seed. spt modes only admit points sharing the center's
/// superpoint. The center itself is always a member.
std::vector<TokenPatch> group_patches(const PointCloud& cloud,
                                      const SpatialIndex& index,
                                      const SuperpointPartition& partition,
                                      const IndexList& centroid_indices,
                                      double radius,
                                      Index cap,
                                      GroupingMode mode,
                                      std::uint64_t seed);

/// Fills `patch.offsets` with [(p − center) / r, x] (or unscaled offsets
/// when `normalize` is false).
void normalize_patch(const PointCloud& cloud, TokenPatch& patch, double radius, bool normalize);

/// Sine/cosine embedding of centroid offsets from their mean: the first
/// D/2 columns are sin(ω_l Δp) and the last D/2 are cos(ω_l Δp), laid out
/// band-major (l, axis) with ω_l = 2^l π / σ and σ the largest centroid
/// extent along an axis.
RowMatrix positional_encoding(const Points& centroids, Index pe_dim);

struct TokenizerOutput {
  std::vector<TokenPatch> patches;
  IndexList centroid_indices;
  Points centroids;
  double radius = 0.0;
  double spacing = 0.0;
  RowMatrix pe;
  GroupingMode mode = GroupingMode::BallSpt;
  bool normalize = true;
  /// Patches holding only their center.
  Index singleton_count = 0;
};

/// Full pipeline: weights → WFPS → radius → grouping → normalization →
/// positional encoding.
TokenizerOutput tokenize(const PointCloud& cloud,
                         const SuperpointPartition& partition,
                         const TokenizerConfig& config);

/// Fixed-width token from patch statistics: per-column mean, per-column
/// max and the variance of each coordinate offset column. Width
/// 2·(3 + D_in) + 3.
Eigen::VectorXd default_featurizer(const TokenPatch& patch);

} // namespace s4tok
