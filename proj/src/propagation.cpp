#include "s4tok/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "s4tok/error.hpp"

namespace s4tok {

namespace {

constexpr Index kFallbackNeighbors = 3;

double
distance(const Points& a, Index i, const Points& b, Index k)
{
  const double dx = a(i, 0) - b(k, 0);
  const double dy = a(i, 1) - b(k, 1);
  const double dz = a(i, 2) - b(k, 2);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Sparse weight row: (centroid, weight) pairs.
using WeightRow = std::vector<std::pair<Index, double>>;

class WeightBuilder {
public:
  explicit WeightBuilder(const PropagationInputs& in)
    : in_(in)
  {
    for (Index k = 0; k < in.centroids.rows(); ++k)
      by_label_[in.centroid_labels[k]].push_back(k);
  }

  /// Returns true when the fallback rule was used.
  bool row(Index i, WeightRow& out) const
  {
    out.clear();
    const double eps = in_.epsilon;
    auto it = by_label_.find(in_.point_labels[i]);
    if (it != by_label_.end()) {
      double total = 0.0;
      for (Index k : it->second) {
        const double inv = 1.0 / (distance(in_.points, i, in_.centroids, k) + eps);
        out.emplace_back(k, inv);
        total += inv;
      }
      for (auto& [k, w] : out)
        w /= total;
      return false;
    }

    std::vector<std::pair<double, Index>> nearest;
    nearest.reserve(static_cast<std::size_t>(in_.centroids.rows()));
    for (Index k = 0; k < in_.centroids.rows(); ++k)
      nearest.emplace_back(distance(in_.points, i, in_.centroids, k), k);
    const auto take = std::min<std::size_t>(kFallbackNeighbors, nearest.size());
    std::partial_sort(nearest.begin(), nearest.begin() + static_cast<std::ptrdiff_t>(take),
                      nearest.end());
    double total = 0.0;
    for (std::size_t j = 0; j < take; ++j) {
      const double inv = 1.0 / (nearest[j].first + eps);
      out.emplace_back(nearest[j].second, inv);
      total += inv;
    }
    std::sort(out.begin(), out.end());
    for (auto& [k, w] : out)
      w /= total;
    return true;
  }

private:
  const PropagationInputs& in_;
  std::unordered_map<Index, std::vector<Index>> by_label_;
};

} // namespace

void
PropagationInputs::validate() const
{
  if (static_cast<Index>(point_labels.size()) != points.rows())
    throw InvalidArgument("propagation: one label per point required");
  if (centroids.rows() < 1)
    throw InvalidArgument("propagation: at least one centroid required");
  if (static_cast<Index>(centroid_labels.size()) != centroids.rows())
    throw InvalidArgument("propagation: one label per centroid required");
  if (centroid_features.rows() != centroids.rows())
    throw InvalidArgument("propagation: centroid features have " +
                          std::to_string(centroid_features.rows()) + " rows for " +
                          std::to_string(centroids.rows()) + " centroids");
  if (!(epsilon > 0.0))
    throw InvalidArgument("propagation: epsilon must be positive");
  if (!points.allFinite() || !centroids.allFinite() || !centroid_features.allFinite())
    throw InvalidArgument("propagation: non-finite input");
}

RowMatrix
propagation_weights(const PropagationInputs& inputs)
{
  inputs.validate();
  const WeightBuilder builder(inputs);
  RowMatrix w = RowMatrix::Zero(inputs.points.rows(), inputs.centroids.rows());
  WeightRow row;
  for (Index i = 0; i < inputs.points.rows(); ++i) {
    builder.row(i, row);
    for (const auto& [k, v] : row)
      w(i, k) = v;
  }
  return w;
}

PropagationResult
propagate_features(const PropagationInputs& inputs)
{
  inputs.validate();
  const WeightBuilder builder(inputs);
  PropagationResult out;
  out.features = RowMatrix::Zero(inputs.points.rows(), inputs.centroid_features.cols());
  out.is_fallback.assign(static_cast<std::size_t>(inputs.points.rows()), 0);
  WeightRow row;
  for (Index i = 0; i < inputs.points.rows(); ++i) {
    if (builder.row(i, row)) {
      out.is_fallback[i] = 1;
      ++out.fallback_count;
    }
    for (const auto& [k, v] : row)
      out.features.row(i) += v * inputs.centroid_features.row(k);
  }
  return out;
}

RowMatrix
pool_superpoint_features(const RowMatrix& point_features, const SuperpointPartition& partition)
{
  partition.validate();
  if (point_features.rows() != partition.point_count())
    throw InvalidArgument("pool_superpoint_features: feature rows differ from partition size");
  RowMatrix pooled = RowMatrix::Zero(partition.count(), point_features.cols());
  for (Index i = 0; i < point_features.rows(); ++i)
    pooled.row(partition.labels[i]) += point_features.row(i);
  for (Index s = 0; s < partition.count(); ++s)
    pooled.row(s) /= static_cast<double>(partition.sizes[s]);
  return pooled;
}

} // namespace s4tok
