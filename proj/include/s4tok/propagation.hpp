#pragma once

#include <vector>

#include "s4tok/partition.hpp"
#include "s4tok/types.hpp"

namespace s4tok {

struct PropagationInputs {
  Points points;
  std::vector<Index> point_labels;
  Points centroids;
  std::vector<Index> centroid_labels;
  /// K×D features carried by the centroids.
  RowMatrix centroid_features;
  double epsilon = 1e-4;

  void validate() const;
};

struct PropagationResult {
  /// H×D propagated features.
  RowMatrix features;
  /// Points whose label matched no centroid.
  Index fallback_count = 0;
  std::vector<char> is_fallback;
};

/// Dense H×K weights w_ik = (m_ik / d_ik) / Σ_j (m_ij / d_ij) with
/// m_ik = [ℓ_i = ℓ̄_k] and d_ik = ‖p_i − p̄_k‖ + ε. A point whose label
/// matches no centroid falls back to unmasked inverse-distance weights over
/// its (up to) 3 nearest centroids.
RowMatrix propagation_weights(const PropagationInputs& inputs);

/// f_i = Σ_k w_ik f̄_k without materializing the dense weight matrix.
PropagationResult propagate_features(const PropagationInputs& inputs);

/// Row s = mean of the point features labelled s.
RowMatrix pool_superpoint_features(const RowMatrix& point_features,
                                   const SuperpointPartition& partition);

} // namespace s4tok
