#pragma once

#include <vector>

#include "s4tok/graph.hpp"
#include "s4tok/partition.hpp"
#include "s4tok/types.hpp"

namespace s4tok {

/// ℓ0 Potts problem: minimize Σ‖x_i − h_i‖² + μ·Σ w_ij·[x_i ≠ x_j].
struct PottsProblem {
  /// H×d fidelity targets, one row per vertex.
  RowMatrix features;
  AdjacencyGraph graph;
  double mu = 0.3;

  void validate() const;
};

struct CutPursuitParams {
  int max_iters = 10;
  /// Minimum energy decrease for a split; negative selects
  /// 1e-6 × initial energy.
  double min_gain = -1.0;
  /// Lloyd iterations of the two-means seeding.
  int kmeans_iters = 5;
};

struct CutPursuitResult {
  SuperpointPartition partition;
  /// Component means, one row per superpoint.
  RowMatrix values;
  double energy = 0.0;
  /// Energy of the starting partition followed by the energy after each
  /// iteration.
  std::vector<double> energy_trace;
  int iterations = 0;
};

/// Potts energy of a labeling whose superpoints take their mean feature.
double potts_energy(const PottsProblem& problem, const std::vector<Index>& labels);

/// Greedy ℓ0 cut pursuit. Starts from the graph's connected components;
/// each iteration splits every component by a binary min cut between two
/// candidate values (seeded by two-means), keeps splits that lower the
/// energy by more than min_gain, re-extracts connected components and
/// merges adjacent components while that lowers the energy. The recorded
/// energy never increases.
CutPursuitResult cut_pursuit_l0(const PottsProblem& problem,
                                const CutPursuitParams& params = {});

struct PathSegmentation {
  /// Segment label per vertex, 0-based and increasing along the path.
  std::vector<Index> labels;
  double energy = 0.0;
};

/// Exact Potts optimum on a path graph by dynamic programming over segment
/// boundaries. Intended as a test oracle (length ≤ 200).
PathSegmentation path_potts_dp(const RowMatrix& features, double mu);

} // namespace s4tok
