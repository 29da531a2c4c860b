#pragma once

#include "s4tok/types.hpp"

namespace s4tok {

struct SymEigen3 {
  /// Descending: values[0] ≥ values[1] ≥ values[2].
  Vec3 values;
  /// Column c is the unit eigenvector of values[c].
  Mat3 vectors;
  int sweeps = 0;
};

/// Eigen decomposition of a symmetric 3×3 matrix by cyclic Jacobi
/// rotations (at most 20 sweeps, stops when the off-diagonal norm drops
/// below 1e-12 relative to the Frobenius norm).
///
/// Throws InvalidArgument when |A − Aᵀ| exceeds 1e-9 in any entry.
SymEigen3 eigen_sym3(const Mat3& matrix);

} // namespace s4tok
