#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "s4tok/types.hpp"

namespace s4tok::ssl {

// ---------------------------------------------------------------- masking

struct MaskPartition {
  IndexList visible;
  IndexList masked;
  double ratio = 0.0;
};

/// ⌊ratio·n⌋, robust to the representation error of `ratio`.
Index masked_count(Index n, double ratio);

/// Uniform random subset of ⌊ratio·n⌋ masked indices; both lists ascending.
MaskPartition random_mask(Index n, double ratio, std::uint64_t seed);

// ---------------------------------------------------------- query decoder

struct DecoderOutput {
  /// |ℳ|×D reconstructed features.
  RowMatrix features;
  /// One |ℳ|×|V| attention matrix per head.
  std::vector<RowMatrix> attention;
};

/// Cross-attention of masked queries onto visible features without learned
/// projections: per head slice, softmax((Q + E)·F_vᵀ / √D_h)·F_v with
/// D_h = D / heads.
DecoderOutput query_decoder_forward(const RowMatrix& queries,
                                    const RowMatrix& positional,
                                    const RowMatrix& visible,
                                    Index heads = 1);

// ------------------------------------------------------------- clustering

constexpr double kMasked = -std::numeric_limits<double>::infinity();

/// Entropic transport plan from a similarity matrix (−∞ marks forbidden
/// pairs): exp(S / ε) followed by `iters` rounds of column scaling to mass
/// 1/K and row scaling to mass 1/N. Columns without any admissible entry
/// stay zero. Throws if a row has no finite entry.
RowMatrix sinkhorn_transport(const RowMatrix& similarity, double epsilon, int iters);

/// sinkhorn_transport with every row renormalized to a distribution.
RowMatrix sinkhorn_normalize(const RowMatrix& similarity, double epsilon, int iters);

/// Divides each row by its sum; zero rows are left untouched.
RowMatrix normalize_rows(const RowMatrix& m);

struct KMeansParams {
  Index k = 16;
  double radius = 1.0;
  int iters = 20;
  double sinkhorn_epsilon = 0.05;
  int sinkhorn_iters = 3;
  std::uint64_t seed = 0;
};

struct ClusterState {
  RowMatrix centroid_features;
  Points centroid_positions;
  double radius = 0.0;
};

struct KMeansResult {
  /// N×K soft assignment of the final iteration.
  RowMatrix assignment;
  ClusterState state;
  /// Rows that had no centroid in range and were relaxed to their nearest.
  Index relaxed_rows = 0;
  Index reseeded_clusters = 0;
  int iterations = 0;
};

/// Observer invoked after the assignment step of every iteration with the
/// spatial mask in force and the resulting assignment.
using KMeansObserver =
  std::function<void(int iteration, const Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>& mask, const RowMatrix& assignment)>;

/// Spatially constrained soft K-Means: centroids start at FPS-selected
/// points; each iteration masks pairs farther than `radius`, scores the
/// rest by cosine similarity, balances with Sinkhorn and moves centroid
/// features and positions to their Γ-weighted means. A row with no
/// centroid in range is relaxed to its nearest centroid; a centroid that
/// receives no mass is re-seeded at the point farthest from all centroids.
KMeansResult constrained_kmeans(const RowMatrix& features,
                                const Points& positions,
                                const KMeansParams& params,
                                const KMeansObserver& observer = {});

// ------------------------------------------------------------------ losses

/// cos(a, b); throws NumericalError when either vector has zero norm.
double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a,
              const Eigen::Ref<const Eigen::RowVectorXd>& b);

/// Γ̂_{n,k} = softmax_k(cos(f_n, c_k) / τ).
RowMatrix student_assignment(const RowMatrix& features, const RowMatrix& centroids, double tau);

/// Row-wise softmax.
RowMatrix softmax_rows(const RowMatrix& logits);

/// (1/|ℳ|) Σ_{n∈ℳ} KL(teacher_n ‖ student_n) with 0·log 0 = 0; an empty ℳ
/// yields 0. Throws NumericalError when the student is zero on the
/// teacher's support.
double assignment_loss(const RowMatrix& teacher, const RowMatrix& student, const IndexList& rows);

/// (1/S) Σ_i (1 − cos(student_i, target_i)).
double local_distill_loss(const RowMatrix& student, const RowMatrix& target);

/// 1 − cos(student, target).
double global_distill_loss(const Eigen::RowVectorXd& student, const Eigen::RowVectorXd& target);

struct LossReport {
  double assign = 0.0;
  double distill_local = 0.0;
  double distill_global = 0.0;
  double total = 0.0;
  double lambda_l = 0.5;
  double lambda_g = 0.5;
};

LossReport total_loss(double assign,
                      double distill_local,
                      double distill_global,
                      double lambda_l = 0.5,
                      double lambda_g = 0.5);

// --------------------------------------------------------------- training

/// θ_t ← m·θ_t + (1 − m)·θ_s.
std::vector<double> ema_update(const std::vector<double>& teacher,
                               const std::vector<double>& student,
                               double momentum);

using LossFn = std::function<double(const std::vector<double>&)>;

/// Central-difference gradient (L(p + h e_i) − L(p − h e_i)) / 2h.
std::vector<double> finite_diff_grad(const LossFn& loss, const std::vector<double>& params, double h);

/// Analytic gradients used to check the losses.
namespace grad {

/// ∂ assignment_loss / ∂ logits where student = softmax_rows(logits).
RowMatrix assignment_loss_logits(const RowMatrix& teacher,
                                 const RowMatrix& logits,
                                 const IndexList& rows);

/// ∂ local_distill_loss / ∂ student.
RowMatrix local_distill_student(const RowMatrix& student, const RowMatrix& target);

/// ∂ global_distill_loss / ∂ student.
Eigen::RowVectorXd global_distill_student(const Eigen::RowVectorXd& student,
                                          const Eigen::RowVectorXd& target);

} // namespace grad

} // namespace s4tok::ssl
