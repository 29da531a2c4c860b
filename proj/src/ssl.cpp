#include "s4tok/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s4tok/error.hpp"
#include "s4tok/geometry.hpp"
#include "s4tok/rng.hpp"

namespace s4tok::ssl {

using MaskMatrix = Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>;

Index
masked_count(Index n, double ratio)
{
  const double exact = ratio * static_cast<double>(n);
  auto m = static_cast<Index>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
  return std::clamp<Index>(m, 0, n);
}

MaskPartition
random_mask(Index n, double ratio, std::uint64_t seed)
{
  if (n < 1)
    throw InvalidArgument("random_mask: n must be at least 1");
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw InvalidArgument("random_mask: ratio must lie in [0, 1)");

  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{ 0 });
  Rng rng(derive_seed(seed, 0x6d61736b));
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }
  const Index m = masked_count(n, ratio);

  MaskPartition out;
  out.ratio = ratio;
  out.masked.assign(order.begin(), order.begin() + m);
  out.visible.assign(order.begin() + m, order.end());
  std::sort(out.masked.begin(), out.masked.end());
  std::sort(out.visible.begin(), out.visible.end());
  return out;
}

DecoderOutput
query_decoder_forward(const RowMatrix& queries,
                      const RowMatrix& positional,
                      const RowMatrix& visible,
                      Index heads)
{
  if (visible.rows() < 1)
    throw InvalidArgument("query decoder: no visible features to attend to");
  if (queries.rows() != positional.rows() || queries.cols() != positional.cols())
    throw InvalidArgument("query decoder: queries and positional embeddings differ in shape");
  if (queries.cols() != visible.cols())
    throw InvalidArgument("query decoder: query width " + std::to_string(queries.cols()) +
                          " differs from feature width " + std::to_string(visible.cols()));
  const Index d = visible.cols();
  if (heads < 1 || d % heads != 0)
    throw InvalidArgument("query decoder: width must be divisible by the head count");

  const Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const RowMatrix q = queries + positional;

  DecoderOutput out;
  out.features.resize(queries.rows(), d);
  for (Index h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto fh = visible.middleCols(h * dh, dh);
    RowMatrix scores = (qh * fh.transpose()) * scale;
    RowMatrix attn = softmax_rows(scores);
    out.features.middleCols(h * dh, dh) = attn * fh;
    out.attention.push_back(std::move(attn));
  }
  return out;
}

RowMatrix
softmax_rows(const RowMatrix& logits)
{
  RowMatrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    double total = 0.0;
    for (Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - top);
      total += out(i, j);
    }
    out.row(i) /= total;
  }
  return out;
}

RowMatrix
sinkhorn_transport(const RowMatrix& similarity, double epsilon, int iters)
{
  if (!(epsilon > 0.0))
    throw InvalidArgument("sinkhorn: epsilon must be positive");
  if (iters < 0)
    throw InvalidArgument("sinkhorn: negative iteration count");
  const Index n = similarity.rows();
  const Index k = similarity.cols();
  if (n < 1 || k < 1)
    throw InvalidArgument("sinkhorn: empty similarity matrix");

  double top = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    bool any = false;
    for (Index j = 0; j < k; ++j) {
      const double s = similarity(i, j);
      if (std::isnan(s) || s == std::numeric_limits<double>::infinity())
        throw NumericalError("sinkhorn: similarity must be finite or -inf");
      if (std::isfinite(s)) {
        any = true;
        top = std::max(top, s);
      }
    }
    if (!any)
      throw InvalidArgument("sinkhorn: row " + std::to_string(i) + " is fully masked");
  }

  RowMatrix p(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < k; ++j)
      p(i, j) = std::isfinite(similarity(i, j)) ? std::exp((similarity(i, j) - top) / epsilon) : 0.0;

  const double col_mass = 1.0 / static_cast<double>(k);
  const double row_mass = 1.0 / static_cast<double>(n);
  for (int it = 0; it < iters; ++it) {
    const Eigen::RowVectorXd cols = p.colwise().sum();
    for (Index j = 0; j < k; ++j)
      if (cols[j] > 0.0)
        p.col(j) *= col_mass / cols[j];
    const Eigen::VectorXd rows = p.rowwise().sum();
    for (Index i = 0; i < n; ++i)
      if (rows[i] > 0.0)
        p.row(i) *= row_mass / rows[i];
  }
  if (!p.allFinite())
    throw NumericalError("sinkhorn: transport plan is not finite");
  return p;
}

RowMatrix
normalize_rows(const RowMatrix& m)
{
  RowMatrix out = m;
  for (Index i = 0; i < out.rows(); ++i) {
    const double total = out.row(i).sum();
    if (total > 0.0)
      out.row(i) /= total;
  }
  return out;
}

RowMatrix
sinkhorn_normalize(const RowMatrix& similarity, double epsilon, int iters)
{
  return normalize_rows(sinkhorn_transport(similarity, epsilon, iters));
}

namespace {

// Cosine similarity that treats a zero vector as orthogonal to everything;
// centroid means can cancel out mid-iteration.
double
cosine_or_zero(const Eigen::Ref<const Eigen::RowVectorXd>& a,
               const Eigen::Ref<const Eigen::RowVectorXd>& b)
{
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double
point_distance(const Points& a, Index i, const Points& b, Index k)
{
  return (a.row(i) - b.row(k)).norm();
}

} // namespace

KMeansResult
constrained_kmeans(const RowMatrix& features,
                   const Points& positions,
                   const KMeansParams& params,
                   const KMeansObserver& observer)
{
  const Index n = features.rows();
  const Index k = params.k;
  if (positions.rows() != n)
    throw InvalidArgument("constrained_kmeans: one position per feature row required");
  if (k < 1 || k > n)
    throw InvalidArgument("constrained_kmeans: K = " + std::to_string(k) + " but only " +
                          std::to_string(n) + " samples");
  if (!(params.radius > 0.0))
    throw InvalidArgument("constrained_kmeans: radius must be positive");
  if (params.iters < 1)
    throw InvalidArgument("constrained_kmeans: iters must be at least 1");
  if (!features.allFinite() || !positions.allFinite())
    throw InvalidArgument("constrained_kmeans: non-finite input");

  Rng rng(derive_seed(params.seed, 0x6b6d));
  const auto start = static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(n)));
  const IndexList init = farthest_point_sampling(positions, k, start);

  KMeansResult out;
  ClusterState& state = out.state;
  state.radius = params.radius;
  state.centroid_features.resize(k, features.cols());
  state.centroid_positions.resize(k, 3);
  for (Index c = 0; c < k; ++c) {
    state.centroid_features.row(c) = features.row(init[c]);
    state.centroid_positions.row(c) = positions.row(init[c]);
  }

  MaskMatrix mask(n, k);
  RowMatrix similarity(n, k);
  for (int it = 0; it < params.iters; ++it) {
    out.relaxed_rows = 0;
    for (Index i = 0; i < n; ++i) {
      bool any = false;
      Index nearest = 0;
      double nearest_d = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double d = point_distance(positions, i, state.centroid_positions, c);
        mask(i, c) = d <= params.radius ? 1 : 0;
        any = any || mask(i, c);
        if (d < nearest_d) {
          nearest_d = d;
          nearest = c;
        }
      }
      if (!any) {
        mask(i, nearest) = 1;
        ++out.relaxed_rows;
      }
      for (Index c = 0; c < k; ++c)
        similarity(i, c) = mask(i, c)
                             ? cosine_or_zero(features.row(i), state.centroid_features.row(c))
                             : kMasked;
    }

    out.assignment = sinkhorn_normalize(similarity, params.sinkhorn_epsilon, params.sinkhorn_iters);
    if (observer)
      observer(it, mask, out.assignment);

    const Eigen::RowVectorXd mass = out.assignment.colwise().sum();
    for (Index c = 0; c < k; ++c) {
      if (mass[c] > 0.0) {
        state.centroid_features.row(c) = out.assignment.col(c).transpose() * features / mass[c];
        state.centroid_positions.row(c) = out.assignment.col(c).transpose() * positions / mass[c];
        continue;
      }
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        double closest = std::numeric_limits<double>::infinity();
        for (Index o = 0; o < k; ++o)
          closest = std::min(closest, point_distance(positions, i, state.centroid_positions, o));
        if (closest > far_d) {
          far_d = closest;
          far = i;
        }
      }
      state.centroid_features.row(c) = features.row(far);
      state.centroid_positions.row(c) = positions.row(far);
      ++out.reseeded_clusters;
    }
    out.iterations = it + 1;
  }
  return out;
}

double
cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b)
{
  if (a.size() != b.size())
    throw InvalidArgument("cosine: vectors differ in length");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw NumericalError("cosine: zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

RowMatrix
student_assignment(const RowMatrix& features, const RowMatrix& centroids, double tau)
{
  if (!(tau > 0.0))
    throw InvalidArgument("student_assignment: temperature must be positive");
  if (features.cols() != centroids.cols())
    throw InvalidArgument("student_assignment: feature and centroid widths differ");
  if (centroids.rows() < 1)
    throw InvalidArgument("student_assignment: no centroids");
  RowMatrix logits(features.rows(), centroids.rows());
  for (Index i = 0; i < features.rows(); ++i)
    for (Index c = 0; c < centroids.rows(); ++c)
      logits(i, c) = cosine(features.row(i), centroids.row(c)) / tau;
  return softmax_rows(logits);
}

double
assignment_loss(const RowMatrix& teacher, const RowMatrix& student, const IndexList& rows)
{
  if (teacher.rows() != student.rows() || teacher.cols() != student.cols())
    throw InvalidArgument("assignment_loss: teacher and student shapes differ");
  if (rows.empty())
    return 0.0;
  double total = 0.0;
  for (Index n : rows) {
    if (n < 0 || n >= teacher.rows())
      throw InvalidArgument("assignment_loss: row index out of range");
    for (Index c = 0; c < teacher.cols(); ++c) {
      const double t = teacher(n, c);
      if (t <= 0.0)
        continue;
      const double s = student(n, c);
      if (!(s > 0.0))
        throw NumericalError("assignment_loss: student assigns zero mass where the teacher does not");
      total += t * std::log(t / s);
    }
  }
  return total / static_cast<double>(rows.size());
}

double
local_distill_loss(const RowMatrix& student, const RowMatrix& target)
{
  if (student.rows() != target.rows() || student.cols() != target.cols())
    throw InvalidArgument("local_distill_loss: shapes differ (" + std::to_string(student.rows()) +
                          "x" + std::to_string(student.cols()) + " vs " +
                          std::to_string(target.rows()) + "x" + std::to_string(target.cols()) + ")");
  if (student.rows() < 1)
    throw InvalidArgument("local_distill_loss: no rows");
  double total = 0.0;
  for (Index i = 0; i < student.rows(); ++i)
    total += 1.0 - cosine(student.row(i), target.row(i));
  return total / static_cast<double>(student.rows());
}

double
global_distill_loss(const Eigen::RowVectorXd& student, const Eigen::RowVectorXd& target)
{
  return 1.0 - cosine(student, target);
}

LossReport
total_loss(double assign, double distill_local, double distill_global, double lambda_l, double lambda_g)
{
  if (!std::isfinite(assign) || !std::isfinite(distill_local) || !std::isfinite(distill_global))
    throw NumericalError("total_loss: non-finite component");
  LossReport r;
  r.assign = assign;
  r.distill_local = distill_local;
  r.distill_global = distill_global;
  r.lambda_l = lambda_l;
  r.lambda_g = lambda_g;
  r.total = assign + lambda_l * distill_local + lambda_g * distill_global;
  return r;
}

std::vector<double>
ema_update(const std::vector<double>& teacher, const std::vector<double>& student, double momentum)
{
  if (teacher.size() != student.size())
    throw InvalidArgument("ema_update: parameter vectors differ in length");
  if (!(momentum >= 0.0 && momentum <= 1.0))
    throw InvalidArgument("ema_update: momentum must lie in [0, 1]");
  std::vector<double> out(teacher.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = momentum * teacher[i] + (1.0 - momentum) * student[i];
  return out;
}

std::vector<double>
finite_diff_grad(const LossFn& loss, const std::vector<double>& params, double h)
{
  if (!(h > 0.0))
    throw InvalidArgument("finite_diff_grad: step must be positive");
  std::vector<double> grad(params.size());
  std::vector<double> probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + h;
    const double up = loss(probe);
    probe[i] = params[i] - h;
    const double down = loss(probe);
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericalError("finite_diff_grad: loss is not finite near the parameters");
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace grad {

RowMatrix
assignment_loss_logits(const RowMatrix& teacher, const RowMatrix& logits, const IndexList& rows)
{
  if (teacher.rows() != logits.rows() || teacher.cols() != logits.cols())
    throw InvalidArgument("assignment gradient: shapes differ");
  RowMatrix g = RowMatrix::Zero(logits.rows(), logits.cols());
  if (rows.empty())
    return g;
  const RowMatrix s = softmax_rows(logits);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (Index n : rows)
    g.row(n) += inv * (s.row(n) * teacher.row(n).sum() - teacher.row(n));
  return g;
}

namespace {

Eigen::RowVectorXd
one_minus_cos_grad(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b)
{
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw NumericalError("cosine gradient: zero-norm vector");
  const double c = a.dot(b) / (na * nb);
  return -(b / (na * nb) - c * a / (na * na));
}

} // namespace

RowMatrix
local_distill_student(const RowMatrix& student, const RowMatrix& target)
{
  if (student.rows() != target.rows() || student.cols() != target.cols())
    throw InvalidArgument("local distill gradient: shapes differ");
  RowMatrix g(student.rows(), student.cols());
  const double inv = 1.0 / static_cast<double>(student.rows());
  for (Index i = 0; i < student.rows(); ++i)
    g.row(i) = inv * one_minus_cos_grad(student.row(i), target.row(i));
  return g;
}

Eigen::RowVectorXd
global_distill_student(const Eigen::RowVectorXd& student, const Eigen::RowVectorXd& target)
{
  return one_minus_cos_grad(student, target);
}

} // namespace grad

} // namespace s4tok::ssl
