#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "s4tok/error.hpp"
#include "s4tok/rng.hpp"
#include "s4tok/ssl.hpp"

using namespace s4tok;
using namespace s4tok::ssl;

namespace {

RowMatrix
gaussian(Index rows, Index cols, Rng& rng)
{
  RowMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = standard_normal(rng);
  return m;
}

RowMatrix
random_distributions(Index rows, Index cols, Rng& rng)
{
  RowMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = 0.05 + uniform_unit(rng);
  return normalize_rows(m);
}

std::vector<double>
flatten(const RowMatrix& m)
{
  return { m.data(), m.data() + m.size() };
}

RowMatrix
unflatten(const std::vector<double>& v, Index rows, Index cols)
{
  return Eigen::Map<const RowMatrix>(v.data(), rows, cols);
}

double
rel_err(const RowMatrix& analytic, const RowMatrix& numeric)
{
  return (analytic - numeric).cwiseAbs().maxCoeff() / std::max(numeric.cwiseAbs().maxCoeff(), 1e-8);
}

} // namespace

TEST(Mask, Examples)
{
  const auto m = random_mask(10, 0.6, 1);
  EXPECT_EQ(m.masked.size(), 6u);
  EXPECT_EQ(m.visible.size(), 4u);
  EXPECT_TRUE(random_mask(7, 0.0, 1).masked.empty());
  const auto again = random_mask(10, 0.6, 1);
  EXPECT_EQ(m.masked, again.masked);
  EXPECT_EQ(m.visible, again.visible);
}

TEST(Mask, CardinalitiesAllSizes)
{
  for (int pct : { 0, 1, 10, 25, 29, 33, 50, 60, 70, 75, 90, 99 }) {
    const double ratio = pct / 100.0;
    for (Index n = 1; n <= 500; ++n) {
      const auto m = random_mask(n, ratio, static_cast<std::uint64_t>(n));
      const Index want = pct * n / 100; // exact integer floor
      ASSERT_EQ(static_cast<Index>(m.masked.size()), want) << "n=" << n << " pct=" << pct;
      ASSERT_EQ(static_cast<Index>(m.visible.size()), n - want);
      std::set<Index> all(m.masked.begin(), m.masked.end());
      all.insert(m.visible.begin(), m.visible.end());
      ASSERT_EQ(static_cast<Index>(all.size()), n);
      ASSERT_EQ(*all.rbegin(), n - 1);
    }
  }
}

TEST(Mask, Rejects)
{
  EXPECT_THROW(random_mask(0, 0.5, 0), InvalidArgument);
  EXPECT_THROW(random_mask(5, 1.0, 0), InvalidArgument);
  EXPECT_THROW(random_mask(5, -0.1, 0), InvalidArgument);
}

TEST(Decoder, SingleVisibleIsCopied)
{
  Rng rng(1);
  const RowMatrix v = gaussian(1, 6, rng);
  const auto out = query_decoder_forward(gaussian(5, 6, rng), gaussian(5, 6, rng), v, 2);
  for (Index i = 0; i < 5; ++i)
    EXPECT_EQ(out.features.row(i), v.row(0));
}

TEST(Decoder, EqualScoresAverage)
{
  RowMatrix v(2, 2);
  v << 1, 0, 0, 1;
  RowMatrix q(1, 2);
  q << 0.7, 0.7;
  const auto out = query_decoder_forward(q, RowMatrix::Zero(1, 2), v);
  EXPECT_NEAR(out.features(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(out.features(0, 1), 0.5, 1e-15);
}

TEST(Decoder, RandomHullAndDirectSoftmax)
{
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const Index heads = 1 + (t % 3);
    const Index d = 4 * heads;
    const RowMatrix q = gaussian(7, d, rng), e = gaussian(7, d, rng), v = gaussian(5, d, rng);
    const auto out = query_decoder_forward(q, e, v, heads);
    ASSERT_EQ(out.attention.size(), static_cast<std::size_t>(heads));
    const Index dh = d / heads;
    for (Index h = 0; h < heads; ++h) {
      const auto& a = out.attention[static_cast<std::size_t>(h)];
      for (Index i = 0; i < a.rows(); ++i) {
        EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-9);
        // Direct recomputation without max subtraction.
        Eigen::RowVectorXd s(v.rows());
        for (Index j = 0; j < v.rows(); ++j)
          s[j] = std::exp((q.row(i) + e.row(i)).segment(h * dh, dh).dot(v.row(j).segment(h * dh, dh)) /
                          std::sqrt(static_cast<double>(dh)));
        s /= s.sum();
        EXPECT_LE((s - a.row(i)).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
    const Eigen::RowVectorXd lo = v.colwise().minCoeff(), hi = v.colwise().maxCoeff();
    for (Index i = 0; i < out.features.rows(); ++i) {
      EXPECT_TRUE(((out.features.row(i) - lo).array() >= -1e-12).all());
      EXPECT_TRUE(((hi - out.features.row(i)).array() >= -1e-12).all());
    }
  }
}

TEST(Decoder, Rejects)
{
  EXPECT_THROW(query_decoder_forward(RowMatrix::Zero(2, 4), RowMatrix::Zero(2, 4), RowMatrix(0, 4)),
               InvalidArgument);
  EXPECT_THROW(query_decoder_forward(RowMatrix::Zero(2, 4), RowMatrix::Zero(2, 4), RowMatrix::Zero(1, 4), 3),
               InvalidArgument);
  EXPECT_THROW(query_decoder_forward(RowMatrix::Zero(2, 4), RowMatrix::Zero(3, 4), RowMatrix::Zero(1, 4)),
               InvalidArgument);
}

TEST(Sinkhorn, ConstantIsUniform)
{
  const auto g = sinkhorn_normalize(RowMatrix::Constant(2, 2, 0.3), 0.05, 3);
  EXPECT_EQ(g, RowMatrix::Constant(2, 2, 0.5));
}

TEST(Sinkhorn, MaskedEntriesStayZero)
{
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    RowMatrix s = gaussian(9, 4, rng);
    for (Index i = 0; i < s.rows(); ++i)
      for (Index j = 0; j < s.cols(); ++j)
        if (j != i % 4 && uniform_unit(rng) < 0.4)
          s(i, j) = kMasked;
    const auto g = sinkhorn_normalize(s, 0.05, 3);
    for (Index i = 0; i < s.rows(); ++i) {
      EXPECT_NEAR(g.row(i).sum(), 1.0, 1e-9);
      for (Index j = 0; j < s.cols(); ++j)
        if (s(i, j) == kMasked)
          EXPECT_EQ(g(i, j), 0.0);
    }
  }
}

TEST(Sinkhorn, MatchesFixedPointOracle)
{
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    RowMatrix s(6, 3);
    for (Index i = 0; i < s.size(); ++i)
      s.data()[i] = 2.0 * uniform_unit(rng) - 1.0;
    const auto plan = sinkhorn_transport(s, 0.05, 50);
    const auto want = oracle::sinkhorn_fixed_point(s, 0.05, 50);
    EXPECT_LE((plan - want).cwiseAbs().maxCoeff(), 1e-12);

    // Iterated to convergence the plan meets both marginals.
    const auto converged = oracle::sinkhorn_fixed_point(s, 0.05, 20000);
    const Eigen::RowVectorXd cols = converged.colwise().sum();
    for (Index j = 0; j < 3; ++j)
      EXPECT_NEAR(cols[j], 1.0 / 3.0, 1e-3);
    EXPECT_LE((sinkhorn_transport(s, 0.05, 20000) - converged).cwiseAbs().maxCoeff(), 1e-12);

    const auto g = sinkhorn_normalize(s, 0.05, 50);
    for (Index i = 0; i < 6; ++i)
      EXPECT_NEAR(g.row(i).sum(), 1.0, 1e-9);
  }
}

TEST(Sinkhorn, FullyMaskedRowRejected)
{
  RowMatrix s = RowMatrix::Zero(2, 2);
  s.row(1).setConstant(kMasked);
  EXPECT_THROW(sinkhorn_normalize(s, 0.05, 3), InvalidArgument);
  EXPECT_THROW(sinkhorn_normalize(RowMatrix::Zero(2, 2), 0.0, 3), InvalidArgument);
}

TEST(KMeans, SingleClusterIsMean)
{
  Rng rng(5);
  const RowMatrix f = gaussian(20, 4, rng);
  const Points p = gaussian(20, 3, rng);
  KMeansParams params;
  params.k = 1;
  params.radius = std::numeric_limits<double>::infinity();
  const auto r = constrained_kmeans(f, p, params);
  EXPECT_LE((r.state.centroid_features - f.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((r.state.centroid_positions - p.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.iterations, 20);
  for (Index i = 0; i < 20; ++i)
    EXPECT_EQ(r.assignment(i, 0), 1.0);
}

namespace {

// Eight points in two blobs four apart; features point in opposite directions.
void
two_blobs(RowMatrix& f, Points& p, Rng& rng)
{
  f.resize(8, 3);
  p.resize(8, 3);
  for (Index i = 0; i < 8; ++i) {
    const double side = i < 4 ? 0.0 : 4.0;
    p.row(i) = Eigen::RowVector3d(side + 0.3 * uniform_unit(rng), 0.3 * uniform_unit(rng), 0.3 * uniform_unit(rng));
    f.row(i) = Eigen::RowVector3d(i < 4 ? 1.0 : -1.0, 0.2 * uniform_unit(rng), 0.2 * uniform_unit(rng));
  }
}

// Best split of eight points into two nonempty groups by within-group
// squared deviation of [position, feature].
unsigned
best_two_partition(const RowMatrix& f, const Points& p)
{
  RowMatrix x(8, 6);
  x << p, f;
  double best = std::numeric_limits<double>::infinity();
  unsigned arg = 0;
  for (unsigned mask = 1; mask < 255; ++mask) {
    double cost = 0.0;
    for (int side = 0; side < 2; ++side) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(6);
      int count = 0;
      for (int i = 0; i < 8; ++i)
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
          mean += x.row(i);
          ++count;
        }
      mean /= count;
      for (int i = 0; i < 8; ++i)
        if (((mask >> i) & 1u) == static_cast<unsigned>(side))
          cost += (x.row(i) - mean).squaredNorm();
    }
    if (cost < best) {
      best = cost;
      arg = mask;
    }
  }
  return arg;
}

} // namespace

TEST(KMeans, TwoBlobsCertifiedByEnumeration)
{
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    RowMatrix f;
    Points p;
    two_blobs(f, p, rng);
    KMeansParams params;
    params.k = 2;
    params.radius = 1.0; // above blob diameter, below separation
    params.seed = static_cast<std::uint64_t>(t);
    const auto r = constrained_kmeans(f, p, params);
    const unsigned best = best_two_partition(f, p);
    unsigned got = 0;
    for (int i = 0; i < 8; ++i) {
      Index arg;
      r.assignment.row(i).maxCoeff(&arg);
      got |= static_cast<unsigned>(arg) << i;
    }
    EXPECT_TRUE(got == best || got == (~best & 0xffu));
    // Block diagonal: zero mass across blobs.
    const Index a = r.assignment(0, 0) > 0 ? 0 : 1;
    for (Index i = 0; i < 8; ++i) {
      EXPECT_EQ(r.assignment(i, i < 4 ? 1 - a : a), 0.0);
      EXPECT_NEAR(r.assignment.row(i).sum(), 1.0, 1e-9);
    }
  }
}

TEST(KMeans, MaskRespectedEveryIteration)
{
  Rng rng(7);
  const RowMatrix f = gaussian(60, 5, rng);
  const Points p = gaussian(60, 3, rng);
  KMeansParams params;
  params.k = 6;
  params.radius = 0.8;
  int calls = 0;
  const auto r = constrained_kmeans(f, p, params, [&](int, const auto& mask, const RowMatrix& g) {
    ++calls;
    for (Index i = 0; i < g.rows(); ++i) {
      EXPECT_NEAR(g.row(i).sum(), 1.0, 1e-9);
      for (Index c = 0; c < g.cols(); ++c)
        if (!mask(i, c))
          EXPECT_EQ(g(i, c), 0.0);
    }
  });
  EXPECT_EQ(calls, 20);
  const Eigen::RowVector3d lo = p.colwise().minCoeff(), hi = p.colwise().maxCoeff();
  for (Index c = 0; c < params.k; ++c) {
    EXPECT_TRUE(((r.state.centroid_positions.row(c) - lo).array() >= -1e-12).all());
    EXPECT_TRUE(((hi - r.state.centroid_positions.row(c)).array() >= -1e-12).all());
  }
}

TEST(KMeans, IsolatedRowRelaxed)
{
  Points p(5, 3);
  p << 0, 0, 0, 0.1, 0, 0, 0, 0.1, 0, 0.1, 0.1, 0, 50, 50, 50;
  RowMatrix f = RowMatrix::Ones(5, 2);
  f(4, 1) = -1;
  KMeansParams params;
  params.k = 1;
  params.radius = 0.5;
  params.iters = 1;
  params.seed = 0;
  // Force the start inside the cluster by trying seeds.
  KMeansResult r;
  for (std::uint64_t s = 0;; ++s) {
    params.seed = s;
    r = constrained_kmeans(f, p, params);
    if (r.relaxed_rows == 1)
      break;
  }
  for (Index i = 0; i < 5; ++i)
    EXPECT_NEAR(r.assignment.row(i).sum(), 1.0, 1e-12);
}

TEST(KMeans, Rejects)
{
  KMeansParams params;
  params.k = 4;
  EXPECT_THROW(constrained_kmeans(RowMatrix::Ones(3, 2), Points::Zero(3, 3), params), InvalidArgument);
  params.k = 1;
  params.radius = 0;
  EXPECT_THROW(constrained_kmeans(RowMatrix::Ones(3, 2), Points::Zero(3, 3), params), InvalidArgument);
}

TEST(StudentAssignment, Examples)
{
  RowMatrix f(1, 2);
  f << 1, 1;
  RowMatrix c1(1, 2);
  c1 << 3, -2;
  EXPECT_EQ(student_assignment(f, c1, 0.1)(0, 0), 1.0);

  RowMatrix c2(2, 2);
  c2 << 1, 0, 0, 1;
  const auto g = student_assignment(f, c2, 0.1);
  EXPECT_NEAR(g(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g(0, 1), 0.5, 1e-15);

  Rng rng(8);
  const RowMatrix feat = gaussian(6, 4, rng), cents = gaussian(3, 4, rng);
  RowMatrix scaled_feat = feat;
  scaled_feat.row(2) *= 37.5;
  EXPECT_LE((student_assignment(feat, cents, 0.1) - student_assignment(scaled_feat, cents, 0.1)).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_THROW(student_assignment(RowMatrix::Zero(1, 2), c2, 0.1), NumericalError);
}

TEST(AssignmentLoss, Examples)
{
  Rng rng(9);
  const auto p = random_distributions(4, 3, rng);
  EXPECT_NEAR(assignment_loss(p, p, { 0, 1, 2, 3 }), 0.0, 1e-12);

  RowMatrix t(1, 2), s(1, 2);
  t << 1, 0;
  s << 0.5, 0.5;
  EXPECT_NEAR(assignment_loss(t, s, { 0 }), std::log(2.0), 1e-12);
  EXPECT_EQ(assignment_loss(t, s, {}), 0.0);

  RowMatrix s0(1, 2);
  s0 << 0, 1;
  EXPECT_THROW(assignment_loss(t, s0, { 0 }), NumericalError);
}

TEST(AssignmentLoss, MatchesNaiveSum)
{
  Rng rng(10);
  for (int r = 0; r < 20; ++r) {
    const auto t = random_distributions(6, 4, rng), s = random_distributions(6, 4, rng);
    const IndexList rows{ 1, 3, 4 };
    double want = 0.0;
    for (Index n : rows)
      for (Index k = 0; k < 4; ++k)
        want += t(n, k) * (std::log(t(n, k)) - std::log(s(n, k)));
    want /= 3.0;
    const double got = assignment_loss(t, s, rows);
    EXPECT_GE(got, 0.0);
    EXPECT_NEAR(got, want, 1e-12);
  }
}

TEST(DistillLoss, Examples)
{
  RowMatrix a(2, 2), o(2, 2);
  a << 1, 2, -3, 0.5;
  o << -2, 1, 0.5, 3;
  EXPECT_NEAR(local_distill_loss(a, a), 0.0, 1e-12);
  EXPECT_NEAR(local_distill_loss(a, -a), 2.0, 1e-12);
  EXPECT_NEAR(local_distill_loss(a, o), 1.0, 1e-12);
  EXPECT_NEAR(local_distill_loss(3.0 * a, 0.01 * a), 0.0, 1e-12);

  const Eigen::RowVectorXd v = a.row(0);
  EXPECT_NEAR(global_distill_loss(v, 4.0 * v), 0.0, 1e-12);
  EXPECT_NEAR(global_distill_loss(v, -v), 2.0, 1e-12);
  EXPECT_NEAR(global_distill_loss(v, o.row(0)), 1.0, 1e-12);
  EXPECT_THROW(global_distill_loss(v, Eigen::RowVectorXd::Zero(2)), NumericalError);
  EXPECT_THROW(local_distill_loss(a, RowMatrix::Ones(3, 2)), InvalidArgument);
}

TEST(TotalLoss, Composition)
{
  const auto r = total_loss(1.0, 0.4, 0.2);
  EXPECT_NEAR(r.total, 1.3, 1e-9);
  EXPECT_EQ(total_loss(0, 0, 0).total, 0.0);
  EXPECT_EQ(total_loss(0.7, 0.4, 0.2, 0, 0).total, 0.7);
  EXPECT_THROW(total_loss(std::nan(""), 0, 0), NumericalError);
}

TEST(Ema, Examples)
{
  EXPECT_EQ(ema_update({ 1, 2 }, { 5, 6 }, 1.0), (std::vector<double>{ 1, 2 }));
  EXPECT_EQ(ema_update({ 1, 2 }, { 5, 6 }, 0.0), (std::vector<double>{ 5, 6 }));
  EXPECT_NEAR(ema_update({ 1 }, { 0 }, 0.9)[0], 0.9, 1e-15);
  EXPECT_THROW(ema_update({ 1 }, { 0, 1 }, 0.5), InvalidArgument);
}

TEST(FiniteDiff, Quadratic)
{
  const auto g = finite_diff_grad([](const std::vector<double>& p) { return p[0] * p[0] + p[1] * p[1]; },
                                  { 1, 2 }, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
  const auto z = finite_diff_grad([](const std::vector<double>&) { return 3.0; }, { 1, 2, 3 }, 1e-5);
  for (double x : z)
    EXPECT_EQ(x, 0.0);
  EXPECT_THROW(finite_diff_grad([](const std::vector<double>&) { return std::nan(""); }, { 1 }, 1e-5),
               NumericalError);
}

TEST(Gradients, AssignmentLogits)
{
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto teacher = random_distributions(4, 3, rng);
    const RowMatrix logits = gaussian(4, 3, rng);
    const IndexList rows{ 0, 2, 3 };
    const auto analytic = grad::assignment_loss_logits(teacher, logits, rows);
    EXPECT_LE((analytic - oracle::kl_logit_gradient(teacher, logits, rows)).cwiseAbs().maxCoeff(), 1e-12);
    const auto numeric = finite_diff_grad(
      [&](const std::vector<double>& v) {
        return assignment_loss(teacher, softmax_rows(unflatten(v, 4, 3)), rows);
      },
      flatten(logits), 1e-6);
    EXPECT_LE(rel_err(analytic, unflatten(numeric, 4, 3)), 1e-4);
  }
}

TEST(Gradients, DistillStudent)
{
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const RowMatrix s = gaussian(5, 4, rng), e = gaussian(5, 4, rng);
    const auto numeric = finite_diff_grad(
      [&](const std::vector<double>& v) { return local_distill_loss(unflatten(v, 5, 4), e); }, flatten(s), 1e-6);
    EXPECT_LE(rel_err(grad::local_distill_student(s, e), unflatten(numeric, 5, 4)), 1e-4);

    const Eigen::RowVectorXd gs = s.row(0), ge = e.row(0);
    const auto gnum = finite_diff_grad(
      [&](const std::vector<double>& v) {
        return global_distill_loss(Eigen::Map<const Eigen::RowVectorXd>(v.data(), 4), ge);
      },
      flatten(gs), 1e-6);
    EXPECT_LE(rel_err(grad::global_distill_student(gs, ge), unflatten(gnum, 1, 4)), 1e-4);
  }
}
