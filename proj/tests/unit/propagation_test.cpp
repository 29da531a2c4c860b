#include <gtest/gtest.h>

#include "oracles.hpp"
#include "s4tok/error.hpp"
#include "s4tok/propagation.hpp"
#include "s4tok/rng.hpp"

using namespace s4tok;

namespace {

RowMatrix
gaussian(Index rows, Index cols, Rng& rng)
{
  RowMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = standard_normal(rng);
  return m;
}

// Random instance where every point label is carried by some centroid.
PropagationInputs
random_instance(Index h, Index k, Index labels, Index d, Rng& rng)
{
  PropagationInputs in;
  in.points = gaussian(h, 3, rng);
  in.centroids = gaussian(k, 3, rng);
  in.centroid_features = gaussian(k, d, rng);
  for (Index j = 0; j < k; ++j)
    in.centroid_labels.push_back(j % labels);
  for (Index i = 0; i < h; ++i)
    in.point_labels.push_back(static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(std::min(k, labels)))));
  return in;
}

} // namespace

TEST(Propagation, SingleSourceCopy)
{
  PropagationInputs in;
  in.points = Points(2, 3);
  in.points << 0.3, 0.1, 0.0, -4, 2, 1;
  in.point_labels = { 1, 1 };
  in.centroids = Points(2, 3);
  in.centroids << 0, 0, 0, 5, 5, 5;
  in.centroid_labels = { 0, 1 };
  in.centroid_features = RowMatrix(2, 2);
  in.centroid_features << 1.5, -2, 0.125, 7;
  const auto out = propagate_features(in);
  EXPECT_EQ(out.features.row(0), in.centroid_features.row(1));
  EXPECT_EQ(out.features.row(1), in.centroid_features.row(1));
  EXPECT_EQ(out.fallback_count, 0);
}

TEST(Propagation, ClosedFormRatio)
{
  PropagationInputs in;
  in.points = Points::Zero(1, 3);
  in.point_labels = { 0 };
  in.centroids = Points(2, 3);
  in.centroids << 1, 0, 0, 0, 3, 0;
  in.centroid_labels = { 0, 0 };
  in.centroid_features = RowMatrix(2, 1);
  in.centroid_features << 4, 8;
  in.epsilon = 1e-12;
  const auto w = propagation_weights(in);
  EXPECT_NEAR(w(0, 0), 0.75, 1e-11);
  EXPECT_NEAR(w(0, 1), 0.25, 1e-11);
  EXPECT_NEAR(propagate_features(in).features(0, 0), 5.0, 1e-10);
}

TEST(Propagation, MatchesNaiveLoop)
{
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto in = random_instance(50, 8, 3, 5, rng);
    const auto got = propagate_features(in).features;
    const auto want = oracle::naive_propagation(in.points, in.point_labels, in.centroids,
                                                in.centroid_labels, in.centroid_features, in.epsilon);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Propagation, RowStochasticMaskedConvex)
{
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto in = random_instance(40, 10, 4, 3, rng);
    const auto w = propagation_weights(in);
    const auto f = propagate_features(in).features;
    for (Index i = 0; i < w.rows(); ++i) {
      EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-9);
      Eigen::RowVectorXd lo = Eigen::RowVectorXd::Constant(3, 1e300), hi = -lo;
      for (Index k = 0; k < w.cols(); ++k) {
        if (w(i, k) > 0) {
          EXPECT_EQ(in.point_labels[i], in.centroid_labels[k]);
          lo = lo.cwiseMin(in.centroid_features.row(k));
          hi = hi.cwiseMax(in.centroid_features.row(k));
        }
        else {
          EXPECT_NE(in.point_labels[i], in.centroid_labels[k]);
        }
      }
      EXPECT_TRUE(((f.row(i) - lo).array() >= -1e-12).all());
      EXPECT_TRUE(((hi - f.row(i)).array() >= -1e-12).all());
    }
  }
}

TEST(Propagation, TranslationInvariant)
{
  Rng rng(6);
  auto in = random_instance(30, 6, 2, 4, rng);
  const auto base = propagate_features(in).features;
  in.points.rowwise() += Eigen::RowVector3d(0.5, -0.25, 1.0);
  in.centroids.rowwise() += Eigen::RowVector3d(0.5, -0.25, 1.0);
  EXPECT_LE((propagate_features(in).features - base).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Propagation, FallbackUsesThreeNearest)
{
  PropagationInputs in;
  in.points = Points::Zero(2, 3);
  in.points(1, 0) = 0.5;
  in.point_labels = { 9, 0 };
  in.centroids = Points(4, 3);
  in.centroids << 1, 0, 0, 2, 0, 0, 4, 0, 0, 100, 0, 0;
  in.centroid_labels = { 0, 1, 2, 3 };
  in.centroid_features = RowMatrix(4, 1);
  in.centroid_features << 1, 2, 3, 1000;
  in.epsilon = 1e-12;
  const auto out = propagate_features(in);
  EXPECT_EQ(out.fallback_count, 1);
  EXPECT_EQ(out.is_fallback[0], 1);
  EXPECT_EQ(out.is_fallback[1], 0);
  // Inverse distances 1, 1/2, 1/4 normalized.
  EXPECT_NEAR(out.features(0, 0), (1 * 1 + 2 * 0.5 + 3 * 0.25) / 1.75, 1e-10);
  EXPECT_EQ(out.features(1, 0), 1.0);
  const auto w = propagation_weights(in);
  EXPECT_EQ(w(0, 3), 0.0);
  EXPECT_NEAR(w.row(0).sum(), 1.0, 1e-12);
}

TEST(Propagation, FewerThanThreeCentroidsFallback)
{
  PropagationInputs in;
  in.points = Points::Zero(1, 3);
  in.point_labels = { 5 };
  in.centroids = Points(1, 3);
  in.centroids << 3, 0, 0;
  in.centroid_labels = { 0 };
  in.centroid_features = RowMatrix::Constant(1, 2, 0.5);
  EXPECT_EQ(propagate_features(in).features, in.centroid_features);
}

TEST(Propagation, Validation)
{
  Rng rng(7);
  auto in = random_instance(5, 3, 2, 2, rng);
  auto bad = in;
  bad.epsilon = 0;
  EXPECT_THROW(propagate_features(bad), InvalidArgument);
  bad = in;
  bad.centroid_features = RowMatrix::Zero(2, 2);
  EXPECT_THROW(propagate_features(bad), InvalidArgument);
  bad = in;
  bad.centroids = Points(0, 3);
  bad.centroid_labels.clear();
  bad.centroid_features = RowMatrix(0, 2);
  EXPECT_THROW(propagate_features(bad), InvalidArgument);
  bad = in;
  bad.point_labels.pop_back();
  EXPECT_THROW(propagate_features(bad), InvalidArgument);
}

TEST(Pool, Examples)
{
  const auto part = SuperpointPartition::from_labels({ 0, 1, 0, 2, 1 });
  const RowMatrix same = RowMatrix::Constant(5, 3, 0.7);
  EXPECT_EQ(pool_superpoint_features(same, part), RowMatrix::Constant(3, 3, 0.7));

  RowMatrix f(5, 1);
  f << 1, 2, 3, 4, 5;
  const auto pooled = pool_superpoint_features(f, part);
  EXPECT_EQ(pooled(0, 0), 2.0);
  EXPECT_EQ(pooled(1, 0), 3.5);
  EXPECT_EQ(pooled(2, 0), 4.0); // singleton
}

TEST(Pool, MatchesSortOracle)
{
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Index h = 1 + static_cast<Index>(uniform_below(rng, 200));
    std::vector<Index> labels(static_cast<std::size_t>(h));
    for (auto& l : labels)
      l = static_cast<Index>(uniform_below(rng, 12));
    const auto part = SuperpointPartition::from_labels(labels);
    const auto f = gaussian(h, 4, rng);
    const auto want = oracle::pool_by_sort(f, part.labels, part.count());
    EXPECT_LE((pool_superpoint_features(f, part) - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pool, RejectsSizeMismatch)
{
  EXPECT_THROW(pool_superpoint_features(RowMatrix::Zero(3, 2), SuperpointPartition::from_labels({ 0, 1 })),
               InvalidArgument);
}
