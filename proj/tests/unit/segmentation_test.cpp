#include <gtest/gtest.h>

#include <queue>
#include <set>

#include "oracles.hpp"
#include "s4tok/cut_pursuit.hpp"
#include "s4tok/error.hpp"
#include "s4tok/graph.hpp"
#include "s4tok/min_cut.hpp"
#include "s4tok/rng.hpp"
#include "s4tok/segmentation.hpp"
#include "s4tok/synthetic.hpp"

using namespace s4tok;

namespace {

RowMatrix
step_features(const std::vector<std::pair<Index, double>>& runs, Index dims = 6)
{
  Index n = 0;
  for (const auto& r : runs)
    n += r.first;
  RowMatrix f = RowMatrix::Zero(n, dims);
  Index row = 0;
  for (const auto& [len, level] : runs)
    for (Index i = 0; i < len; ++i)
      f.row(row++).setConstant(level);
  return f;
}

// Flood fill of each label class restricted to the graph.
bool
labels_are_connected(const AdjacencyGraph& g, const std::vector<Index>& labels)
{
  const Index n = g.vertex_count();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::set<Index> started;
  for (Index s = 0; s < n; ++s) {
    if (seen[static_cast<std::size_t>(s)])
      continue;
    if (!started.insert(labels[static_cast<std::size_t>(s)]).second)
      return false; // second region with the same label
    std::queue<Index> q;
    q.push(s);
    seen[static_cast<std::size_t>(s)] = 1;
    while (!q.empty()) {
      const Index v = q.front();
      q.pop();
      for (const auto& e : g.edges()) {
        Index w = -1;
        if (e.u == v)
          w = e.v;
        else if (e.v == v)
          w = e.u;
        if (w >= 0 && !seen[static_cast<std::size_t>(w)] &&
            labels[static_cast<std::size_t>(w)] == labels[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          q.push(w);
        }
      }
    }
  }
  return true;
}

std::vector<Index>
dp_labels_for(const RowMatrix& f, double mu)
{
  return path_potts_dp(f, mu).labels;
}

} // namespace

TEST(KnnGraph, CollinearChain)
{
  Points p(3, 3);
  p << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  const auto g = build_knn_graph(PointCloud::from_positions(p), 1);
  ASSERT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(g.edges()[0].u, 0);
  EXPECT_EQ(g.edges()[0].v, 1);
  EXPECT_EQ(g.edges()[1].u, 1);
  EXPECT_EQ(g.edges()[1].v, 2);
}

TEST(KnnGraph, DegreeAtLeastK)
{
  const auto cloud = synthetic::make_uniform_cube(300, 4);
  const auto g = build_knn_graph(cloud, 10);
  for (Index v = 0; v < g.vertex_count(); ++v)
    EXPECT_GE(g.degree(v), 10);
  for (const auto& e : g.edges()) {
    EXPECT_LT(e.u, e.v);
    EXPECT_EQ(e.weight, 1.0);
  }
}

TEST(KnnGraph, DuplicatePointsNoSelfLoops)
{
  Points p(6, 3);
  p << 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 2, 0, 0;
  const auto g = build_knn_graph(PointCloud::from_positions(p), 2);
  std::set<std::pair<Index, Index>> seen;
  for (const auto& e : g.edges()) {
    EXPECT_NE(e.u, e.v);
    EXPECT_TRUE(seen.insert({ e.u, e.v }).second);
  }
}

TEST(KnnGraph, RejectsBadK)
{
  const auto cloud = synthetic::make_uniform_cube(5, 1);
  EXPECT_THROW(build_knn_graph(cloud, 5), InvalidArgument);
  EXPECT_THROW(build_knn_graph(cloud, 0), InvalidArgument);
}

TEST(AdjacencyGraph, NormalizesEdges)
{
  AdjacencyGraph g(4, { { 1, 0, 1.0 }, { 0, 1, 2.0 }, { 2, 2, 1.0 }, { 3, 2, 0.5 } });
  ASSERT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(g.edges()[0].weight, 2.0);
  EXPECT_EQ(g.connected_components(), (std::vector<Index>{ 0, 0, 1, 1 }));
  EXPECT_THROW(AdjacencyGraph(2, { { 0, 1, -1.0 } }), InvalidArgument);
  EXPECT_THROW(AdjacencyGraph(2, { { 0, 2, 1.0 } }), InvalidArgument);
}

TEST(MinCut, TwoVertexHandComputed)
{
  // v0: source 1, sink 2; v1: source 3, sink 1; edge 0↔1 capacity 0.5.
  // Options: {} = 1+3 = 4, {0} = 2+3+0.5 = 5.5, {1} = 1+1+0.5 = 2.5,
  // {0,1} = 2+1 = 3. Minimum 2.5 with only v1 on the source side.
  FlowNetwork net(2);
  net.add_terminal(0, 1, 2);
  net.add_terminal(1, 3, 1);
  net.add_edge(0, 1, 0.5, 0.5);
  const auto cut = net.solve();
  EXPECT_NEAR(cut.value, 2.5, 1e-12);
  EXPECT_EQ(cut.source_side, (std::vector<char>{ 0, 1 }));
}

TEST(MinCut, ZeroCapacities)
{
  FlowNetwork net(3);
  net.add_edge(0, 1, 0, 0);
  net.add_edge(1, 2, 0, 0);
  EXPECT_EQ(net.solve().value, 0.0);
}

TEST(MinCut, MatchesExhaustiveBipartition)
{
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(uniform_below(rng, 12));
    std::vector<double> src(static_cast<std::size_t>(n)), snk(static_cast<std::size_t>(n));
    FlowNetwork net(n);
    for (Index v = 0; v < n; ++v) {
      src[v] = uniform_unit(rng) < 0.3 ? 0.0 : 5 * uniform_unit(rng);
      snk[v] = uniform_unit(rng) < 0.3 ? 0.0 : 5 * uniform_unit(rng);
      net.add_terminal(v, src[v], snk[v]);
    }
    std::vector<oracle::CutEdge> edges;
    for (Index u = 0; u < n; ++u)
      for (Index v = u + 1; v < n; ++v)
        if (uniform_unit(rng) < 0.4) {
          const double a = 3 * uniform_unit(rng), b = 3 * uniform_unit(rng);
          edges.push_back({ u, v, a, b });
          net.add_edge(u, v, a, b);
        }
    const auto cut = net.solve();
    const double want = oracle::exhaustive_min_cut(src, snk, edges);
    EXPECT_NEAR(cut.value, want, 1e-9 * std::max(1.0, want)) << "trial " << trial;

    // The reported side achieves the reported value.
    double priced = 0.0;
    for (Index v = 0; v < n; ++v)
      priced += cut.source_side[v] ? snk[v] : src[v];
    for (const auto& e : edges) {
      if (cut.source_side[e.u] && !cut.source_side[e.v])
        priced += e.cuv;
      if (cut.source_side[e.v] && !cut.source_side[e.u])
        priced += e.cvu;
    }
    EXPECT_NEAR(priced, cut.value, 1e-9 * std::max(1.0, want));
  }
}

TEST(PathDp, ConstantPath)
{
  const auto seg = path_potts_dp(step_features({ { 10, 0.7 } }), 0.5);
  EXPECT_EQ(seg.labels, std::vector<Index>(10, 0));
  EXPECT_NEAR(seg.energy, 0.0, 1e-24);
}

TEST(PathDp, TwoLevelStep)
{
  // Step of height 1 over 6 dims, 5 + 5 vertices: one segment costs
  // 10 · 6 · 0.25 = 15, two cost μ.
  const RowMatrix f = step_features({ { 5, 0.0 }, { 5, 1.0 } });
  const auto seg = path_potts_dp(f, 1.0);
  EXPECT_EQ(seg.labels, (std::vector<Index>{ 0, 0, 0, 0, 0, 1, 1, 1, 1, 1 }));
  EXPECT_NEAR(seg.energy, 1.0, 1e-12);
  EXPECT_EQ(path_potts_dp(f, 20.0).labels, std::vector<Index>(10, 0));
}

TEST(PathDp, HugePenaltyGivesOneSegment)
{
  Rng rng(2);
  RowMatrix f(30, 6);
  for (Index i = 0; i < f.size(); ++i)
    f.data()[i] = standard_normal(rng);
  EXPECT_EQ(path_potts_dp(f, 1e9).labels, std::vector<Index>(30, 0));
}

TEST(PathDp, MatchesExhaustiveEnumeration)
{
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 1 + static_cast<Index>(uniform_below(rng, 12));
    RowMatrix f(n, 2);
    for (Index i = 0; i < n; ++i)
      f.row(i) << std::floor(3 * uniform_unit(rng)) + 0.1 * standard_normal(rng), uniform_unit(rng);
    const double mu = 0.05 + 2.0 * uniform_unit(rng);
    const auto seg = path_potts_dp(f, mu);
    const auto [energy, labels] = oracle::exhaustive_path_potts(f, mu);
    EXPECT_NEAR(seg.energy, energy, 1e-9);
    EXPECT_EQ(seg.labels, labels);
  }
}

TEST(CutPursuit, ConstantFeaturesOnePerComponent)
{
  // Two disjoint paths 0-1-2 and 3-4.
  PottsProblem pb;
  pb.features = RowMatrix::Constant(5, 6, 0.3);
  pb.graph = AdjacencyGraph(5, { { 0, 1, 1 }, { 1, 2, 1 }, { 3, 4, 1 } });
  pb.mu = 0.5;
  const auto res = cut_pursuit_l0(pb);
  EXPECT_EQ(res.partition.count(), 2);
  EXPECT_TRUE(same_partition(res.partition.labels, { 0, 0, 0, 1, 1 }));
  EXPECT_EQ(res.energy, 0.0);
}

TEST(CutPursuit, ZeroPenaltyPerVertex)
{
  Rng rng(5);
  PottsProblem pb;
  pb.features = RowMatrix(20, 6);
  for (Index i = 0; i < pb.features.size(); ++i)
    pb.features.data()[i] = uniform_unit(rng);
  pb.graph = path_graph(20);
  pb.mu = 0.0;
  const auto res = cut_pursuit_l0(pb);
  EXPECT_EQ(res.partition.count(), 20);
  EXPECT_EQ(res.energy, 0.0);
}

TEST(CutPursuit, ChainStepMatchesDp)
{
  PottsProblem pb;
  pb.features = step_features({ { 20, 0.0 }, { 20, 1.0 } });
  pb.graph = path_graph(40);
  pb.mu = 0.1;
  const auto res = cut_pursuit_l0(pb);
  const auto dp = path_potts_dp(pb.features, pb.mu);
  EXPECT_EQ(res.partition.count(), 2);
  EXPECT_TRUE(same_partition(res.partition.labels, dp.labels));
  EXPECT_NEAR(res.energy, dp.energy, 1e-12);
}

TEST(CutPursuit, RecoversPiecewiseConstantPathsInCertifiedInterval)
{
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 8 + static_cast<Index>(uniform_below(rng, 33)); // ≤ 40
    std::vector<std::pair<Index, double>> runs;
    Index left = n;
    double level = 0.0;
    while (left > 0) {
      const Index len = std::min<Index>(left, 3 + static_cast<Index>(uniform_below(rng, 10)));
      level += (uniform_unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + uniform_unit(rng));
      runs.push_back({ len, level });
      left -= len;
    }
    const RowMatrix f = step_features(runs);
    std::vector<Index> truth;
    for (std::size_t r = 0; r < runs.size(); ++r)
      truth.insert(truth.end(), static_cast<std::size_t>(runs[r].first), static_cast<Index>(r));

    // Recovery interval certified by the DP: μ must be positive and small
    // enough that every true boundary pays for itself. Bisect its top end.
    double lo = 1e-9, hi = 1e3;
    ASSERT_TRUE(same_partition(dp_labels_for(f, lo), truth)) << "trial " << trial;
    for (int it = 0; it < 60; ++it) {
      const double mid = std::sqrt(lo * hi);
      (same_partition(dp_labels_for(f, mid), truth) ? lo : hi) = mid;
    }
    const double mu = lo * 0.5;
    ASSERT_TRUE(same_partition(dp_labels_for(f, mu), truth));

    PottsProblem pb;
    pb.features = f;
    pb.graph = path_graph(n);
    pb.mu = mu;
    const auto res = cut_pursuit_l0(pb);
    EXPECT_TRUE(same_partition(res.partition.labels, truth)) << "trial " << trial << " mu " << mu;
    EXPECT_NEAR(res.energy, path_potts_dp(f, mu).energy, 1e-9);
  }
}

TEST(CutPursuit, EnergyTraceMonotoneAndAboveDp)
{
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 10 + static_cast<Index>(uniform_below(rng, 31));
    RowMatrix f(n, 6);
    for (Index i = 0; i < n; ++i)
      for (Index d = 0; d < 6; ++d)
        f(i, d) = std::floor(static_cast<double>(i) / 7.0) * 0.8 + 0.3 * standard_normal(rng);
    PottsProblem pb;
    pb.features = f;
    pb.graph = path_graph(n);
    pb.mu = 0.05 + uniform_unit(rng);
    const auto res = cut_pursuit_l0(pb);
    for (std::size_t i = 1; i < res.energy_trace.size(); ++i)
      EXPECT_LE(res.energy_trace[i], res.energy_trace[i - 1]);
    EXPECT_GE(res.energy, path_potts_dp(f, pb.mu).energy - 1e-9);
    EXPECT_NEAR(res.energy, potts_energy(pb, res.partition.labels), 1e-9);
    EXPECT_TRUE(labels_are_connected(pb.graph, res.partition.labels));
  }
}

TEST(CutPursuit, GeneralGraphComponentsConnected)
{
  const auto cloud = synthetic::make_uniform_cube(400, 9);
  PottsProblem pb;
  pb.graph = build_knn_graph(cloud, 6);
  pb.features = RowMatrix(400, 3);
  for (Index i = 0; i < 400; ++i)
    pb.features.row(i) << (cloud.positions(i, 0) > 0.5), (cloud.positions(i, 1) > 0.3), 0.0;
  pb.mu = 0.2;
  const auto res = cut_pursuit_l0(pb);
  EXPECT_TRUE(labels_are_connected(pb.graph, res.partition.labels));
  for (std::size_t i = 1; i < res.energy_trace.size(); ++i)
    EXPECT_LE(res.energy_trace[i], res.energy_trace[i - 1]);
  EXPECT_GE(res.partition.count(), 4);
}

TEST(CutPursuit, RejectsBadProblem)
{
  PottsProblem pb;
  pb.features = RowMatrix::Zero(3, 2);
  pb.graph = path_graph(4);
  EXPECT_THROW(cut_pursuit_l0(pb), InvalidArgument);
  pb.graph = path_graph(3);
  pb.mu = -1;
  EXPECT_THROW(cut_pursuit_l0(pb), InvalidArgument);
}

TEST(Segment, PerpendicularPlanesGiveTwoDominantSuperpoints)
{
  const auto scene = synthetic::make_perpendicular_planes(4000, 0.002, 3);
  const auto seg = segment(scene.cloud, {});
  std::vector<Index> sizes = seg.partition.sizes;
  std::sort(sizes.rbegin(), sizes.rend());
  ASSERT_GE(sizes.size(), 2u);
  EXPECT_GE(static_cast<double>(sizes[0] + sizes[1]), 0.95 * 4000);
  EXPECT_TRUE(labels_are_connected(build_knn_graph(scene.cloud, 10), seg.partition.labels));
  for (std::size_t i = 1; i < seg.energy_trace.size(); ++i)
    EXPECT_LE(seg.energy_trace[i], seg.energy_trace[i - 1]);
}

TEST(Segment, ScaleInvariantPartition)
{
  const auto scene = synthetic::make_scene(3000, 0.005, 12);
  const auto base = segment(scene.cloud, {});
  for (double c : { 0.01, 100.0 }) {
    const auto other = segment(scaled(scene.cloud, c), {});
    EXPECT_TRUE(same_partition(base.partition.labels, other.partition.labels)) << "scale " << c;
  }
}

TEST(Segment, MinSizeFloor)
{
  const auto scene = synthetic::make_scene(3000, 0.005, 13);
  SegmentationParams params;
  params.min_size = 25;
  const auto seg = segment(scene.cloud, params);
  for (Index s : seg.partition.sizes)
    EXPECT_GE(s, 25);
  EXPECT_NO_THROW(seg.partition.validate());
}

TEST(Segment, EnforceMinSizeMergesIntoClosestMean)
{
  // Path 0..5: a singleton at vertex 2 between two runs; its feature is
  // closer to the right-hand run.
  const AdjacencyGraph g = path_graph(6);
  RowMatrix f(6, 1);
  f << 0, 0, 0.9, 1, 1, 1;
  std::vector<Index> labels{ 0, 0, 1, 2, 2, 2 };
  const Index merges = enforce_min_size(g, f, 2, labels);
  EXPECT_EQ(merges, 1);
  EXPECT_TRUE(same_partition(labels, { 0, 0, 1, 1, 1, 1 }));
}
