#include "s4tok/cut_pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "component_graph.hpp"
#include "s4tok/error.hpp"
#include "s4tok/min_cut.hpp"

namespace s4tok {

void
PottsProblem::validate() const
{
  if (features.rows() != graph.vertex_count())
    throw InvalidArgument("Potts problem: feature rows differ from graph vertex count");
  if (features.rows() < 1 || features.cols() < 1)
    throw InvalidArgument("Potts problem: empty feature matrix");
  if (!features.allFinite())
    throw InvalidArgument("Potts problem: non-finite features");
  if (!(mu >= 0.0) || !std::isfinite(mu))
    throw InvalidArgument("Potts problem: mu must be finite and non-negative");
}

double
potts_energy(const PottsProblem& problem, const std::vector<Index>& labels)
{
  const auto partition = SuperpointPartition::from_labels(labels);
  const RowMatrix& h = problem.features;
  RowMatrix means = RowMatrix::Zero(partition.count(), h.cols());
  for (Index i = 0; i < h.rows(); ++i)
    means.row(partition.labels[i]) += h.row(i);
  for (Index s = 0; s < partition.count(); ++s)
    means.row(s) /= double(partition.sizes[s]);

  double fidelity = 0.0;
  for (Index i = 0; i < h.rows(); ++i)
    fidelity += (h.row(i) - means.row(partition.labels[i])).squaredNorm();
  double boundary = 0.0;
  for (const Edge& e : problem.graph.edges())
    if (partition.labels[e.u] != partition.labels[e.v])
      boundary += e.weight;
  return fidelity + problem.mu * boundary;
}

namespace {

double
squared_deviation(const RowMatrix& h, const IndexList& members)
{
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(h.cols());
  for (Index i : members)
    mean += h.row(i);
  mean /= double(members.size());
  double sse = 0.0;
  for (Index i : members)
    sse += (h.row(i) - mean).squaredNorm();
  return sse;
}

// Two candidate values for a component: the mutually distant pair found by
// a double sweep (farthest from the mean, then farthest from that), refined
// by a few Lloyd steps. Returns false when the component is constant.
bool
two_means(const RowMatrix& h,
          const IndexList& members,
          int iters,
          Eigen::RowVectorXd& va,
          Eigen::RowVectorXd& vb)
{
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(h.cols());
  for (Index i : members)
    mean += h.row(i);
  mean /= double(members.size());

  auto farthest_from = [&](const Eigen::RowVectorXd& x) {
    Index best = members.front();
    double best_d = -1.0;
    for (Index i : members) {
      const double d = (h.row(i) - x).squaredNorm();
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  const Index a = farthest_from(mean);
  const Index b = farthest_from(h.row(a));
  va = h.row(a);
  vb = h.row(b);
  if (!((va - vb).squaredNorm() > 0.0))
    return false;

  for (int it = 0; it < iters; ++it) {
    Eigen::RowVectorXd sa = Eigen::RowVectorXd::Zero(h.cols());
    Eigen::RowVectorXd sb = Eigen::RowVectorXd::Zero(h.cols());
    Index na = 0;
    Index nb = 0;
    for (Index i : members) {
      if ((h.row(i) - va).squaredNorm() <= (h.row(i) - vb).squaredNorm()) {
        sa += h.row(i);
        ++na;
      } else {
        sb += h.row(i);
        ++nb;
      }
    }
    if (na == 0 || nb == 0)
      break;
    va = sa / double(na);
    vb = sb / double(nb);
  }
  return (va - vb).squaredNorm() > 0.0;
}

struct Split {
  /// Sub-component index per member (parallel to the member list).
  std::vector<Index> parts;
  Index part_count = 0;
  double gain = 0.0;
};

// Binary min cut of one component between values va / vb, followed by
// connected-component extraction of each side.
Split
propose_split(const PottsProblem& problem,
              const IndexList& members,
              const std::vector<Index>& local_of,
              int kmeans_iters)
{
  Split split;
  const RowMatrix& h = problem.features;
  Eigen::RowVectorXd va;
  Eigen::RowVectorXd vb;
  if (!two_means(h, members, kmeans_iters, va, vb))
    return split;

  const auto n = static_cast<Index>(members.size());
  FlowNetwork net(n);
  for (Index li = 0; li < n; ++li) {
    const Index i = members[li];
    const double cost_a = (h.row(i) - va).squaredNorm();
    const double cost_b = (h.row(i) - vb).squaredNorm();
    const double d = cost_b - cost_a;
    if (d > 0.0)
      net.add_terminal(li, d, 0.0);
    else if (d < 0.0)
      net.add_terminal(li, 0.0, -d);
  }
  const AdjacencyGraph& g = problem.graph;
  if (problem.mu > 0.0) {
    for (Index li = 0; li < n; ++li) {
      auto [first, last] = g.neighbors(members[li]);
      for (auto a = first; a != last; ++a) {
        const Index lj = local_of[a->to];
        if (lj > li) {
          const double c = problem.mu * a->weight;
          net.add_edge(li, lj, c, c);
        }
      }
    }
  }
  const auto cut = net.solve();

  // Flood fill within each side.
  split.parts.assign(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (split.parts[s] >= 0)
      continue;
    const Index id = split.part_count++;
    split.parts[s] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index lv = stack.back();
      stack.pop_back();
      auto [first, last] = g.neighbors(members[lv]);
      for (auto a = first; a != last; ++a) {
        const Index lw = local_of[a->to];
        if (lw < 0 || split.parts[lw] >= 0 || cut.source_side[lw] != cut.source_side[lv])
          continue;
        split.parts[lw] = id;
        stack.push_back(lw);
      }
    }
  }
  if (split.part_count < 2)
    return split;

  std::vector<IndexList> groups(static_cast<std::size_t>(split.part_count));
  for (Index li = 0; li < n; ++li)
    groups[split.parts[li]].push_back(members[li]);
  double after = 0.0;
  for (const auto& grp : groups)
    after += squared_deviation(h, grp);
  double new_boundary = 0.0;
  for (Index li = 0; li < n; ++li) {
    auto [first, last] = g.neighbors(members[li]);
    for (auto a = first; a != last; ++a) {
      const Index lj = local_of[a->to];
      if (lj > li && split.parts[lj] != split.parts[li])
        new_boundary += a->weight;
    }
  }
  split.gain = squared_deviation(h, members) - after - problem.mu * new_boundary;
  return split;
}

// Greedy merging of adjacent components while the energy drops by more
// than `threshold`; best gain first, ties by component ids.
std::vector<Index>
merge_pass(const PottsProblem& problem, const std::vector<Index>& labels, double threshold)
{
  detail::ComponentGraph cg(problem.graph, problem.features, labels);
  using Entry = std::tuple<double, Index, Index, std::uint64_t, std::uint64_t>;
  auto worse = [](const Entry& x, const Entry& y) {
    if (std::get<0>(x) != std::get<0>(y))
      return std::get<0>(x) < std::get<0>(y);
    return std::tie(std::get<1>(x), std::get<2>(x)) > std::tie(std::get<1>(y), std::get<2>(y));
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);
  auto push = [&](Index a, Index b) {
    if (a > b)
      std::swap(a, b);
    const double gain = problem.mu * cg.neighbors(a).at(b) - cg.merge_cost(a, b);
    if (gain > threshold)
      queue.emplace(gain, a, b, cg.version(a), cg.version(b));
  };
  for (Index c = 0; c < cg.component_count(); ++c)
    for (const auto& [d, w] : cg.neighbors(c))
      if (c < d)
        push(c, d);

  while (!queue.empty()) {
    const auto [gain, a, b, va, vb] = queue.top();
    queue.pop();
    if (!cg.alive(a) || !cg.alive(b) || cg.version(a) != va || cg.version(b) != vb)
      continue;
    cg.merge(a, b);
    for (const auto& [c, w] : cg.neighbors(a))
      push(a, c);
  }
  return cg.resolve(labels);
}

} // namespace

CutPursuitResult
cut_pursuit_l0(const PottsProblem& problem, const CutPursuitParams& params)
{
  problem.validate();
  if (params.max_iters < 1)
    throw InvalidArgument("cut pursuit: max_iters must be at least 1");
  const RowMatrix& h = problem.features;
  const Index n = h.rows();

  CutPursuitResult result;
  std::vector<Index> labels = problem.graph.connected_components();
  double energy = potts_energy(problem, labels);
  result.energy_trace.push_back(energy);

  if (problem.mu == 0.0) {
    // Without a boundary penalty every vertex can carry its own value.
    for (Index i = 0; i < n; ++i)
      labels[i] = i;
    energy = potts_energy(problem, labels);
    result.energy_trace.push_back(energy);
    result.iterations = 1;
  } else {
    const double min_gain = params.min_gain >= 0.0 ? params.min_gain : 1e-6 * energy;
    std::vector<Index> local_of(static_cast<std::size_t>(n), -1);

    for (int it = 0; it < params.max_iters; ++it) {
      const double threshold = std::max(min_gain, 1e-12 * energy);
      const auto part = SuperpointPartition::from_labels(labels);
      std::vector<IndexList> members(static_cast<std::size_t>(part.count()));
      for (Index i = 0; i < n; ++i)
        members[part.labels[i]].push_back(i);

      std::vector<Index> next(static_cast<std::size_t>(n));
      Index next_id = 0;
      bool accepted = false;
      for (Index c = 0; c < part.count(); ++c) {
        const IndexList& m = members[c];
        Split split;
        if (m.size() >= 2) {
          for (std::size_t li = 0; li < m.size(); ++li)
            local_of[m[li]] = static_cast<Index>(li);
          split = propose_split(problem, m, local_of, params.kmeans_iters);
          for (Index i : m)
            local_of[i] = -1;
        }
        if (split.part_count >= 2 && split.gain > threshold) {
          accepted = true;
          for (std::size_t li = 0; li < m.size(); ++li)
            next[m[li]] = next_id + split.parts[li];
          next_id += split.part_count;
        } else {
          for (Index i : m)
            next[i] = next_id;
          ++next_id;
        }
      }

      if (accepted)
        next = merge_pass(problem, next, threshold);
      const double next_energy = potts_energy(problem, next);
      result.iterations = it + 1;
      if (!accepted || !(next_energy < energy)) {
        result.energy_trace.push_back(energy);
        break;
      }
      labels = std::move(next);
      energy = next_energy;
      result.energy_trace.push_back(energy);
    }
  }

  result.partition = SuperpointPartition::from_labels(labels);
  result.energy = energy;
  result.values = RowMatrix::Zero(result.partition.count(), h.cols());
  for (Index i = 0; i < n; ++i)
    result.values.row(result.partition.labels[i]) += h.row(i);
  for (Index s = 0; s < result.partition.count(); ++s)
    result.values.row(s) /= double(result.partition.sizes[s]);
  return result;
}

PathSegmentation
path_potts_dp(const RowMatrix& features, double mu)
{
  const Index n = features.rows();
  if (n < 1)
    throw InvalidArgument("path_potts_dp: empty path");
  if (!(mu >= 0.0))
    throw InvalidArgument("path_potts_dp: mu must be non-negative");
  const Index d = features.cols();

  RowMatrix prefix = RowMatrix::Zero(n + 1, d);
  for (Index i = 0; i < n; ++i)
    prefix.row(i + 1) = prefix.row(i) + features.row(i);
  // Within-segment squared deviation of [i, j), two-pass around the mean.
  auto segment_cost = [&](Index i, Index j) {
    const Eigen::RowVectorXd mean = (prefix.row(j) - prefix.row(i)) / double(j - i);
    double sse = 0.0;
    for (Index t = i; t < j; ++t)
      sse += (features.row(t) - mean).squaredNorm();
    return sse;
  };

  std::vector<double> best(static_cast<std::size_t>(n) + 1,
                           std::numeric_limits<double>::infinity());
  std::vector<Index> cut_at(static_cast<std::size_t>(n) + 1, 0);
  best[0] = -mu;
  for (Index j = 1; j <= n; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double e = best[i] + mu + segment_cost(i, j);
      if (e < best[j]) {
        best[j] = e;
        cut_at[j] = i;
      }
    }
  }

  std::vector<Index> starts;
  for (Index j = n; j > 0; j = cut_at[j])
    starts.push_back(cut_at[j]);
  std::reverse(starts.begin(), starts.end());

  PathSegmentation out;
  out.labels.resize(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const Index end = s + 1 < starts.size() ? starts[s + 1] : n;
    for (Index t = starts[s]; t < end; ++t)
      out.labels[t] = static_cast<Index>(s);
  }
  out.energy = best[n];
  return out;
}

} // namespace s4tok
