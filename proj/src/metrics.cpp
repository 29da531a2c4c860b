#include "s4tok/metrics.hpp"

#include <algorithm>
#include <map>

#include "s4tok/error.hpp"

namespace s4tok {

namespace {

std::map<Index, Index>
label_counts(const TokenPatch& patch, const std::vector<Index>& labels)
{
  std::map<Index, Index> counts;
  for (Index m : patch.members) {
    if (m < 0 || m >= static_cast<Index>(labels.size()))
      throw InvalidArgument("patch member outside the label array");
    ++counts[labels[static_cast<std::size_t>(m)]];
  }
  return counts;
}

} // namespace

double
patch_purity(const std::vector<TokenPatch>& patches, const std::vector<Index>& labels)
{
  if (patches.empty())
    return 1.0;
  double sum = 0.0;
  for (const auto& p : patches) {
    if (p.members.empty())
      throw InvalidArgument("empty patch");
    Index best = 0;
    for (const auto& [label, count] : label_counts(p, labels))
      best = std::max(best, count);
    sum += static_cast<double>(best) / static_cast<double>(p.members.size());
  }
  return sum / static_cast<double>(patches.size());
}

double
boundary_crossing_rate(const std::vector<TokenPatch>& patches, const std::vector<Index>& labels)
{
  if (patches.empty())
    return 0.0;
  Index crossing = 0;
  for (const auto& p : patches)
    if (label_counts(p, labels).size() > 1)
      ++crossing;
  return static_cast<double>(crossing) / static_cast<double>(patches.size());
}

double
membership_agreement(const std::vector<TokenPatch>& a, const std::vector<TokenPatch>& b)
{
  const std::size_t total = std::max(a.size(), b.size());
  if (total == 0)
    return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    if (a[i].center_index == b[i].center_index && a[i].members == b[i].members)
      ++same;
  return static_cast<double>(same) / static_cast<double>(total);
}

double
max_offset_deviation(const std::vector<TokenPatch>& a, const std::vector<TokenPatch>& b)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i].members != b[i].members)
      continue;
    const auto& oa = a[i].offsets;
    const auto& ob = b[i].offsets;
    if (oa.rows() != ob.rows() || oa.cols() != ob.cols())
      throw InvalidArgument("offset blocks differ in shape");
    if (oa.size() == 0)
      continue;
    const double diff = (oa - ob).cwiseAbs().maxCoeff();
    const double ref = oa.cwiseAbs().maxCoeff();
    worst = std::max(worst, ref > 0.0 ? diff / ref : diff);
  }
  return worst;
}

} // namespace s4tok
