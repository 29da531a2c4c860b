#include "s4tok/partition.hpp"

#include <unordered_map>

#include "s4tok/error.hpp"

namespace s4tok {

SuperpointPartition
SuperpointPartition::from_labels(const std::vector<Index>& raw)
{
  SuperpointPartition p;
  p.labels.resize(raw.size());
  std::unordered_map<Index, Index> renumber;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = renumber.try_emplace(raw[i], static_cast<Index>(renumber.size()));
    if (inserted)
      p.sizes.push_back(0);
    p.labels[i] = it->second;
    ++p.sizes[it->second];
  }
  return p;
}

void
SuperpointPartition::validate() const
{
  if (labels.empty())
    throw InvalidArgument("partition is empty");
  std::vector<Index> counted(sizes.size(), 0);
  for (Index l : labels) {
    if (l < 0 || l >= count())
      throw InvalidArgument("partition label " + std::to_string(l) + " outside [0, " +
                            std::to_string(count()) + ")");
    ++counted[l];
  }
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (counted[s] == 0)
      throw InvalidArgument("superpoint " + std::to_string(s) + " is empty");
    if (counted[s] != sizes[s])
      throw InvalidArgument("superpoint sizes disagree with labels");
  }
}

bool
same_partition(const std::vector<Index>& a, const std::vector<Index>& b)
{
  if (a.size() != b.size())
    return false;
  return SuperpointPartition::from_labels(a).labels ==
         SuperpointPartition::from_labels(b).labels;
}

} // namespace s4tok
