#include "s4tok/rng.hpp"

#include <algorithm>

#include "s4tok/error.hpp"

namespace s4tok {

IndexList
sample_without_replacement(const IndexList& items, std::size_t count, Rng& rng)
{
  if (count >= items.size())
    return items;

  // Partial Fisher-Yates over positions, then restore input order.
  std::vector<std::size_t> slots(items.size());
  for (std::size_t i = 0; i < slots.size(); ++i)
    slots[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_below(rng, slots.size() - i);
    std::swap(slots[i], slots[j]);
  }
  slots.resize(count);
  std::sort(slots.begin(), slots.end());

  IndexList out;
  out.reserve(count);
  for (auto s : slots)
    out.push_back(items[s]);
  return out;
}

Index
draw_multinomial(const std::vector<double>& weights, Rng& rng)
{
  if (weights.empty())
    throw InvalidArgument("multinomial draw over empty support");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidArgument("multinomial weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0))
    throw InvalidArgument("multinomial weights sum to zero");

  const double u = uniform_unit(rng) * total;
  double acc = 0.0;
  Index last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0)
      last_positive = static_cast<Index>(i);
    acc += weights[i];
    if (u < acc)
      return static_cast<Index>(i);
  }
  return last_positive;
}

} // namespace s4tok
