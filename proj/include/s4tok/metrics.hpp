#pragma once

#include <vector>

#include "s4tok/tokenizer.hpp"

namespace s4tok {

/// Mean over patches of the fraction of members carrying the patch's
/// majority label.
double patch_purity(const std::vector<TokenPatch>& patches, const std::vector<Index>& labels);

/// Fraction of patches whose members carry more than one label.
double boundary_crossing_rate(const std::vector<TokenPatch>& patches,
                              const std::vector<Index>& labels);

/// Fraction of patch slots with the same center and the same member list
/// (order included) in both runs. Runs of different length count the
/// surplus slots as disagreeing.
double membership_agreement(const std::vector<TokenPatch>& a, const std::vector<TokenPatch>& b);

/// Largest per-patch ‖A − B‖_max / ‖A‖_max over patches with identical
/// members; zero-offset patches compare by absolute difference.
double max_offset_deviation(const std::vector<TokenPatch>& a, const std::vector<TokenPatch>& b);

} // namespace s4tok
