#pragma once

#include <span>
#include <vector>

#include "colorrec/color.hpp"

namespace colorrec {

// Ranked candidate codes for one evaluation case, best first.
using RankedCodes = std::vector<ColorCode>;

// Fraction of cases whose truth is among the first n candidates.
// Throws on length mismatch or no cases.
double accuracy_at_n(std::span<const RankedCodes> predictions, std::span<const ColorCode> truths,
                     std::size_t n);

// Mean over cases of the smallest CIEDE2000 distance between the truth's bin
// center and the bin centers of the first n candidates.
double similarity_at_n(std::span<const RankedCodes> predictions, std::span<const ColorCode> truths,
                       std::size_t n, const VocabConfig& cfg = {});

}  // namespace colorrec
