#include "colorrec/metrics.hpp"

#include <algorithm>
#include <limits>

#include "colorrec/error.hpp"

namespace colorrec {
namespace {

void check_aligned(std::size_t predictions, std::size_t truths, std::size_t n) {
  if (predictions != truths) {
    throw Error(ErrorCode::invalid_argument, "predictions and truths differ in length (" +
                                                 std::to_string(predictions) + " vs " +
                                                 std::to_string(truths) + ")");
  }
  if (truths == 0) throw Error(ErrorCode::invalid_argument, "no evaluation cases");
  if (n == 0) throw Error(ErrorCode::invalid_argument, "n must be positive");
}

}  // namespace

double accuracy_at_n(std::span<const RankedCodes> predictions, std::span<const ColorCode> truths,
                     std::size_t n) {
  check_aligned(predictions.size(), truths.size(), n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto& p = predictions[i];
    const auto end = p.begin() + static_cast<std::ptrdiff_t>(std::min(n, p.size()));
    if (std::find(p.begin(), end, truths[i]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

double similarity_at_n(std::span<const RankedCodes> predictions, std::span<const ColorCode> truths,
                       std::size_t n, const VocabConfig& cfg) {
  check_aligned(predictions.size(), truths.size(), n);
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto& p = predictions[i];
    if (p.empty()) throw Error(ErrorCode::invalid_argument, "case without candidates");
    const LabColor truth = code_center(truths[i], cfg);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::min(n, p.size()); ++k) {
      best = std::min(best, ciede2000(code_center(p[k], cfg), truth));
    }
    total += best;
  }
  return total / static_cast<double>(truths.size());
}

}  // namespace colorrec
