#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "colorrec/metrics.hpp"
#include "colorrec/predictor.hpp"
#include "colorrec/sequence.hpp"

namespace colorrec {

struct MetricRow {
  std::size_t n = 0;
  double accuracy = 0.0;
  double similarity = 0.0;
};

struct MaskedCountRow {
  int masked = 0;
  std::size_t eligible = 0;  // sequences with at least `masked` colors
  std::size_t skipped = 0;
  std::size_t targets = 0;
  double accuracy_at_1 = 0.0;
};

struct EvalReport {
  int masked_count = 1;
  std::size_t sequences = 0;  // evaluated
  std::size_t skipped = 0;    // too few colors for masked_count
  std::size_t targets = 0;    // masked slots scored
  std::vector<MetricRow> metrics;
  std::vector<MaskedCountRow> by_masked_count;
  std::uint64_t seed = 0;
  std::string model;        // free-form description supplied by the caller
  std::string corpus_hash;  // SHA-256 of the evaluated corpus, hex

  const MetricRow* row(std::size_t n) const;
};

struct EvalOptions {
  int masked_count = 1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> ns{1, 2, 3, 4, 5, 10};
  // Fill the per-masked-count table for m = 1..max_masked (0 disables).
  int max_masked = 5;
  std::string model;
};

// Masks `masked_count` random color slots per sequence and scores the
// predictor's rankings. Mask positions are drawn per sequence from the seed
// and nested across masked counts (the slots masked at m are a subset of
// those at m + 1). Throws when no sequence is eligible.
EvalReport evaluate(const MaskedPredictor& predictor, std::span<const ColorSequence> sequences,
                    const EvalOptions& opts = {});

// Scores only each record's probe slot; records without a probe are skipped.
EvalReport evaluate_probes(const MaskedPredictor& predictor, std::span<const SequenceRecord> records,
                           const EvalOptions& opts = {});

// Accuracy non-decreasing and similarity non-increasing in n.
bool is_monotone(const EvalReport& report);

// Mean of several reports over identical protocols (for mean-of-runs
// reporting). Metadata is taken from the first report.
EvalReport average_reports(std::span<const EvalReport> reports);

std::string corpus_hash(std::span<const ColorSequence> sequences);

std::string report_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace colorrec
