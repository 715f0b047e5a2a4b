#include "colorrec/evaluate.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "colorrec/error.hpp"
#include "colorrec/random.hpp"
#include "json.hpp"

namespace colorrec {

const MetricRow* EvalReport::row(std::size_t n) const {
  for (const auto& r : metrics) {
    if (r.n == n) return &r;
  }
  return nullptr;
}

namespace {

struct Cases {
  std::vector<RankedCodes> predictions;
  std::vector<ColorCode> truths;
};

void score(const MaskedPredictor& predictor, const ColorSequence& seq, std::span<const int> positions,
           std::size_t depth, Cases& out) {
  const auto ranked = predictor.predict_topn(seq, positions, depth);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    RankedCodes codes;
    codes.reserve(ranked[i].size());
    for (const auto& s : ranked[i]) codes.push_back(s.code);
    out.predictions.push_back(std::move(codes));
    out.truths.push_back(seq.tokens[static_cast<std::size_t>(positions[i])].code);
  }
}

std::vector<MetricRow> metric_rows(const Cases& cases, std::span<const std::size_t> ns,
                                   const VocabConfig& cfg) {
  std::vector<MetricRow> rows;
  for (std::size_t n : ns) {
    rows.push_back({n, accuracy_at_n(cases.predictions, cases.truths, n),
                    similarity_at_n(cases.predictions, cases.truths, n, cfg)});
  }
  return rows;
}

// Color positions in a per-sequence random order; prefixes give nested masks.
std::vector<int> mask_order(const ColorSequence& seq, std::uint64_t seed, std::size_t index) {
  std::vector<int> order = seq.color_positions();
  Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  rng.shuffle(order.begin(), order.end());
  return order;
}

std::size_t max_depth(std::span<const std::size_t> ns) {
  std::size_t d = 1;
  for (std::size_t n : ns) d = std::max(d, n);
  return d;
}

}  // namespace

EvalReport evaluate(const MaskedPredictor& predictor, std::span<const ColorSequence> sequences,
                    const EvalOptions& opts) {
  if (opts.masked_count < 1) throw Error(ErrorCode::invalid_argument, "masked count must be at least 1");
  if (opts.ns.empty()) throw Error(ErrorCode::invalid_argument, "no N values requested");
  const std::size_t depth = max_depth(opts.ns);
  const auto m = static_cast<std::size_t>(opts.masked_count);

  EvalReport report;
  report.masked_count = opts.masked_count;
  report.seed = opts.seed;
  report.model = opts.model;
  report.corpus_hash = corpus_hash(sequences);

  std::vector<std::vector<int>> orders;
  orders.reserve(sequences.size());
  for (std::size_t i = 0; i < sequences.size(); ++i) orders.push_back(mask_order(sequences[i], opts.seed, i));

  Cases cases;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (orders[i].size() < m) {
      ++report.skipped;
      continue;
    }
    std::vector<int> positions(orders[i].begin(), orders[i].begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(positions.begin(), positions.end());
    score(predictor, sequences[i], positions, depth, cases);
    ++report.sequences;
  }
  if (report.sequences == 0) {
    throw Error(ErrorCode::invalid_argument,
                "no sequence has " + std::to_string(m) + " color tokens to mask");
  }
  report.targets = cases.truths.size();
  report.metrics = metric_rows(cases, opts.ns, predictor.vocab().config());

  for (int k = 1; k <= opts.max_masked; ++k) {
    MaskedCountRow row;
    row.masked = k;
    Cases sub;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      if (orders[i].size() < static_cast<std::size_t>(k)) {
        ++row.skipped;
        continue;
      }
      std::vector<int> positions(orders[i].begin(), orders[i].begin() + k);
      std::sort(positions.begin(), positions.end());
      score(predictor, sequences[i], positions, 1, sub);
      ++row.eligible;
    }
    row.targets = sub.truths.size();
    if (row.eligible > 0) row.accuracy_at_1 = accuracy_at_n(sub.predictions, sub.truths, 1);
    report.by_masked_count.push_back(row);
  }
  return report;
}

EvalReport evaluate_probes(const MaskedPredictor& predictor, std::span<const SequenceRecord> records,
                           const EvalOptions& opts) {
  if (opts.ns.empty()) throw Error(ErrorCode::invalid_argument, "no N values requested");
  EvalReport report;
  report.seed = opts.seed;
  report.model = opts.model;
  const auto seqs = sequences_of(records);
  report.corpus_hash = corpus_hash(seqs);
  Cases cases;
  for (const auto& r : records) {
    if (r.probe < 0 || r.sequence.tokens[static_cast<std::size_t>(r.probe)].kind != TokenKind::color) {
      ++report.skipped;
      continue;
    }
    const int pos = r.probe;
    score(predictor, r.sequence, std::span<const int>(&pos, 1), max_depth(opts.ns), cases);
    ++report.sequences;
  }
  if (report.sequences == 0) throw Error(ErrorCode::invalid_argument, "no records carry a probe slot");
  report.targets = cases.truths.size();
  report.metrics = metric_rows(cases, opts.ns, predictor.vocab().config());
  return report;
}

bool is_monotone(const EvalReport& report) {
  std::vector<MetricRow> rows = report.metrics;
  std::sort(rows.begin(), rows.end(), [](const MetricRow& x, const MetricRow& y) { return x.n < y.n; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].accuracy < rows[i - 1].accuracy) return false;
    if (rows[i].similarity > rows[i - 1].similarity) return false;
  }
  return true;
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::invalid_argument, "no reports to average");
  EvalReport out = reports.front();
  const double k = static_cast<double>(reports.size());
  for (std::size_t r = 1; r < reports.size(); ++r) {
    if (reports[r].metrics.size() != out.metrics.size() ||
        reports[r].by_masked_count.size() != out.by_masked_count.size()) {
      throw Error(ErrorCode::invalid_argument, "reports follow different protocols");
    }
    for (std::size_t i = 0; i < out.metrics.size(); ++i) {
      out.metrics[i].accuracy += reports[r].metrics[i].accuracy;
      out.metrics[i].similarity += reports[r].metrics[i].similarity;
    }
    for (std::size_t i = 0; i < out.by_masked_count.size(); ++i) {
      out.by_masked_count[i].accuracy_at_1 += reports[r].by_masked_count[i].accuracy_at_1;
    }
  }
  for (auto& m : out.metrics) {
    m.accuracy /= k;
    m.similarity /= k;
  }
  for (auto& row : out.by_masked_count) row.accuracy_at_1 /= k;
  return out;
}

std::string corpus_hash(std::span<const ColorSequence> sequences) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::invalid_argument, "SHA-256 unavailable");
  }
  for (const auto& seq : sequences) {
    const std::string line = serialize_record({seq, -1, {}}) + "\n";
    EVP_DigestUpdate(ctx, line.data(), line.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& r : report.metrics) {
    metrics.push_back({{"n", r.n}, {"accuracy", r.accuracy}, {"similarity", r.similarity}});
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : report.by_masked_count) {
    table.push_back({{"masked", r.masked},
                     {"eligible", r.eligible},
                     {"skipped", r.skipped},
                     {"targets", r.targets},
                     {"accuracy_at_1", r.accuracy_at_1}});
  }
  nlohmann::json j{{"masked_count", report.masked_count},
                   {"sequences", report.sequences},
                   {"skipped", report.skipped},
                   {"targets", report.targets},
                   {"metrics", metrics},
                   {"by_masked_count", table},
                   {"seed", report.seed},
                   {"model", report.model},
                   {"corpus_hash", report.corpus_hash}};
  return j.dump(2);
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  char line[128];
  os << "masked " << report.masked_count << ", " << report.sequences << " sequences, "
     << report.targets << " targets, " << report.skipped << " skipped\n";
  os << "   N  accuracy  similarity\n";
  for (const auto& r : report.metrics) {
    std::snprintf(line, sizeof line, "%4zu  %8.4f  %10.4f\n", r.n, r.accuracy, r.similarity);
    os << line;
  }
  if (!report.by_masked_count.empty()) {
    os << "\n   m  eligible  skipped  acc@1\n";
    for (const auto& r : report.by_masked_count) {
      std::snprintf(line, sizeof line, "%4d  %8zu  %7zu  %.4f\n", r.masked, r.eligible, r.skipped,
                    r.accuracy_at_1);
      os << line;
    }
  }
  if (!report.model.empty()) os << "model: " << report.model << "\n";
  os << "seed: " << report.seed << "\ncorpus: " << report.corpus_hash << "\n";
  return os.str();
}

}  // namespace colorrec
