#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "colorrec/document.hpp"
#include "colorrec/sequence.hpp"

namespace colorrec {

// Codes per group, in slot order.
struct ThemeTemplate {
  CodePalettes palettes;
  int probe = -1;  // designated evaluation position, -1 for none
  std::string tag;
  double weight = 0.0;  // sampling probability
};

struct SynthOptions {
  std::size_t n_docs = 2000;
  std::uint64_t rule_seed = 0;
  std::size_t pool_size = 32;
  std::size_t themes = 28;
  // Pairs of documents whose image and svg palettes are swapped and whose
  // text color depends on which way round they are.
  std::size_t segment_pairs = 8;
  double pair_share = 0.3;
  double min_pool_distance = 10.0;  // CIEDE2000 between pool bin centers
  int canvas_width = 120;
  int canvas_height = 90;
};

struct GeneratorSpec {
  std::vector<ColorCode> pool;
  std::vector<ThemeTemplate> templates;
  // Best achievable top-1 accuracy, counted over templates with one random
  // color masked. "with segments" sees (token, segment) multisets, "without"
  // sees token multisets only; neither sees positions.
  double bayes_with_segments = 0.0;
  double bayes_without_segments = 0.0;
  // Same, restricted to the probe slot of segment-dependent pairs.
  double pair_bayes_with_segments = 0.0;
  double pair_bayes_without_segments = 0.0;
};

struct SynthCorpus {
  std::vector<SequenceRecord> train, validation, test;  // 80/10/10
  std::vector<GraphicDocument> test_documents;         // aligned with `test`
  GeneratorSpec spec;
};

// Throws Error(invalid_argument) for n_docs < 100 or an unsatisfiable pool.
GeneratorSpec make_generator_spec(const SynthOptions& opts);

// Renders a template as a layered document. Image and svg areas strictly
// decrease within each group, and earlier text slots get more text lines, so
// palette order reproduces slot order.
GraphicDocument render_template(const ThemeTemplate& t, std::uint64_t layout_seed,
                                const SynthOptions& opts = {});

// Documents are rendered and pushed through palette extraction and
// encoding; identical options give identical corpora.
SynthCorpus synth_corpus(const SynthOptions& opts);

}  // namespace colorrec
