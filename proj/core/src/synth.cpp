#include "colorrec/synth.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "colorrec/error.hpp"
#include "colorrec/palette.hpp"
#include "colorrec/random.hpp"

namespace colorrec {
namespace {

std::set<ColorCode> color_set(const CodePalettes& p) {
  std::set<ColorCode> s;
  for (const auto& g : p) s.insert(g.begin(), g.end());
  return s;
}

std::size_t overlap(const std::set<ColorCode>& x, const std::set<ColorCode>& y) {
  std::size_t n = 0;
  for (const auto& c : x) n += y.count(c);
  return n;
}

std::vector<ColorCode> make_pool(const SynthOptions& opts, Rng& rng) {
  const VocabConfig cfg;
  std::vector<ColorCode> pool;
  std::vector<LabColor> centers;
  for (int attempt = 0; attempt < 200000 && pool.size() < opts.pool_size; ++attempt) {
    const RgbColor rgb{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                       static_cast<std::uint8_t>(rng.below(256))};
    const ColorCode code = quantize(rgb, cfg);
    if (quantize(display_color(code, cfg), cfg) != code) continue;
    const LabColor c = code_center(code, cfg);
    bool far = true;
    for (const auto& o : centers) {
      if (ciede2000(c, o) < opts.min_pool_distance) {
        far = false;
        break;
      }
    }
    if (!far) continue;
    pool.push_back(code);
    centers.push_back(c);
  }
  if (pool.size() < opts.pool_size) {
    throw Error(ErrorCode::invalid_argument, "could not draw a color pool of the requested size");
  }
  return pool;
}

std::vector<ColorCode> draw(const std::vector<ColorCode>& pool, std::size_t k, Rng& rng) {
  std::vector<ColorCode> p = pool;
  rng.shuffle(p.begin(), p.end());
  p.resize(k);
  return p;
}

// Accepts a candidate color set only if it shares at most three colors with
// every previous template, so any four visible colors identify a template.
bool separated(const std::set<ColorCode>& s, const std::vector<std::set<ColorCode>>& taken) {
  for (const auto& t : taken) {
    if (overlap(s, t) > 3) return false;
  }
  return true;
}

std::string signature(const ColorSequence& seq, int masked, bool segments) {
  std::vector<std::string> parts;
  for (int i = 0; i < kSequenceLength; ++i) {
    const auto& t = seq.tokens[static_cast<std::size_t>(i)];
    std::string s = i == masked ? "[MASK]" : to_string(t);
    if (segments) s = std::to_string(seq.segments[static_cast<std::size_t>(i)]) + "|" + s;
    parts.push_back(std::move(s));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) out += p + ",";
  return out;
}

struct BayesCounter {
  std::map<std::string, std::map<ColorCode, double>> table;
  void add(const std::string& sig, const ColorCode& target, double w) { table[sig][target] += w; }
  double accuracy() const {
    double best = 0.0, total = 0.0;
    for (const auto& [sig, targets] : table) {
      double m = 0.0;
      for (const auto& [code, w] : targets) {
        m = std::max(m, w);
        total += w;
      }
      best += m;
    }
    return total > 0.0 ? best / total : 0.0;
  }
};

}  // namespace

GeneratorSpec make_generator_spec(const SynthOptions& opts) {
  if (opts.n_docs < 100) throw Error(ErrorCode::invalid_argument, "need at least 100 documents");
  if (opts.themes == 0) throw Error(ErrorCode::invalid_argument, "need at least one theme");
  if (opts.pair_share < 0.0 || opts.pair_share >= 1.0 || (opts.segment_pairs == 0 && opts.pair_share > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "pair share must lie in [0, 1) and needs pairs");
  }
  if (opts.pool_size < 9) throw Error(ErrorCode::invalid_argument, "pool needs at least 9 colors");
  Rng rng(opts.rule_seed);
  GeneratorSpec spec;
  spec.pool = make_pool(opts, rng);

  std::vector<std::set<ColorCode>> taken;
  const double theme_weight = (1.0 - opts.pair_share) / static_cast<double>(opts.themes);
  for (std::size_t t = 0; t < opts.themes; ++t) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      std::size_t ni = 2 + rng.below(3), ns = 2 + rng.below(2), nt = 1 + rng.below(2);
      if (ni + ns + nt < 5) nt = 5 - ni - ns;
      if (nt > 2) continue;
      const auto colors = draw(spec.pool, ni + ns + nt, rng);
      ThemeTemplate tt;
      tt.palettes[0].assign(colors.begin(), colors.begin() + static_cast<std::ptrdiff_t>(ni));
      tt.palettes[1].assign(colors.begin() + static_cast<std::ptrdiff_t>(ni),
                            colors.begin() + static_cast<std::ptrdiff_t>(ni + ns));
      tt.palettes[2].assign(colors.begin() + static_cast<std::ptrdiff_t>(ni + ns), colors.end());
      const auto s = color_set(tt.palettes);
      if (!separated(s, taken)) continue;
      tt.tag = "theme:" + std::to_string(t);
      tt.weight = theme_weight;
      taken.push_back(s);
      spec.templates.push_back(std::move(tt));
      placed = true;
    }
    if (!placed) throw Error(ErrorCode::invalid_argument, "could not place theme " + std::to_string(t));
  }

  const double side_weight =
      opts.segment_pairs == 0 ? 0.0 : opts.pair_share / (2.0 * static_cast<double>(opts.segment_pairs));
  for (std::size_t p = 0; p < opts.segment_pairs; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const auto c = draw(spec.pool, 6, rng);
      ThemeTemplate left, right;
      left.palettes = {std::vector<ColorCode>{c[0], c[1]}, std::vector<ColorCode>{c[2], c[3]},
                       std::vector<ColorCode>{c[4]}};
      right.palettes = {std::vector<ColorCode>{c[2], c[3]}, std::vector<ColorCode>{c[0], c[1]},
                        std::vector<ColorCode>{c[5]}};
      const auto ls = color_set(left.palettes), rs = color_set(right.palettes);
      if (!separated(ls, taken) || !separated(rs, taken)) continue;
      const int probe = slot_position(Group::text, 0);
      left.probe = right.probe = probe;
      left.tag = "pair:" + std::to_string(p) + ":L";
      right.tag = "pair:" + std::to_string(p) + ":R";
      left.weight = right.weight = side_weight;
      taken.push_back(ls);
      taken.push_back(rs);
      spec.templates.push_back(std::move(left));
      spec.templates.push_back(std::move(right));
      placed = true;
    }
    if (!placed) throw Error(ErrorCode::invalid_argument, "could not place pair " + std::to_string(p));
  }

  BayesCounter with, without, pair_with, pair_without;
  for (const auto& t : spec.templates) {
    const ColorSequence seq = encode_code_palettes(t.palettes);
    const auto positions = seq.color_positions();
    const double w = t.weight / static_cast<double>(positions.size());
    for (int pos : positions) {
      const ColorCode target = seq.tokens[static_cast<std::size_t>(pos)].code;
      with.add(signature(seq, pos, true), target, w);
      without.add(signature(seq, pos, false), target, w);
    }
    if (t.probe >= 0) {
      const ColorCode target = seq.tokens[static_cast<std::size_t>(t.probe)].code;
      pair_with.add(signature(seq, t.probe, true), target, t.weight);
      pair_without.add(signature(seq, t.probe, false), target, t.weight);
    }
  }
  spec.bayes_with_segments = with.accuracy();
  spec.bayes_without_segments = without.accuracy();
  spec.pair_bayes_with_segments = pair_with.accuracy();
  spec.pair_bayes_without_segments = pair_without.accuracy();
  return spec;
}

GraphicDocument render_template(const ThemeTemplate& t, std::uint64_t layout_seed,
                                const SynthOptions& opts) {
  const VocabConfig cfg;
  Rng rng(layout_seed);
  GraphicDocument doc;
  doc.width = opts.canvas_width;
  doc.height = opts.canvas_height;
  const auto place = [&](double w, double h) {
    const double x = static_cast<double>(rng.below(static_cast<std::uint64_t>(doc.width - w) + 1));
    const double y = static_cast<double>(rng.below(static_cast<std::uint64_t>(doc.height - h) + 1));
    return std::pair{x, y};
  };
  int next_id = 0;
  const auto add = [&](ElementKind kind, double w, double h, std::vector<RgbColor> colors) {
    Element e;
    e.id = "e" + std::to_string(next_id++);
    e.kind = kind;
    std::tie(e.x, e.y) = place(w, h);
    e.width = w;
    e.height = h;
    e.colors = std::move(colors);
    doc.elements.push_back(std::move(e));
    return doc.elements.size() - 1;
  };

  // svg: a full-canvas background, then shapes of decreasing size.
  const auto& svg = t.palettes[1];
  if (!svg.empty()) {
    add(ElementKind::colored_background, doc.width, doc.height, {display_color(svg[0], cfg)});
    doc.elements.back().x = doc.elements.back().y = 0;
    static constexpr std::array<std::pair<int, int>, 4> shapes{{{32, 24}, {18, 12}, {10, 8}, {6, 4}}};
    for (std::size_t i = 1; i < svg.size(); ++i) {
      add(ElementKind::svg, shapes[i - 1].first, shapes[i - 1].second, {display_color(svg[i], cfg)});
    }
  }

  // image: one raster of vertical color bands with decreasing widths.
  const auto& img = t.palettes[0];
  if (!img.empty()) {
    const int w = 40, h = 30;
    std::vector<int> widths;
    int total = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      widths.push_back(static_cast<int>(2 * (img.size() - i) + 1));
      total += widths.back();
    }
    std::vector<RgbColor> pixels;
    pixels.reserve(static_cast<std::size_t>(w * h));
    std::vector<RgbColor> column(static_cast<std::size_t>(w));
    int x = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      int band = i + 1 == img.size() ? w - x : widths[i] * w / total;
      for (int k = 0; k < band; ++k) column[static_cast<std::size_t>(x++)] = display_color(img[i], cfg);
    }
    for (int y = 0; y < h; ++y) pixels.insert(pixels.end(), column.begin(), column.end());
    const auto idx = add(ElementKind::image, w, h, {});
    doc.elements[idx].raster = RasterImage(w, h, std::move(pixels));
  }

  // text: the palette counts fills, not area, so slot i gets n - i lines.
  static constexpr std::array<std::pair<int, int>, 5> lines{{{56, 12}, {30, 8}, {16, 6}, {10, 4}, {6, 3}}};
  const auto& text = t.palettes[2];
  std::size_t line = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (std::size_t r = i; r < text.size(); ++r, ++line) {
      const auto& size = lines[std::min(line, lines.size() - 1)];
      add(ElementKind::text, size.first, size.second, {display_color(text[i], cfg)});
    }
  }
  return doc;
}

SynthCorpus synth_corpus(const SynthOptions& opts) {
  SynthCorpus corpus;
  corpus.spec = make_generator_spec(opts);
  const auto& templates = corpus.spec.templates;

  Rng rng(opts.rule_seed ^ 0xC0FFEE1234ULL);
  std::vector<std::size_t> order(opts.n_docs);
  // Template choice by cumulative weight.
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& t : templates) cumulative.push_back(acc += t.weight);
  for (std::size_t i = 0; i < opts.n_docs; ++i) {
    const double u = rng.uniform() * acc;
    order[i] = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                        cumulative.begin());
    order[i] = std::min(order[i], templates.size() - 1);
  }

  std::vector<std::size_t> perm(opts.n_docs);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm.begin(), perm.end());
  const std::size_t n_train = opts.n_docs * 8 / 10;
  const std::size_t n_val = opts.n_docs / 10;

  for (std::size_t rank = 0; rank < perm.size(); ++rank) {
    const std::size_t i = perm[rank];
    const ThemeTemplate& t = templates[order[i]];
    const std::uint64_t doc_seed = rng.fork();
    GraphicDocument doc = render_template(t, doc_seed, opts);
    const MultiPalette mp = extract_multi_palette(doc, doc_seed);
    SequenceRecord rec{encode_multi_palette(mp), t.probe, t.tag};
    if (rank < n_train) {
      corpus.train.push_back(std::move(rec));
    } else if (rank < n_train + n_val) {
      corpus.validation.push_back(std::move(rec));
    } else {
      corpus.test.push_back(std::move(rec));
      corpus.test_documents.push_back(std::move(doc));
    }
  }
  return corpus;
}

}  // namespace colorrec
