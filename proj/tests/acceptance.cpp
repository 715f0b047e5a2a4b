// Acceptance harness: one PASS/FAIL line per headline criterion. Exits
// non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "colorrec/checkpoint.hpp"
#include "colorrec/color.hpp"
#include "colorrec/evaluate.hpp"
#include "colorrec/model.hpp"
#include "colorrec/palette.hpp"
#include "colorrec/recolor.hpp"
#include "colorrec/synth.hpp"
#include "colorrec/train.hpp"
#include "colorrec/word2vec.hpp"
#include "contract.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "service_fixture.hpp"

using namespace colorrec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Everything trained once and shared between criteria.
struct World {
  SynthOptions synth_opts;
  SynthCorpus corpus;
  std::vector<ColorSequence> train, validation, test;
  Vocabulary vocab;
  ModelConfig cfg;
  TrainOptions train_opts;
  TrainResult with_segments, without_segments, with_positions;
  std::shared_ptr<const TrainedModel> seg_model, noseg_model, pos_model;
  std::unique_ptr<SkipGramBaseline> baseline;
  std::vector<EvalReport> reports;  // every report emitted by the harness
  double train_seconds = 0.0;
};

World& world() {
  static World w = [] {
    World w;
    w.synth_opts.n_docs = 2000;
    w.synth_opts.rule_seed = 1;
    w.corpus = synth_corpus(w.synth_opts);
    w.train = sequences_of(w.corpus.train);
    w.validation = sequences_of(w.corpus.validation);
    w.test = sequences_of(w.corpus.test);
    w.vocab = build_vocabulary(w.train);
    w.train_opts.epochs = 40;
    w.train_opts.seed = 7;
    w.cfg.seed = 7;
    const auto t0 = Clock::now();
    w.with_segments = colorrec::train(w.train, w.validation, w.vocab, w.cfg, w.train_opts);
    w.train_seconds = seconds_since(t0);
    ModelConfig noseg = w.cfg;
    noseg.use_segment_embeddings = false;
    w.without_segments = colorrec::train(w.train, w.validation, w.vocab, noseg, w.train_opts);
    ModelConfig pos = w.cfg;
    pos.use_position_embeddings = true;
    w.with_positions = colorrec::train(w.train, w.validation, w.vocab, pos, w.train_opts);
    w.seg_model = std::make_shared<const TrainedModel>(w.with_segments.checkpoint);
    w.noseg_model = std::make_shared<const TrainedModel>(w.without_segments.checkpoint);
    w.pos_model = std::make_shared<const TrainedModel>(w.with_positions.checkpoint);
    SkipGramOptions sg;
    sg.seed = 7;
    w.baseline = std::make_unique<SkipGramBaseline>(w.train, w.vocab, sg);
    return w;
  }();
  return w;
}

EvalReport emit(EvalReport r) {
  world().reports.push_back(r);
  return r;
}

Outcome ciede2000_oracle() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> l(0, 100), ab(-128, 127);
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 20; ++i) {
    const LabColor x{l(gen), ab(gen), ab(gen)}, y{l(gen), ab(gen), ab(gen)};
    const double want = oracle::ciede2000({x.l, x.a, x.b}, {y.l, y.a, y.b});
    worst = std::max(worst, std::abs(ciede2000(x, y) - want));
    ok = ok && ciede2000(x, x) == 0.0 && ciede2000(x, y) == ciede2000(y, x);
  }
  return {ok && worst <= 1e-4, "max |error| " + fmt("%.2e", worst) + ", identity and symmetry " + (ok ? "hold" : "broken")};
}

Outcome srgb_lab_roundtrip() {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> ch(0, 255);
  int worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const RgbColor c{static_cast<std::uint8_t>(ch(gen)), static_cast<std::uint8_t>(ch(gen)),
                     static_cast<std::uint8_t>(ch(gen))};
    const RgbColor back = lab_to_srgb(srgb_to_lab(c));
    worst = std::max({worst, std::abs(c.r - back.r), std::abs(c.g - back.g), std::abs(c.b - back.b)});
  }
  const std::string white = to_string(quantize(RgbColor{255, 255, 255}));
  return {worst <= 1 && white == "15_8_8", "max channel error " + std::to_string(worst) + ", white -> " + white};
}

Outcome code_consistency() {
  const VocabConfig cfg;
  int bad = 0, total = 0;
  for (std::uint16_t li = 0; li < 16; ++li) {
    for (std::uint16_t ai = 0; ai < 16; ++ai) {
      for (std::uint16_t bi = 0; bi < 16; ++bi) {
        const ColorCode c{li, ai, bi};
        ++total;
        if (quantize(code_center(c, cfg), cfg) != c) ++bad;
      }
    }
  }
  return {total == 4096 && bad == 0, std::to_string(total) + " codes, " + std::to_string(bad) + " inconsistent"};
}

Outcome kmeans_brute_force() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> l(0, 100), ab(-60, 60), w(0.5, 3.0);
  int optimal = 0, below = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const std::size_t n = 3 + static_cast<std::size_t>(seed) % 6;  // 3..8 points
    const std::size_t k = 1 + static_cast<std::size_t>(seed) % 3;
    std::vector<WeightedLab> pts;
    std::vector<oracle::Lab> op;
    std::vector<double> ow;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back({{l(gen), ab(gen), ab(gen)}, w(gen)});
      op.push_back({pts.back().color.l, pts.back().color.a, pts.back().color.b});
      ow.push_back(pts.back().weight);
    }
    const double best = oracle::optimal_partition_inertia(op, ow, k);
    const double got = kmeans_weighted(pts, k, static_cast<std::uint64_t>(seed)).inertia;
    if (got < best - 1e-9) ++below;
    if (std::abs(got - best) <= 1e-9) ++optimal;
  }
  return {below == 0 && optimal >= 90,
          std::to_string(optimal) + "/100 seeds at the optimum, " + std::to_string(below) + " below it"};
}

Outcome gradient_check() {
  const Vocabulary vocab = fixture::line_vocab(7);
  const auto batch = fixture::random_examples(5, vocab, 4);
  double worst = 0.0;
  int checked = 0;
  for (bool positions : {false, true}) {
    ModelConfig cfg;
    cfg.d_model = 8;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 16;
    cfg.vocab_size = 7;
    cfg.dropout = 0.0;
    cfg.init_std = 0.5;
    cfg.use_position_embeddings = positions;
    cfg.seed = 3;
    MaskedColorModel<double> model(cfg);
    ModelParams<double> grads = ModelParams<double>::zeros(cfg);
    model.loss_and_gradients(batch, grads, nullptr);
    auto tensors = model.params().tensors();
    const auto gt = grads.tensors();
    std::mt19937_64 gen(1);
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i, ++checked) {
      const std::size_t t = static_cast<std::size_t>(i) % tensors.size();
      const std::size_t j = gen() % tensors[t].size();
      double& w = tensors[t].data[j];
      const double saved = w;
      w = saved + h;
      const double up = model.loss(batch).loss;
      w = saved - h;
      const double down = model.loss(batch).loss;
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = gt[t].data[j];
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / scale);
    }
  }
  return {worst < 1e-3, std::to_string(checked) + " coordinates, max relative error " + fmt("%.2e", worst)};
}

Outcome training_smoke() {
  World& w = world();
  EvalOptions eo;
  eo.seed = 11;
  eo.model = "segments";
  const EvalReport r = emit(evaluate(*w.seg_model, w.test, eo));
  const auto& h = w.with_segments.history;
  bool decreasing = h.size() >= 5;
  std::string losses;
  for (std::size_t e = 0; e < std::min<std::size_t>(5, h.size()); ++e) {
    if (e > 0) decreasing = decreasing && h[e].train_loss < h[e - 1].train_loss;
    losses += (e ? " " : "") + fmt("%.3f", h[e].train_loss);
  }
  const double acc = r.row(1)->accuracy;
  const double val_loss = h.empty() ? 0.0 : h.back().validation_loss.value_or(0.0);
  return {w.corpus.train.size() + w.corpus.validation.size() + w.corpus.test.size() >= 2000 && acc >= 0.9 &&
              decreasing && w.train_seconds < 600,
          "held-out accuracy@1 " + fmt("%.3f", acc) + ", first epoch losses " + losses + ", final validation loss " +
              fmt("%.3f", val_loss) + ", trained in " +
              fmt("%.0f s", w.train_seconds)};
}

Outcome segment_ablation() {
  World& w = world();
  EvalOptions eo;
  eo.seed = 11;
  eo.model = "segments";
  const double with = emit(evaluate_probes(*w.seg_model, w.corpus.test, eo)).row(1)->accuracy;
  eo.model = "no segments";
  const EvalReport nr = emit(evaluate_probes(*w.noseg_model, w.corpus.test, eo));
  const double without = nr.row(1)->accuracy;
  eo.model = "skip-gram";
  const double base = emit(evaluate_probes(*w.baseline, w.corpus.test, eo)).row(1)->accuracy;
  return {with - without >= 0.15 && with - base >= 0.15,
          std::to_string(nr.sequences) + " probes: with " + fmt("%.3f", with) + ", without " + fmt("%.3f", without) +
              ", skip-gram " + fmt("%.3f", base)};
}

Outcome multi_mask() {
  World& w = world();
  std::string accs;
  bool ok = true;
  double prev = 2.0;
  for (int m = 1; m <= 5; ++m) {
    EvalOptions eo;
    eo.seed = 11;
    eo.masked_count = m;
    eo.max_masked = 0;
    eo.model = "segments";
    const double acc = emit(evaluate(*w.seg_model, w.test, eo)).row(1)->accuracy;
    ok = ok && acc <= prev;
    prev = acc;
    accs += (m > 1 ? " " : "") + fmt("%.3f", acc);
  }
  return {ok, "accuracy@1 for 1..5 masked: " + accs};
}

Outcome metric_monotone() {
  const auto& reports = world().reports;
  std::size_t bad = 0;
  for (const auto& r : reports) bad += !is_monotone(r);
  return {!reports.empty() && bad == 0,
          std::to_string(reports.size()) + " reports, " + std::to_string(bad) + " not monotone"};
}

Outcome position_ablation() {
  World& w = world();
  EvalOptions eo;
  eo.seed = 11;
  eo.model = "positions";
  const double with = emit(evaluate(*w.pos_model, w.test, eo)).row(1)->accuracy;
  eo.model = "segments";
  const double without = emit(evaluate(*w.seg_model, w.test, eo)).row(1)->accuracy;
  return {std::abs(with - without) <= 0.05,
          "with positions " + fmt("%.3f", with) + ", without " + fmt("%.3f", without)};
}

Outcome checkpoint_roundtrip() {
  World& w = world();
  std::stringstream ss;
  save_checkpoint(ss, w.with_segments.checkpoint);
  const TrainedModel loaded(load_checkpoint(ss));
  bool same_predictions = true;
  for (const auto& seq : w.test) {
    const auto positions = seq.color_positions();
    const Matrix<float> a = w.seg_model->distributions(seq, positions);
    const Matrix<float> b = loaded.distributions(seq, positions);
    same_predictions = same_predictions && a.size() == b.size() &&
                       std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<std::size_t>(a.size())) == 0;
  }
  const TrainResult again = colorrec::train(w.train, w.validation, w.vocab, w.cfg, w.train_opts);
  const bool same_bytes = checkpoint_bytes(again.checkpoint) == checkpoint_bytes(w.with_segments.checkpoint);
  return {same_predictions && same_bytes, std::string("reload predictions ") + (same_predictions ? "identical" : "differ") +
                                              ", same-seed retrain " + (same_bytes ? "identical" : "differs")};
}

Outcome recolor_identities() {
  World& w = world();
  int cases = 0, failures = 0;
  const auto members = [](const GraphicDocument& d, Group g) {
    std::vector<Element> out;
    for (const auto& e : d.elements) {
      if (group_of(e.kind) == g) out.push_back(e);
    }
    return out;
  };
  for (std::size_t i = 0; i < std::min<std::size_t>(40, w.corpus.test_documents.size()); ++i) {
    const GraphicDocument& doc = w.corpus.test_documents[i];
    const MultiPalette mp = extract_multi_palette(doc, 0);
    for (Group g : {Group::image, Group::svg, Group::text}) {
      for (std::size_t s = 0; s < mp[g].size(); ++s) {
        const SlotRef slot{g, static_cast<int>(s)};
        ++cases;
        // Target equal to source.
        const GraphicDocument same = apply_color(doc, mp, slot, mp[g].colors[s]);
        bool ok = true;
        if (g == Group::image) {
          for (std::size_t e = 0; e < doc.elements.size() && ok; ++e) {
            if (!doc.elements[e].raster) {
              ok = same.elements[e] == doc.elements[e];
              continue;
            }
            const auto& a = doc.elements[e].raster->pixels();
            const auto& b = same.elements[e].raster->pixels();
            for (std::size_t p = 0; p < a.size() && ok; ++p) {
              ok = std::abs(a[p].r - b[p].r) <= 1 && std::abs(a[p].g - b[p].g) <= 1 && std::abs(a[p].b - b[p].b) <= 1;
            }
          }
        } else {
          ok = same == doc;
        }
        // A real edit leaves the other groups bitwise unchanged.
        const GraphicDocument moved = apply_color(doc, mp, slot, srgb_to_lab({5, 250, 120}));
        for (Group other : {Group::image, Group::svg, Group::text}) {
          if (other != g) ok = ok && members(moved, other) == members(doc, other);
        }
        failures += !ok;
      }
    }
  }
  return {cases > 0 && failures == 0, std::to_string(cases) + " slot edits, " + std::to_string(failures) + " violations"};
}

Outcome service_contract() {
  World& w = world();
  fixture::RunningService svc(w.seg_model);
  contract::Inputs in;
  in.port = svc.port();
  const GraphicDocument& doc = w.corpus.test_documents[0];
  in.document = serialize_document(doc);
  for (const auto& e : doc.elements) {
    if (is_image_like(e.kind) && in.image_element.empty()) in.image_element = e.id;
    if (!is_image_like(e.kind) && in.svg_element.empty()) in.svg_element = e.id;
  }
  for (std::uint16_t l = 0; l < 16 && in.absent_code.empty(); ++l) {
    if (!w.vocab.contains({l, 0, 0})) in.absent_code = to_string(ColorCode{l, 0, 0});
  }
  const auto rep = contract::run(in, contract::SchemaChecker::from_file(COLORREC_SCHEMA_FILE));
  std::string detail = std::to_string(rep.checks) + " checks, " + std::to_string(rep.failures.size()) + " failed";
  if (!rep.failures.empty()) detail += " (first: " + rep.failures.front() + ")";
  return {rep.failures.empty() && rep.checks > 60, detail};
}

struct Criterion {
  const char* id;
  const char* name;
  double budget_seconds;  // 0 for no limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"A01", "ciede2000 matches independent oracle", 1, ciede2000_oracle},
      {"A02", "srgb/lab roundtrip and white anchor", 1, srgb_lab_roundtrip},
      {"A03", "code center and quantize agree on all codes", 0, code_consistency},
      {"A04", "k-means against exhaustive partitions", 10, kmeans_brute_force},
      {"A05", "analytic gradients match finite differences", 60, gradient_check},
      {"A06", "training smoke on synthetic corpus", 600, training_smoke},
      {"A07", "segment ablation on segment-dependent probes", 900, segment_ablation},
      {"A08", "accuracy non-increasing in masked count", 0, multi_mask},
      {"A09", "metric monotonicity on every report", 0, metric_monotone},
      {"A10", "position embedding ablation", 0, position_ablation},
      {"A11", "checkpoint round trip and same-seed retrain", 0, checkpoint_roundtrip},
      {"A12", "recoloring identities", 0, recolor_identities},
      {"A13", "service contract suite", 0, service_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f s", c.budget_seconds) + " budget";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.name << ": " << o.detail << " ["
              << fmt("%.2f s", secs) << "]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
