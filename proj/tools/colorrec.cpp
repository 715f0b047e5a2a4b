// colorrec: command line front end for corpus generation, training,
// evaluation, recommendation, recoloring and the HTTP service.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "colorrec/error.hpp"
#include "colorrec/evaluate.hpp"
#include "colorrec/image.hpp"
#include "colorrec/recolor.hpp"
#include "colorrec/recommend.hpp"
#include "colorrec/service.hpp"
#include "colorrec/synth.hpp"
#include "colorrec/train.hpp"
#include "colorrec/word2vec.hpp"
#include "json.hpp"
#include "sample_document.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace colorrec;

namespace {

enum class Format { json, text };

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::not_found, "cannot write " + path);
  out << text;
}

json vocabulary_json(const Vocabulary& v) {
  json codes = json::array();
  for (std::size_t i = 0; i < v.num_colors(); ++i) {
    codes.push_back({{"code", to_string(v.code_at(i))}, {"count", v.counts()[i]}});
  }
  return {{"bins_per_axis", v.config().bins_per_axis}, {"codes", codes}};
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
  const json j = json::parse(in);
  VocabConfig cfg;
  cfg.bins_per_axis = j.at("bins_per_axis").get<int>();
  std::vector<ColorCode> codes;
  std::vector<std::uint64_t> counts;
  for (const auto& c : j.at("codes")) {
    auto code = parse_code(c.at("code").get<std::string>());
    if (!code) throw Error(ErrorCode::parse, "bad code in " + path);
    codes.push_back(*code);
    counts.push_back(c.value("count", std::uint64_t{1}));
  }
  return Vocabulary(cfg, std::move(codes), std::move(counts));
}

std::string default_checkpoint() {
  const char* env = std::getenv("COLORREC_CHECKPOINT");
  return env ? env : "";
}

// "sample" names the document bundled with the binary.
GraphicDocument open_document(const std::string& path) {
  if (path == "sample") return parse_document(kSampleDocument);
  return load_document(path);
}

TrainedModel open_model(const std::string& path) {
  if (path.empty()) {
    throw Error(ErrorCode::invalid_argument, "no checkpoint given (use --checkpoint or COLORREC_CHECKPOINT)");
  }
  return TrainedModel(load_checkpoint_file(path));
}

json candidates_json(const Recommendation& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"code", to_string(c.code)}, {"hex", to_hex(c.display)}, {"probability", c.probability},
                     {"rank", c.rank}});
  }
  return {{"slot", to_string(r.slot)}, {"source", to_hex(lab_to_srgb(r.source))}, {"candidates", cands}};
}

std::vector<SlotRef> parse_slots(const std::vector<std::string>& texts) {
  std::vector<SlotRef> slots;
  for (const auto& t : texts) {
    auto s = parse_slot(t);
    if (!s) throw Error(ErrorCode::invalid_slot, "bad slot '" + t + "' (expected group:index)");
    slots.push_back(*s);
  }
  return slots;
}

ColorCode parse_code_arg(const std::string& text) {
  if (!text.empty() && text[0] == '#') {
    if (auto rgb = parse_hex(text)) return quantize(*rgb);
  } else if (auto code = parse_code(text)) {
    return *code;
  }
  throw Error(ErrorCode::unknown_code, "bad code '" + text + "'");
}

ColorService* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-palette color recommendation for graphic documents"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format_name = "text";
  app.add_option("--format", format_name, "Output format")->check(CLI::IsMember({"json", "text"}));

  // synth-data
  auto* synth_cmd = app.add_subcommand("synth-data", "Generate a synthetic themed corpus");
  std::string synth_out;
  SynthOptions synth_opts;
  std::size_t synth_samples = 4;
  synth_cmd->add_option("--out-dir", synth_out, "Output directory")->required();
  synth_cmd->add_option("--docs", synth_opts.n_docs, "Number of documents")->capture_default_str();
  synth_cmd->add_option("--seed", synth_opts.rule_seed, "Rule seed")->capture_default_str();
  synth_cmd->add_option("--pair-share", synth_opts.pair_share, "Share of segment-dependent documents")
      ->capture_default_str();
  synth_cmd->add_option("--samples", synth_samples, "Test documents to write as JSON")->capture_default_str();

  // build-vocab
  auto* vocab_cmd = app.add_subcommand("build-vocab", "Collect the color vocabulary of a corpus");
  std::string vocab_corpus, vocab_out;
  int vocab_bins = 16;
  vocab_cmd->add_option("--corpus", vocab_corpus, "Corpus (.jsonl)")->required();
  vocab_cmd->add_option("--out", vocab_out, "Vocabulary file (.json)")->required();
  vocab_cmd->add_option("--bins", vocab_bins, "Bins per LAB axis")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the masked color model");
  std::string train_corpus, train_val, train_vocab, train_out;
  ModelConfig model_cfg;
  TrainOptions train_opts;
  bool no_segments = false;
  int runs = 1;
  train_cmd->add_option("--corpus", train_corpus, "Training corpus (.jsonl)")->required();
  train_cmd->add_option("--validation", train_val, "Validation corpus (.jsonl)");
  train_cmd->add_option("--vocab", train_vocab, "Vocabulary file; built from the corpus when omitted");
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--seed", train_opts.seed, "Seed")->capture_default_str();
  train_cmd->add_option("--epochs", train_opts.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", train_opts.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", train_opts.adam.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--d-model", model_cfg.d_model, "Model width")->capture_default_str();
  train_cmd->add_option("--layers", model_cfg.n_layers, "Encoder layers")->capture_default_str();
  train_cmd->add_option("--heads", model_cfg.n_heads, "Attention heads")->capture_default_str();
  train_cmd->add_option("--d-ff", model_cfg.d_ff, "Feed-forward width")->capture_default_str();
  train_cmd->add_option("--dropout", model_cfg.dropout, "Dropout rate")->capture_default_str();
  train_cmd->add_flag("--no-segments", no_segments, "Disable segment embeddings");
  train_cmd->add_flag("--positions", model_cfg.use_position_embeddings, "Enable position embeddings");
  train_cmd->add_option("--runs", runs, "Train this many seeds and keep the best by validation loss")
      ->capture_default_str();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a corpus");
  std::vector<std::string> eval_ckpts;
  std::string eval_corpus, eval_baseline_corpus;
  EvalOptions eval_opts;
  bool eval_probes = false;
  eval_cmd->add_option("--checkpoint", eval_ckpts,
                       "Checkpoint (default $COLORREC_CHECKPOINT); repeat to report the mean over runs");
  eval_cmd->add_option("--corpus", eval_corpus, "Test corpus (.jsonl)")->required();
  eval_cmd->add_option("--masked", eval_opts.masked_count, "Masked colors per sequence")->capture_default_str();
  eval_cmd->add_option("--seed", eval_opts.seed, "Mask seed")->capture_default_str();
  eval_cmd->add_flag("--probes", eval_probes, "Score only each record's probe slot");
  eval_cmd->add_option("--baseline", eval_baseline_corpus,
                       "Instead of the checkpoint, score a skip-gram baseline trained on this corpus");

  // recommend
  auto* rec_cmd = app.add_subcommand("recommend", "Recommend colors for palette slots");
  std::string rec_ckpt = default_checkpoint(), rec_doc;
  std::vector<std::string> rec_slots, rec_exclude;
  std::size_t rec_n = 3;
  RecommendOptions rec_opts;
  rec_cmd->add_option("--checkpoint", rec_ckpt, "Checkpoint (default $COLORREC_CHECKPOINT)");
  rec_cmd->add_option("--doc", rec_doc, "Document (.json), or \"sample\" for the bundled one")->required();
  rec_cmd->add_option("--slot", rec_slots, "Slot such as svg:0; repeatable")->required();
  rec_cmd->add_option("--n", rec_n, "Candidates per slot")->capture_default_str();
  rec_cmd->add_option("--exclude", rec_exclude, "Codes or #hex colors to leave out");
  rec_cmd->add_flag("--iterative", rec_opts.iterative, "Fill slots one at a time");
  rec_cmd->add_option("--seed", rec_opts.palette_seed, "Palette extraction seed")->capture_default_str();

  // recolor
  auto* recolor_cmd = app.add_subcommand("recolor", "Apply a color to one palette slot");
  std::string recolor_doc, recolor_slot, recolor_code, recolor_out, recolor_preview;
  RecolorOptions recolor_opts;
  std::uint64_t recolor_seed = 0;
  recolor_cmd->add_option("--doc", recolor_doc, "Document (.json), or \"sample\" for the bundled one")->required();
  recolor_cmd->add_option("--slot", recolor_slot, "Slot such as svg:0")->required();
  recolor_cmd->add_option("--code", recolor_code, "Target code (li_ai_bi) or #hex color")->required();
  recolor_cmd->add_option("--out", recolor_out, "Recolored document (.json)")->required();
  recolor_cmd->add_option("--preview", recolor_preview, "Preview PNG");
  recolor_cmd->add_option("--tau", recolor_opts.tau, "Vector falloff radius (CIEDE2000)")->capture_default_str();
  recolor_cmd->add_option("--seed", recolor_seed, "Palette extraction seed")->capture_default_str();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_ckpt = default_checkpoint(), serve_host = "127.0.0.1";
  int serve_port = 8080;
  long serve_ttl = 3600;
  if (const char* env = std::getenv("COLORREC_PORT")) serve_port = std::atoi(env);
  if (const char* env = std::getenv("COLORREC_SESSION_TTL")) serve_ttl = std::atol(env);
  ServiceOptions serve_opts;
  serve_cmd->add_option("--checkpoint", serve_ckpt, "Checkpoint (default $COLORREC_CHECKPOINT)");
  serve_cmd->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve_port, "Port (0 picks one; default $COLORREC_PORT or 8080)")->capture_default_str();
  serve_cmd->add_option("--ttl", serve_ttl, "Idle session lifetime in seconds (default $COLORREC_SESSION_TTL or 3600)")->capture_default_str();
  serve_cmd->add_option("--persist-dir", serve_opts.persist_dir, "Directory for session files");

  CLI11_PARSE(app, argc, argv);
  const Format format = format_name == "json" ? Format::json : Format::text;

  try {
    if (*synth_cmd) {
      const SynthCorpus corpus = synth_corpus(synth_opts);
      fs::create_directories(synth_out);
      const fs::path dir(synth_out);
      write_corpus_file((dir / "train.jsonl").string(), corpus.train);
      write_corpus_file((dir / "val.jsonl").string(), corpus.validation);
      write_corpus_file((dir / "test.jsonl").string(), corpus.test);
      json templates = json::array();
      for (const auto& t : corpus.spec.templates) {
        json groups = json::array();
        for (const auto& g : t.palettes) {
          json codes = json::array();
          for (const auto& c : g) codes.push_back(to_string(c));
          groups.push_back(codes);
        }
        templates.push_back({{"tag", t.tag}, {"palettes", groups}, {"probe", t.probe}, {"weight", t.weight}});
      }
      const json spec{{"rule_seed", synth_opts.rule_seed},
                      {"documents", synth_opts.n_docs},
                      {"bayes_with_segments", corpus.spec.bayes_with_segments},
                      {"bayes_without_segments", corpus.spec.bayes_without_segments},
                      {"pair_bayes_with_segments", corpus.spec.pair_bayes_with_segments},
                      {"pair_bayes_without_segments", corpus.spec.pair_bayes_without_segments},
                      {"templates", templates}};
      write_text((dir / "spec.json").string(), spec.dump(2) + "\n");
      const std::size_t k = std::min(synth_samples, corpus.test_documents.size());
      if (k > 0) fs::create_directories(dir / "samples");
      for (std::size_t i = 0; i < k; ++i) {
        write_text((dir / "samples" / ("doc_" + std::to_string(i) + ".json")).string(),
                   serialize_document(corpus.test_documents[i]) + "\n");
      }
      if (format == Format::json) {
        std::cout << json{{"train", corpus.train.size()},
                          {"validation", corpus.validation.size()},
                          {"test", corpus.test.size()},
                          {"samples", k}}
                         .dump()
                  << "\n";
      } else {
        std::cout << "wrote " << corpus.train.size() << "/" << corpus.validation.size() << "/"
                  << corpus.test.size() << " sequences and " << k << " sample documents to " << synth_out
                  << "\n";
      }
      return 0;
    }

    if (*vocab_cmd) {
      VocabConfig cfg;
      cfg.bins_per_axis = vocab_bins;
      const auto seqs = sequences_of(read_corpus_file(vocab_corpus));
      const Vocabulary v = build_vocabulary(seqs, cfg);
      write_text(vocab_out, vocabulary_json(v).dump(2) + "\n");
      if (format == Format::json) {
        std::cout << json{{"colors", v.num_colors()}, {"tokens", v.num_tokens()}}.dump() << "\n";
      } else {
        std::cout << v.num_colors() << " colors (" << v.num_tokens() << " tokens) -> " << vocab_out << "\n";
      }
      return 0;
    }

    if (*train_cmd) {
      const auto train_seqs = sequences_of(read_corpus_file(train_corpus));
      std::vector<ColorSequence> val_seqs;
      if (!train_val.empty()) val_seqs = sequences_of(read_corpus_file(train_val));
      const Vocabulary vocab = train_vocab.empty() ? build_vocabulary(train_seqs) : load_vocabulary(train_vocab);
      model_cfg.use_segment_embeddings = !no_segments;
      model_cfg.seed = train_opts.seed;
      int run_index = 0;
      train_opts.on_epoch = [&](const EpochRecord& r) {
        if (format == Format::json) {
          std::cout << progress_line(r.epoch, "train", r.train_loss, r.train_accuracy) << "\n";
          if (r.validation_loss) {
            std::cout << progress_line(r.epoch, "validation", *r.validation_loss, *r.validation_accuracy) << "\n";
          }
        } else {
          std::cout << "run " << run_index << " epoch " << r.epoch << ": train loss " << r.train_loss
                    << " acc " << r.train_accuracy;
          if (r.validation_loss) std::cout << ", val loss " << *r.validation_loss << " acc " << *r.validation_accuracy;
          std::cout << "\n";
        }
        if (r.epoch == train_opts.epochs) ++run_index;
      };
      const auto results = train_runs(train_seqs, val_seqs, vocab, model_cfg, train_opts, std::max(1, runs));
      const std::size_t best = best_run(results);
      save_checkpoint_file(train_out, results[best].checkpoint);
      if (format == Format::text) std::cout << "kept run " << best << " -> " << train_out << "\n";
      return 0;
    }

    if (*eval_cmd) {
      const auto records = read_corpus_file(eval_corpus);
      const auto score = [&](const MaskedPredictor& predictor) {
        return eval_probes ? evaluate_probes(predictor, records, eval_opts)
                           : evaluate(predictor, sequences_of(records), eval_opts);
      };
      EvalReport report;
      if (!eval_baseline_corpus.empty()) {
        const auto base = sequences_of(read_corpus_file(eval_baseline_corpus));
        SkipGramOptions sg;
        sg.seed = eval_opts.seed;
        eval_opts.model = "skip-gram baseline";
        report = score(SkipGramBaseline(base, build_vocabulary(base), sg));
      } else {
        if (eval_ckpts.empty()) eval_ckpts.push_back(default_checkpoint());
        std::vector<EvalReport> reports;
        for (const auto& path : eval_ckpts) {
          const TrainedModel model = open_model(path);
          const auto& c = model.checkpoint().config;
          eval_opts.model = "d=" + std::to_string(c.d_model) + " layers=" + std::to_string(c.n_layers) +
                            " heads=" + std::to_string(c.n_heads) +
                            " segments=" + (c.use_segment_embeddings ? "on" : "off") +
                            " positions=" + (c.use_position_embeddings ? "on" : "off");
          reports.push_back(score(model));
        }
        report = reports.size() == 1 ? reports.front() : average_reports(reports);
      }
      std::cout << (format == Format::json ? report_json(report) + "\n" : report_table(report));
      return 0;
    }

    if (*rec_cmd) {
      const TrainedModel model = open_model(rec_ckpt);
      const GraphicDocument doc = open_document(rec_doc);
      const auto slots = parse_slots(rec_slots);
      std::set<ColorCode> exclude;
      for (const auto& e : rec_exclude) exclude.insert(parse_code_arg(e));
      const MultiPalette mp = extract_multi_palette(doc, rec_opts.palette_seed, rec_opts.palette);
      const auto recs = recommend_for_palettes(mp, slots, rec_n, model, rec_opts, exclude);
      if (format == Format::json) {
        json out = json::array();
        for (const auto& r : recs) out.push_back(candidates_json(r));
        std::cout << out.dump(2) << "\n";
      } else {
        for (const auto& r : recs) {
          std::cout << to_string(r.slot) << " (now " << to_hex(lab_to_srgb(r.source)) << ")\n";
          for (const auto& c : r.candidates) {
            std::printf("  %d. %s  %-9s  p=%.4f\n", c.rank, to_hex(c.display).c_str(), to_string(c.code).c_str(),
                        c.probability);
          }
        }
      }
      return 0;
    }

    if (*recolor_cmd) {
      const GraphicDocument doc = open_document(recolor_doc);
      auto slot = parse_slot(recolor_slot);
      if (!slot) throw Error(ErrorCode::invalid_slot, "bad slot '" + recolor_slot + "'");
      const MultiPalette mp = extract_multi_palette(doc, recolor_seed);
      check_slots(mp, std::span<const SlotRef>(&*slot, 1));
      LabColor target;
      if (!recolor_code.empty() && recolor_code[0] == '#') {
        const auto rgb = parse_hex(recolor_code);
        if (!rgb) throw Error(ErrorCode::unknown_code, "bad color '" + recolor_code + "'");
        target = srgb_to_lab(*rgb);
      } else {
        target = target_lab(parse_code_arg(recolor_code));
      }
      const GraphicDocument out = apply_color(doc, mp, *slot, target, recolor_opts);
      write_text(recolor_out, serialize_document(out) + "\n");
      if (!recolor_preview.empty()) {
        const auto png = encode_png(render_preview(out));
        write_file_bytes(recolor_preview, png);
      }
      if (format == Format::json) {
        std::cout << json{{"slot", recolor_slot}, {"target", to_hex(lab_to_srgb(target))}, {"out", recolor_out}}.dump()
                  << "\n";
      } else {
        std::cout << "recolored " << recolor_slot << " to " << to_hex(lab_to_srgb(target)) << " -> " << recolor_out
                  << "\n";
      }
      return 0;
    }

    if (*serve_cmd) {
      auto model = std::make_shared<const TrainedModel>(open_model(serve_ckpt));
      serve_opts.session_ttl = std::chrono::seconds(serve_ttl);
      ColorService service(model, serve_opts);
      const int port = service.bind(serve_host, serve_port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << serve_host << ":" << port << "\n";
      service.listen();
      g_service = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "colorrec: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "colorrec: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
