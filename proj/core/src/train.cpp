#include "colorrec/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "colorrec/error.hpp"
#include "json.hpp"

namespace colorrec {

template <typename T>
void Adam<T>::step(ModelParams<T>& params, const ModelParams<T>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  const T lr = static_cast<T>(opts_.learning_rate * std::sqrt(bc2) / bc1);
  const T b1 = static_cast<T>(opts_.beta1), b2 = static_cast<T>(opts_.beta2);
  const T eps = static_cast<T>(opts_.epsilon * std::sqrt(bc2));
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    T* pd = p[i].data;
    const T* gd = g[i].data;
    T* md = m[i].data;
    T* vd = v[i].data;
    for (std::size_t j = 0; j < p[i].size(); ++j) {
      md[j] = b1 * md[j] + (T(1) - b1) * gd[j];
      vd[j] = b2 * vd[j] + (T(1) - b2) * gd[j] * gd[j];
      pd[j] -= lr * md[j] / (std::sqrt(vd[j]) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

std::string progress_line(int epoch, std::string_view split, double loss, double accuracy) {
  nlohmann::json j{{"epoch", epoch}, {"split", split}, {"loss", loss}, {"accuracy", accuracy}};
  return j.dump();
}

std::vector<EncodedExample> masked_examples(std::span<const ColorSequence> sequences,
                                            const Vocabulary& vocab, std::uint64_t seed,
                                            const MaskingPolicy& policy) {
  std::vector<EncodedExample> out;
  Rng rng(seed);
  for (const auto& seq : sequences) {
    const std::uint64_t s = rng.fork();
    if (seq.color_count() == 0) continue;
    out.push_back(encode_example(apply_masking(seq, vocab, s, policy), vocab));
  }
  return out;
}

TrainResult train(std::span<const ColorSequence> train_set, std::span<const ColorSequence> validation_set,
                  const Vocabulary& vocab, ModelConfig cfg, const TrainOptions& opts) {
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (train_set[i].color_count() > 0) usable.push_back(i);
  }
  if (usable.empty()) throw Error(ErrorCode::invalid_argument, "training corpus has no color tokens");
  if (opts.batch_size == 0) throw Error(ErrorCode::invalid_argument, "batch size must be positive");
  cfg.vocab_size = static_cast<int>(vocab.num_colors());

  MaskedColorModel<float> model(cfg);
  Adam<float> adam(cfg, opts.adam);
  ModelParams<float> grads = ModelParams<float>::zeros(cfg);
  Rng rng(opts.seed);
  const std::vector<EncodedExample> validation =
      masked_examples(validation_set, vocab, opts.seed ^ 0x5EEDF00DULL, opts.masking);

  TrainResult result;
  std::vector<EncodedExample> batch;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    rng.shuffle(usable.begin(), usable.end());
    double loss_sum = 0.0;
    std::size_t targets = 0, correct = 0;
    for (std::size_t start = 0; start < usable.size(); start += opts.batch_size) {
      const std::size_t end = std::min(usable.size(), start + opts.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(encode_example(
            apply_masking(train_set[usable[i]], vocab, rng.fork(), opts.masking), vocab));
      }
      grads.set_zero();
      Rng dropout_rng(rng.fork());
      const BatchLoss bl = model.loss_and_gradients(batch, grads, &dropout_rng);
      if (!std::isfinite(bl.loss)) {
        throw Error(ErrorCode::diverged, "non-finite loss at epoch " + std::to_string(epoch) +
                                             ", batch starting at " + std::to_string(start));
      }
      adam.step(model.params(), grads);
      loss_sum += bl.loss * static_cast<double>(bl.targets);
      targets += bl.targets;
      correct += bl.correct;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(targets);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(targets);
    if (!validation.empty()) {
      const BatchLoss vl = model.loss(validation);
      if (!std::isfinite(vl.loss)) {
        throw Error(ErrorCode::diverged, "non-finite validation loss at epoch " + std::to_string(epoch));
      }
      rec.validation_loss = vl.loss;
      rec.validation_accuracy = static_cast<double>(vl.correct) / static_cast<double>(vl.targets);
    }
    result.history.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);
  }
  result.checkpoint = Checkpoint{cfg, vocab, model.params()};
  return result;
}

std::vector<TrainResult> train_runs(std::span<const ColorSequence> train_set,
                                    std::span<const ColorSequence> validation_set,
                                    const Vocabulary& vocab, const ModelConfig& cfg,
                                    const TrainOptions& opts, int runs) {
  std::vector<TrainResult> out;
  for (int r = 0; r < runs; ++r) {
    ModelConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    TrainOptions o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(r);
    out.push_back(train(train_set, validation_set, vocab, c, o));
  }
  return out;
}

std::size_t best_run(std::span<const TrainResult> runs) {
  if (runs.empty()) throw Error(ErrorCode::invalid_argument, "no runs");
  const auto score = [](const TrainResult& r) {
    if (r.history.empty()) return std::numeric_limits<double>::infinity();
    const auto& last = r.history.back();
    return last.validation_loss.value_or(last.train_loss);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (score(runs[i]) < score(runs[best])) best = i;
  }
  return best;
}

}  // namespace colorrec
