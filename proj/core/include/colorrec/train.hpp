#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colorrec/checkpoint.hpp"
#include "colorrec/model.hpp"
#include "colorrec/sequence.hpp"

namespace colorrec {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam(const ModelConfig& cfg, AdamOptions opts)
      : opts_(opts), m_(ModelParams<T>::zeros(cfg)), v_(ModelParams<T>::zeros(cfg)) {}

  void step(ModelParams<T>& params, const ModelParams<T>& grads);
  long steps() const { return t_; }

 private:
  AdamOptions opts_;
  ModelParams<T> m_, v_;
  long t_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_loss;
  std::optional<double> validation_accuracy;
};

// One line-delimited progress record: {"epoch","split","loss","accuracy"}.
std::string progress_line(int epoch, std::string_view split, double loss, double accuracy);

struct TrainOptions {
  int epochs = 40;
  std::size_t batch_size = 32;
  AdamOptions adam;
  MaskingPolicy masking;
  std::uint64_t seed = 0;  // shuffling, masking and dropout
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
};

// Trains from scratch. `cfg.vocab_size` is taken from the vocabulary.
// Masks are redrawn every epoch; validation uses a fixed masking seed so
// its loss is comparable across epochs. Throws Error(diverged) on a
// non-finite loss.
TrainResult train(std::span<const ColorSequence> train_set, std::span<const ColorSequence> validation_set,
                  const Vocabulary& vocab, ModelConfig cfg, const TrainOptions& opts);

// Trains `runs` models with consecutive seeds and returns all of them,
// ordered by run index.
std::vector<TrainResult> train_runs(std::span<const ColorSequence> train_set,
                                    std::span<const ColorSequence> validation_set,
                                    const Vocabulary& vocab, const ModelConfig& cfg,
                                    const TrainOptions& opts, int runs);

// Index of the run with the lowest final validation loss (train loss when no
// validation split was given).
std::size_t best_run(std::span<const TrainResult> runs);

// Deterministic masked examples for scoring a split.
std::vector<EncodedExample> masked_examples(std::span<const ColorSequence> sequences,
                                            const Vocabulary& vocab, std::uint64_t seed,
                                            const MaskingPolicy& policy = {});

}  // namespace colorrec
