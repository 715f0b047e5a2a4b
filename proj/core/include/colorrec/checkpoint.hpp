#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "colorrec/model.hpp"
#include "colorrec/predictor.hpp"
#include "colorrec/vocabulary.hpp"

namespace colorrec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Self-contained model: configuration, vocabulary and 32-bit parameters.
struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  ModelParams<float> params;
};

// Little-endian binary: magic "CRMC", u32 version, config, vocabulary table,
// then each tensor as (name, rows, cols, float32 data).
void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::string& path);

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt);

// Read-only inference over a checkpoint; safe to share across threads.
class TrainedModel final : public MaskedPredictor {
 public:
  explicit TrainedModel(Checkpoint ckpt);

  const Checkpoint& checkpoint() const { return ckpt_; }
  const Vocabulary& vocab() const override { return ckpt_.vocab; }
  const MaskedColorModel<float>& network() const { return model_; }

  // Distributions at `positions`; tokens at those positions are replaced by
  // MASK first. Positions must hold color or MASK tokens.
  Matrix<float> distributions(const ColorSequence& seq, std::span<const int> positions) const;

  // n is truncated to the candidate count.
  std::vector<std::vector<ScoredCode>> predict_topn(const ColorSequence& seq,
                                                    std::span<const int> positions, std::size_t n,
                                                    const std::vector<bool>& excluded = {}) const override;

 private:
  Checkpoint ckpt_;
  MaskedColorModel<float> model_;
};

}  // namespace colorrec
