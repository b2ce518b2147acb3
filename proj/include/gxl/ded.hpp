// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gxl/corpus.hpp"

namespace gxl {

// Bernoulli emotion-shift model: probability that an utterance's emotion
// differs from the same speaker's previous emotion.
struct ShiftModel {
  double p0 = 0.5;
};

// Fraction of same-speaker consecutive utterance pairs (per dialogue, per
// speaker, pooled) whose labels differ; clamped to [1e-6, 1 - 1e-6].
// Throws UsageError when no such pair exists.
double estimate_p0(const Corpus& train);
double estimate_p0(const std::vector<const Dialogue*>& dialogues);
// Per-speaker variant: pools transitions separately per speaker id.
// Exposed for protocol experiments; speakers without transitions are
// omitted.
std::vector<std::pair<std::string, double>> estimate_p0_per_speaker(const Corpus& train);

// Emotion block sizes accumulated along a decoded prefix.
struct BlockState {
  std::array<int, kNumEmotions> counts{};
  double alpha = 1.0;

  int total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

// Sequential assignment prior: seen label mass proportional to its block
// size, new-label mass alpha split uniformly over unseen labels; when all
// labels are seen the alpha mass is dropped and seen mass renormalized.
std::array<double, kNumEmotions> ddcrp_prior(const BlockState& blocks);

struct UtterancePosterior {
  std::string speaker_id;
  std::array<double, kNumEmotions> p{};
};

struct BeamHypothesis {
  std::vector<EmotionLabel> labels;
  std::vector<uint8_t> shifts;  // s_k = 1 iff label differs from the same
                                // speaker's previous label
  std::vector<std::pair<std::string, EmotionLabel>> last_by_speaker;
  BlockState blocks;
  double log_score = 0.0;
};

struct DecodeConfig {
  int beam_width = 16;
  double alpha = 1.0;
  std::optional<double> p0_override;
};

// Log-score increment for extending a hypothesis with label y:
//   log p(y | x_k)
//   + (continuation)       log(1 - p0)
//   + (shift)              log p0 + log ddcrp_prior(blocks)[y]
//   + (first of speaker)   log ddcrp_prior(blocks)[y]
// A zero posterior yields -inf (hypothesis prunable).
double step_score(const BeamHypothesis& hyp, EmotionLabel y,
                  const std::array<double, kNumEmotions>& posterior, const ShiftModel& shift,
                  const std::string& speaker);

struct DecodeResult {
  std::vector<EmotionLabel> labels;
  double log_score = 0.0;
};

// Beam search over the joint objective with deterministic lexicographic
// tie-breaking (anger < happiness < neutrality < sadness).
DecodeResult ded_decode(std::span<const UtterancePosterior> posteriors, const DecodeConfig& config,
                        const ShiftModel& shift);

// Exhaustive argmax of the same objective; K <= 10 guard. Oracle for the
// beam search.
DecodeResult brute_force_decode(std::span<const UtterancePosterior> posteriors,
                                const ShiftModel& shift, double alpha);

// Objective value of a fixed label sequence, accumulated in decode order.
double sequence_log_score(std::span<const UtterancePosterior> posteriors,
                          std::span<const EmotionLabel> labels, const ShiftModel& shift,
                          double alpha);

}  // namespace gxl
