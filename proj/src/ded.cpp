// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/ded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gxl/error.hpp"

namespace gxl {

namespace {

constexpr double kClamp = 1e-6;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double estimate_p0(const std::vector<const Dialogue*>& dialogues) {
  int64_t pairs = 0, shifts = 0;
  for (const Dialogue* d : dialogues) {
    std::map<std::string, EmotionLabel> last;
    for (const Utterance& u : d->utterances) {
      auto it = last.find(u.speaker_id);
      if (it != last.end()) {
        ++pairs;
        if (it->second != u.label) ++shifts;
        it->second = u.label;
      } else {
        last.emplace(u.speaker_id, u.label);
      }
    }
  }
  if (pairs == 0) {
    throw UsageError("estimate_p0: no same-speaker consecutive utterance pairs in corpus");
  }
  const double p0 = static_cast<double>(shifts) / static_cast<double>(pairs);
  return std::clamp(p0, kClamp, 1.0 - kClamp);
}

double estimate_p0(const Corpus& train) {
  std::vector<const Dialogue*> dialogues;
  dialogues.reserve(train.dialogues.size());
  for (const Dialogue& d : train.dialogues) dialogues.push_back(&d);
  return estimate_p0(dialogues);
}

std::vector<std::pair<std::string, double>> estimate_p0_per_speaker(const Corpus& train) {
  std::map<std::string, std::pair<int64_t, int64_t>> tally;  // speaker -> {pairs, shifts}
  for (const Dialogue& d : train.dialogues) {
    std::map<std::string, EmotionLabel> last;
    for (const Utterance& u : d.utterances) {
      auto it = last.find(u.speaker_id);
      if (it != last.end()) {
        auto& [pairs, shifts] = tally[u.speaker_id];
        ++pairs;
        if (it->second != u.label) ++shifts;
        it->second = u.label;
      } else {
        last.emplace(u.speaker_id, u.label);
      }
    }
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [speaker, counts] : tally) {
    if (counts.first == 0) continue;
    const double p0 = static_cast<double>(counts.second) / static_cast<double>(counts.first);
    out.emplace_back(speaker, std::clamp(p0, kClamp, 1.0 - kClamp));
  }
  if (out.empty()) {
    throw UsageError("estimate_p0_per_speaker: no same-speaker consecutive pairs in corpus");
  }
  return out;
}

std::array<double, kNumEmotions> ddcrp_prior(const BlockState& blocks) {
  if (blocks.alpha <= 0.0) throw UsageError("ddcrp_prior: alpha must be positive");
  std::array<double, kNumEmotions> p{};
  int unseen = 0;
  for (int c = 0; c < kNumEmotions; ++c) {
    if (blocks.counts[static_cast<size_t>(c)] == 0) ++unseen;
  }
  double total = static_cast<double>(blocks.total());
  if (unseen > 0) total += blocks.alpha;
  for (int c = 0; c < kNumEmotions; ++c) {
    const int n = blocks.counts[static_cast<size_t>(c)];
    p[static_cast<size_t>(c)] =
        n > 0 ? static_cast<double>(n) / total : blocks.alpha / (unseen * total);
  }
  return p;
}

double step_score(const BeamHypothesis& hyp, EmotionLabel y,
                  const std::array<double, kNumEmotions>& posterior, const ShiftModel& shift,
                  const std::string& speaker) {
  const double py = posterior[static_cast<size_t>(y)];
  double score = py > 0.0 ? std::log(py) : kNegInf;

  const auto it = std::find_if(hyp.last_by_speaker.begin(), hyp.last_by_speaker.end(),
                               [&](const auto& kv) { return kv.first == speaker; });
  if (it == hyp.last_by_speaker.end()) {
    // First utterance of this speaker: prior draw without a shift factor.
    score += std::log(ddcrp_prior(hyp.blocks)[static_cast<size_t>(y)]);
  } else if (it->second == y) {
    score += std::log(1.0 - shift.p0);
  } else {
    score += std::log(shift.p0) + std::log(ddcrp_prior(hyp.blocks)[static_cast<size_t>(y)]);
  }
  return score;
}

namespace {

// Applies label y to the hypothesis bookkeeping after scoring.
void advance(BeamHypothesis& hyp, EmotionLabel y, const std::string& speaker) {
  auto it = std::find_if(hyp.last_by_speaker.begin(), hyp.last_by_speaker.end(),
                         [&](const auto& kv) { return kv.first == speaker; });
  uint8_t shifted = 0;
  if (it == hyp.last_by_speaker.end()) {
    hyp.last_by_speaker.emplace_back(speaker, y);
  } else {
    shifted = it->second != y ? 1 : 0;
    it->second = y;
  }
  hyp.labels.push_back(y);
  hyp.shifts.push_back(shifted);
  ++hyp.blocks.counts[static_cast<size_t>(y)];
}

bool better(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return std::lexicographical_compare(a.labels.begin(), a.labels.end(), b.labels.begin(),
                                      b.labels.end());
}

}  // namespace

DecodeResult ded_decode(std::span<const UtterancePosterior> posteriors,
                        const DecodeConfig& config, const ShiftModel& shift) {
  if (posteriors.empty()) throw UsageError("ded_decode: empty dialogue");
  if (config.beam_width < 1) throw UsageError("ded_decode: beam width must be >= 1");
  ShiftModel sm = shift;
  if (config.p0_override) sm.p0 = *config.p0_override;

  std::vector<BeamHypothesis> beam(1);
  beam[0].blocks.alpha = config.alpha;

  for (const UtterancePosterior& utt : posteriors) {
    std::vector<BeamHypothesis> candidates;
    candidates.reserve(beam.size() * kNumEmotions);
    for (const BeamHypothesis& hyp : beam) {
      for (int c = 0; c < kNumEmotions; ++c) {
        const EmotionLabel y = label_from_index(c);
        const double inc = step_score(hyp, y, utt.p, sm, utt.speaker_id);
        BeamHypothesis next = hyp;
        next.log_score += inc;
        advance(next, y, utt.speaker_id);
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better);
    if (static_cast<int>(candidates.size()) > config.beam_width) {
      candidates.resize(static_cast<size_t>(config.beam_width));
    }
    beam = std::move(candidates);
  }

  const BeamHypothesis& best = beam.front();
  return DecodeResult{best.labels, best.log_score};
}

double sequence_log_score(std::span<const UtterancePosterior> posteriors,
                          std::span<const EmotionLabel> labels, const ShiftModel& shift,
                          double alpha) {
  if (posteriors.size() != labels.size()) {
    throw UsageError("sequence_log_score: label count does not match posteriors");
  }
  BeamHypothesis hyp;
  hyp.blocks.alpha = alpha;
  double total = 0.0;
  for (size_t k = 0; k < posteriors.size(); ++k) {
    total += step_score(hyp, labels[k], posteriors[k].p, shift, posteriors[k].speaker_id);
    advance(hyp, labels[k], posteriors[k].speaker_id);
  }
  return total;
}

DecodeResult brute_force_decode(std::span<const UtterancePosterior> posteriors,
                                const ShiftModel& shift, double alpha) {
  if (posteriors.empty()) throw UsageError("brute_force_decode: empty dialogue");
  const size_t k = posteriors.size();
  if (k > 10) {
    throw UsageError("brute_force_decode: dialogue length " + std::to_string(k) +
                     " exceeds the 4^K enumeration guard (K <= 10)");
  }

  std::vector<EmotionLabel> current(k, EmotionLabel::kAnger);
  std::vector<EmotionLabel> best;
  double best_score = kNegInf;
  bool have_best = false;

  // Depth-first enumeration in lexicographic label order, so the first
  // maximum found is the lexicographically smallest one — the same
  // tie-break as the beam.
  auto recurse = [&](auto&& self, size_t depth, BeamHypothesis& hyp) -> void {
    if (depth == k) {
      if (!have_best || hyp.log_score > best_score) {
        have_best = true;
        best_score = hyp.log_score;
        best = current;
      }
      return;
    }
    for (int c = 0; c < kNumEmotions; ++c) {
      const EmotionLabel y = label_from_index(c);
      const double inc = step_score(hyp, y, posteriors[depth].p, shift,
                                    posteriors[depth].speaker_id);
      BeamHypothesis next = hyp;
      next.log_score += inc;
      advance(next, y, posteriors[depth].speaker_id);
      current[depth] = y;
      self(self, depth + 1, next);
    }
  };
  BeamHypothesis root;
  root.blocks.alpha = alpha;
  recurse(recurse, 0, root);
  return DecodeResult{best, best_score};
}

}  // namespace gxl
