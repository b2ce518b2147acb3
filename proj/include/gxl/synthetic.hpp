// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <vector>

#include "gxl/corpus.hpp"

namespace gxl {

// Desk-scale stand-in for a featurized conversation corpus. Two speakers
// per dialogue; each speaker's emotion sequence is a Markov chain with
// self-transition probability q and uniform switching. Every utterance's
// embeddings are class mean times the modality's signal scale plus
// Gaussian noise.
//
// Signal scales are per modality: a stream is a (role, modality, frame)
// view of an utterance, and an utterance's embedding is shared between its
// "self" and "interlocutor" appearances, so role- or frame-specific scales
// are not realizable at generation time. With audio_scale > 0 the
// label-relevant signal reaches the self-audio streams directly; the
// interlocutor streams carry the partner's label, which is independent of
// the target's chain.
struct SyntheticConfig {
  int n_dialogues = 200;
  int utterances_min = 6;
  int utterances_max = 10;
  double self_transition_prob = 0.8;  // q
  double audio_scale = 1.0;
  double text_scale = 1.0;
  double class_separation = 3.0;  // distance scale between class means
  double noise_sigma = 1.0;
  // Probability that the next utterance keeps the same speaker (turns are
  // otherwise alternating); exercises interlocutor lookups over runs.
  double speaker_continue_prob = 0.15;
  int embedding_dim = 512;
  uint64_t seed = 42;

  void validate() const;  // throws UsageError
};

// Pure function of the config: equal configs give equal corpora.
Corpus generate_synthetic(const SyntheticConfig& config);

// The true class means of the generator (unit directions scaled by
// class_separation), before modality scaling. Deterministic in the seed.
std::vector<std::vector<double>> synthetic_class_means(const SyntheticConfig& config);

// Plug-in Bayes classifier on the true generator means: assigns each
// utterance to the nearest scaled class mean over both modalities and
// returns its accuracy. Upper-bounds what a context-free classifier can do
// on this corpus up to estimation noise; used as the learnability anchor.
double plugin_classifier_accuracy(const SyntheticConfig& config, const Corpus& corpus);

}  // namespace gxl
