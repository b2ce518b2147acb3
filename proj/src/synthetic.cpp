// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "gxl/error.hpp"
#include "gxl/rng.hpp"

namespace gxl {

void SyntheticConfig::validate() const {
  if (n_dialogues <= 0) throw UsageError("synthetic: n_dialogues must be positive");
  if (utterances_min < 1 || utterances_max < utterances_min) {
    throw UsageError("synthetic: bad utterance count range");
  }
  if (self_transition_prob < 0.0 || self_transition_prob > 1.0) {
    throw UsageError("synthetic: q must be in [0, 1]");
  }
  if (audio_scale < 0.0 || text_scale < 0.0) {
    throw UsageError("synthetic: signal scales must be >= 0");
  }
  if (noise_sigma <= 0.0) throw UsageError("synthetic: sigma must be positive");
  if (speaker_continue_prob < 0.0 || speaker_continue_prob >= 1.0) {
    throw UsageError("synthetic: speaker_continue_prob must be in [0, 1)");
  }
  if (embedding_dim < kNumEmotions) {
    throw UsageError("synthetic: embedding_dim must be >= number of classes");
  }
}

std::vector<std::vector<double>> synthetic_class_means(const SyntheticConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, 0x6d65616e /* "mean" */));
  const int d = config.embedding_dim;
  std::vector<std::vector<double>> means(kNumEmotions, std::vector<double>(static_cast<size_t>(d)));
  // Random directions, orthonormalized, scaled by the separation knob.
  for (auto& m : means)
    for (double& v : m) v = rng.normal();
  for (int c = 0; c < kNumEmotions; ++c) {
    for (int prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += means[c][k] * means[prev][k];
      for (int k = 0; k < d; ++k) means[c][k] -= dot * means[prev][k];
    }
    double norm = 0.0;
    for (int k = 0; k < d; ++k) norm += means[c][k] * means[c][k];
    norm = std::sqrt(norm);
    if (norm < 1e-9) throw NumericError("synthetic: degenerate class direction");
    for (int k = 0; k < d; ++k) means[c][k] *= config.class_separation / norm;
  }
  return means;
}

Corpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const auto means = synthetic_class_means(config);
  Rng rng(mix_seed(config.seed, 0x67656e /* "gen" */));

  auto sample_embedding = [&](int label, double scale) {
    std::vector<float> e(static_cast<size_t>(config.embedding_dim));
    for (int k = 0; k < config.embedding_dim; ++k) {
      const double v = scale * means[static_cast<size_t>(label)][static_cast<size_t>(k)] +
                       config.noise_sigma * rng.normal();
      e[static_cast<size_t>(k)] = static_cast<float>(v);
    }
    return e;
  };

  std::vector<Dialogue> dialogues;
  dialogues.reserve(static_cast<size_t>(config.n_dialogues));
  for (int d = 0; d < config.n_dialogues; ++d) {
    char id[16];
    std::snprintf(id, sizeof(id), "dlg%04d", d);
    Dialogue dlg;
    dlg.id = id;
    const int n_utt =
        static_cast<int>(rng.uniform_int(config.utterances_min, config.utterances_max));
    int speaker = static_cast<int>(rng.uniform_int(0, 1));
    int last_label[2] = {-1, -1};
    for (int i = 0; i < n_utt; ++i) {
      if (i > 0 && !rng.bernoulli(config.speaker_continue_prob)) speaker = 1 - speaker;
      int label;
      if (last_label[speaker] < 0) {
        label = static_cast<int>(rng.uniform_int(0, kNumEmotions - 1));
      } else if (rng.bernoulli(config.self_transition_prob)) {
        label = last_label[speaker];
      } else {
        // Uniform over the other three classes.
        int shift = static_cast<int>(rng.uniform_int(1, kNumEmotions - 1));
        label = (last_label[speaker] + shift) % kNumEmotions;
      }
      last_label[speaker] = label;

      Utterance u;
      u.dialogue_id = dlg.id;
      u.index = i;
      u.speaker_id = speaker == 0 ? "spk0" : "spk1";
      u.label = label_from_index(label);
      u.audio_embedding = sample_embedding(label, config.audio_scale);
      u.text_embedding = sample_embedding(label, config.text_scale);
      dlg.utterances.push_back(std::move(u));
    }
    dialogues.push_back(std::move(dlg));
  }
  return make_corpus(std::move(dialogues));
}

double plugin_classifier_accuracy(const SyntheticConfig& config, const Corpus& corpus) {
  const auto means = synthetic_class_means(config);
  int64_t correct = 0, total = 0;
  for (const Dialogue& d : corpus.dialogues) {
    for (const Utterance& u : d.utterances) {
      int best = 0;
      double best_dist = 0.0;
      for (int c = 0; c < kNumEmotions; ++c) {
        double dist = 0.0;
        for (int k = 0; k < config.embedding_dim; ++k) {
          const double da = static_cast<double>(u.audio_embedding[static_cast<size_t>(k)]) -
                            config.audio_scale * means[static_cast<size_t>(c)][static_cast<size_t>(k)];
          const double dt = static_cast<double>(u.text_embedding[static_cast<size_t>(k)]) -
                            config.text_scale * means[static_cast<size_t>(c)][static_cast<size_t>(k)];
          dist += da * da + dt * dt;
        }
        if (c == 0 || dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      if (label_from_index(best) == u.label) ++correct;
      ++total;
    }
  }
  if (total == 0) throw UsageError("plugin classifier: empty corpus");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace gxl
