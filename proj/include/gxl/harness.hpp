// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gxl/checkpoint.hpp"
#include "gxl/config.hpp"
#include "gxl/corpus.hpp"
#include "gxl/ded.hpp"
#include "gxl/metrics.hpp"
#include "gxl/model.hpp"
#include "gxl/optim.hpp"

namespace gxl {

// Loads the corpus file or generates the synthetic one, per feature_mode.
Corpus corpus_from_config(const RunConfig& config);

struct TrainResult {
  std::unique_ptr<GatedXlstmModel> model;  // parameters at the best epoch
  std::unique_ptr<Adam> optimizer;         // state at the best epoch
  double p0 = 0.5;                         // shift estimate from the training split
  uint32_t best_epoch = 0;
  double best_val_f1 = 0.0;
  std::vector<double> val_f1_history;
};

// Mini-batch cross-entropy training with Adam, per-epoch validation on
// weighted F1 and early stopping (patience from the config). Fully seeded:
// parameter init and batch shuffling derive from `seed`.
TrainResult train(const RunConfig& config, const Corpus& corpus, const SplitResult& split,
                  uint64_t seed);

struct EvalOptions {
  bool use_ded = false;
  int beam_width = 16;
  double alpha = 1.0;
  double p0 = 0.5;  // from the checkpoint's training split
  std::optional<double> p0_override;
  // Seeded Gaussian noise added to logits before the softmax; simulates a
  // weaker upstream classifier for decoder experiments.
  double posterior_noise = 0.0;
  uint64_t noise_seed = 0;
};

MetricsReport evaluate(const GatedXlstmModel& model, const Corpus& corpus,
                       const std::vector<int>& dialogue_indices, const EvalOptions& opts);
MetricsReport evaluate_corpus(const GatedXlstmModel& model, const Corpus& corpus,
                              const EvalOptions& opts);

// Posterior interchange records (JSON lines): one line per utterance,
// {dialogue_id, index, speaker_id, posterior: [4], gold?}.
struct PosteriorRecord {
  std::string dialogue_id;
  int index = 0;
  std::string speaker_id;
  std::array<double, kNumEmotions> posterior{};
  std::optional<EmotionLabel> gold;
};

std::vector<PosteriorRecord> collect_posteriors(const GatedXlstmModel& model, const Corpus& corpus,
                                                const std::vector<int>& dialogue_indices,
                                                double posterior_noise = 0.0,
                                                uint64_t noise_seed = 0);
void write_posterior_jsonl(const std::vector<PosteriorRecord>& records, const std::string& path);
std::vector<PosteriorRecord> read_posterior_jsonl(const std::string& path);

// Decodes records grouped by dialogue (in first-appearance order) and
// returns (dialogue_id, index, label) triples in input order.
struct DecodedUtterance {
  std::string dialogue_id;
  int index = 0;
  std::string speaker_id;
  EmotionLabel label = EmotionLabel::kAnger;
};
std::vector<DecodedUtterance> decode_posterior_records(const std::vector<PosteriorRecord>& records,
                                                       const DecodeConfig& config, double p0);
void write_decoded_jsonl(const std::vector<DecodedUtterance>& decoded, const std::string& path);

struct SeedRun {
  uint64_t seed = 0;
  MetricsReport test;
};

struct ProtocolSummary {
  std::vector<SeedRun> runs;
  // Percent scale, sample standard deviation (0 for a single seed).
  double mean_w_acc = 0.0, std_w_acc = 0.0;
  double mean_w_f1 = 0.0, std_w_f1 = 0.0;
  std::string formatted_w_acc;  // "76.34 ± 1.31"
  std::string formatted_w_f1;
};

// Trains and evaluates once per run seed on a shared split, writing
// per-seed artifacts (checkpoint.bin, metrics.csv, confusion.csv,
// gates.csv) plus summary.csv when out_dir is non-empty.
ProtocolSummary run_protocol(const RunConfig& config, const std::string& out_dir = "");

void write_summary_csv(const ProtocolSummary& summary, const std::string& path);
// Parses mean/std rows back from a summary.csv (round-trip checks).
std::vector<std::pair<std::string, std::pair<double, double>>> parse_summary_csv(
    const std::string& path);

struct AblationRow {
  std::string feature;
  std::string model;
  std::string decoder;
  double w_acc = 0.0;  // percent, mean over seeds
  double w_f1 = 0.0;
  double delta_acc = 0.0;  // vs the base row
  double delta_f1 = 0.0;
};

// Grid {base-xlstm, gated-xlstm} x {none, ded} on one shared split; means
// over the config's run seeds. Writes ablation.csv when out_dir given.
std::vector<AblationRow> ablate(const RunConfig& config, const std::string& out_dir = "");
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

std::string format_mean_std(double mean, double stddev);  // two decimals

}  // namespace gxl
