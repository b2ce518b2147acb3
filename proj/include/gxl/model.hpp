// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gxl/corpus.hpp"
#include "gxl/params.hpp"
#include "gxl/xlstm.hpp"

namespace gxl {

struct ModelConfig {
  int embedding_dim = 512;
  int segment_steps = 16;
  int layers = 8;
  int heads = 4;
  int qkv_blocks = 4;
  int conv_kernel = 4;
  double ff_factor = 1.3;
  int context_frames = 3;
  std::string layer_pattern = "alternate";
  // false = base variant: every stream weight is the constant 1, no gate
  // parameters exist, so the gate is the only delta in ablations.
  bool gated = true;
  bool shared_gate = false;      // one gate map for all non-reference streams
  bool share_frames = false;     // reuse stacks across frames
  bool normalize_ref_audio = false;  // L2-normalize the current audio embedding
  bool strict_pad_mask = false;  // hard-zero padded streams after the gate
  bool sigmoid_input_gate = false;

  int hidden_dim() const { return embedding_dim / segment_steps; }
  int n_streams() const { return 4 * context_frames; }
  void validate() const;  // throws UsageError
};

// Mean absolute gate weight per stream over a dataset; reference row first.
struct GateReport {
  struct Row {
    StreamRef ref;
    double mean_abs_weight = 0.0;
    int64_t n = 0;
  };
  std::vector<Row> rows;
};

// The full gated fusion model: one xLSTM stack per stream, scalar gates on
// the raw embeddings (reference stream pinned to 1), and a linear head over
// the concatenated gated features.
class GatedXlstmModel {
 public:
  GatedXlstmModel(ModelConfig config, uint64_t init_seed);

  // Batched logits over prediction targets. Each StreamSet must carry one
  // stream per canonical slot; input order is canonicalized internally.
  // forced_gates (test hook) pins gate weights by slot.
  Var forward(Tape& tape, const std::vector<const StreamSet*>& batch,
              const std::map<int, double>* forced_gates = nullptr) const;

  // Gate weights in canonical slot order for one target; slot 0 is 1.0.
  std::vector<double> gate_values(const StreamSet& streams) const;

  std::vector<std::array<double, kNumEmotions>> predict_logits(const Dialogue& dialogue) const;
  // Softmax posteriors per utterance; rows sum to 1.
  std::vector<std::array<double, kNumEmotions>> predict_posteriors(const Dialogue& dialogue) const;

  GateReport gate_report(const Corpus& corpus) const;  // throws UsageError if empty

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return config_; }

 private:
  const BlockStack& stack_for(int slot) const;

  ModelConfig config_;
  ParamStore store_;
  std::vector<std::unique_ptr<BlockStack>> stacks_;
  std::vector<Parameter*> gate_w_;  // indexed by slot; slot 0 unused
  std::vector<Parameter*> gate_b_;
  Parameter* head_w_ = nullptr;
  Parameter* head_b_ = nullptr;
};

std::array<double, kNumEmotions> softmax_probs(const std::array<double, kNumEmotions>& logits);

void write_gate_report_csv(const GateReport& report, const std::string& path);
// Minimal bar chart of the report, one bar per stream.
void write_gate_report_svg(const GateReport& report, const std::string& path);

}  // namespace gxl
