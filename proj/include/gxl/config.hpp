// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gxl/model.hpp"
#include "gxl/synthetic.hpp"

namespace gxl {

// Full experiment configuration. Model hyperparameter defaults follow the
// reference setup (512-dim embeddings segmented into 16 steps, 8 layers,
// 4 heads, kernel 4, qkv block size 4, GELU feed-forward factor 1.3, Adam
// at 0.001, batch 32, split seed 42, seeds {42,43,45,46,50}).
struct RunConfig {
  // data
  std::string feature_mode = "synthetic";  // synthetic | clap-file
  std::string corpus_path;                 // required for clap-file
  SyntheticConfig synthetic;

  // protocol
  uint64_t split_seed = 42;
  std::vector<uint64_t> run_seeds = {42, 43, 45, 46, 50};
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 0.001;
  int early_stop_patience = 5;

  // model
  std::string model_mode = "gated-xlstm";  // gated-xlstm | base-xlstm
  int embedding_dim = 512;
  int segment_steps = 16;
  int xlstm_layers = 8;
  int heads = 4;
  int conv_kernel = 4;
  int qkv_block_size = 4;
  double ff_factor = 1.3;
  std::string activation = "gelu";  // fixed; validated
  int context_frames = 3;
  std::string layer_pattern = "alternate";
  int max_seq_len = 256;       // upper bound on segment_steps
  std::string gates = "exp";   // exp | sigmoid (input-gate ablation)
  bool shared_gate = false;
  bool share_frames = false;
  bool normalize_ref_audio = false;
  bool strict_pad_mask = false;

  // decoding / evaluation
  std::string decoder = "none";  // none | ded
  int beam_width = 16;
  double alpha = 1.0;
  std::optional<double> p0_override;
  double eval_posterior_noise = 0.0;  // logit noise sigma, seeded

  void validate() const;  // throws UsageError
  ModelConfig model_config() const;
  // Synthetic generator config with embedding_dim synced to the model's.
  SyntheticConfig effective_synthetic() const {
    SyntheticConfig s = synthetic;
    s.embedding_dim = embedding_dim;
    return s;
  }
  // Canonical serialization: every key, one per line, sorted. Used for
  // checkpoint snapshots; parse(serialize(c)) == c.
  std::string serialize() const;
};

// Parses `key = value` lines; '#' starts a full-line comment. Unknown keys
// and malformed values raise UsageError.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
// Applies one `key=value` override (CLI --set and internal use).
void apply_config_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace gxl
