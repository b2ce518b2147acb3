// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gxl/autodiff.hpp"
#include "gxl/params.hpp"

namespace gxl {

// Splits a fixed-size embedding into `steps` contiguous chunks of equal
// width, in index order; concatenating the chunks reconstructs the input.
std::vector<std::span<const float>> segment_embedding(std::span<const float> embedding, int steps);

// Test hook: pins the (post-activation) input/forget gates to constants,
// bypassing the stabilizer. Used by carry-through invariant tests.
struct GateOverride {
  std::optional<double> input_gate;
  std::optional<double> forget_gate;
};

struct CellConfig {
  int input_dim = 0;
  int hidden_dim = 0;
  int heads = 4;
  int qkv_blocks = 4;  // block-diagonal q/k/v projections; 1 = dense
  // Ablation fallback: sigmoid input gate instead of stabilized exp.
  bool sigmoid_input_gate = false;

  int head_dim() const { return hidden_dim / heads; }
  void validate() const;
};

// Matrix-memory cell. Per head h: C_t = f_t C_{t-1} + i_t v_t k_t^T,
// n_t = f_t n_{t-1} + i_t k_t, read h~ = C_t q_t / max(n_t^T q_t, 1), with
// k scaled by 1/sqrt(head_dim). Input gate is exponential with a log-scale
// stabilizer; forget and output gates are sigmoid. Scalar i/f per head,
// per-dimension output gate.
class MlstmCell {
 public:
  MlstmCell(const std::string& prefix, CellConfig config, ParamStore& store, Rng& init_rng);

  struct State {
    Var memory;      // [B, H*dh*dh], per-head row-major blocks
    Var normalizer;  // [B, H*dh]
    Var stabilizer;  // [B, H]
  };
  struct StepOut {
    Var hidden;  // [B, d]
    State state;
    Var denominator;  // [B, H], the clamped read normalizer
  };

  State initial_state(Tape& tape, int64_t batch) const;
  StepOut step(Tape& tape, const State& state, Var x,
               const GateOverride* override_gates = nullptr) const;

  const CellConfig& config() const { return config_; }

 private:
  Var project(Tape& tape, Var x, const std::vector<Parameter*>& blocks, Parameter* bias) const;

  CellConfig config_;
  std::vector<Parameter*> wq_, wk_, wv_;  // one [in_block, out_block] per qkv block
  Parameter* bq_;
  Parameter* bk_;
  Parameter* bv_;
  Parameter* wi_;  // [d_in, H]
  Parameter* bi_;
  Parameter* wf_;
  Parameter* bf_;
  Parameter* wo_;  // [d_in, d]
  Parameter* bo_;
};

// Scalar-memory cell with stabilized exponential gating and block-diagonal
// (per-head) recurrence: m_t = max(raw_f + m_{t-1}, raw_i),
// c_t = f'c_{t-1} + i'z_t, n_t = f'n_{t-1} + i', h_t = o ⊙ (c_t / n_t)
// where i' = exp(raw_i - m_t), f' = exp(raw_f + m_{t-1} - m_t) are both in
// (0, 1] by construction and z_t is a tanh pre-activation.
class SlstmCell {
 public:
  SlstmCell(const std::string& prefix, CellConfig config, ParamStore& store, Rng& init_rng);

  struct State {
    Var cell;        // [B, d]
    Var normalizer;  // [B, d]
    Var stabilizer;  // [B, d]
    Var hidden;      // [B, d]
  };
  struct StepOut {
    Var hidden;
    State state;
  };

  State initial_state(Tape& tape, int64_t batch) const;
  StepOut step(Tape& tape, const State& state, Var x,
               const GateOverride* override_gates = nullptr) const;

  const CellConfig& config() const { return config_; }

 private:
  // raw = x W + h R + b with R block-diagonal per head.
  Var preactivation(Tape& tape, Var x, Var h, Parameter* w,
                    const std::vector<Parameter*>& r_blocks, Parameter* bias) const;

  CellConfig config_;
  Parameter* wz_;
  Parameter* wi_;
  Parameter* wf_;
  Parameter* wo_;
  std::vector<Parameter*> rz_, ri_, rf_, ro_;  // [dh, dh] per head
  Parameter* bz_;
  Parameter* bi_;
  Parameter* bf_;
  Parameter* bo_;
};

enum class CellKind : uint8_t { kMlstm = 0, kSlstm = 1 };

struct StackConfig {
  int dim = 0;  // token dim; block input == output dim
  int layers = 8;
  // One char per layer, 'm' or 's'; "alternate" expands to msms...
  std::string layer_pattern = "alternate";
  int heads = 4;
  int qkv_blocks = 4;
  int conv_kernel = 4;
  double ff_factor = 1.3;
  bool sigmoid_input_gate = false;

  std::string expanded_pattern() const;  // validated, length == layers
  void validate() const;
};

// One residual block: causal depthwise conv (kernel k) feeding the cell,
// a GELU-gated feed-forward, residual from the block input, then layer
// norm. Sequence-to-sequence, causal.
class XlstmBlock {
 public:
  XlstmBlock(const std::string& prefix, CellKind kind, const StackConfig& config,
             ParamStore& store, Rng& init_rng);

  std::vector<Var> forward(Tape& tape, std::span<const Var> inputs,
                           const GateOverride* override_gates = nullptr) const;

  CellKind kind() const { return kind_; }

 private:
  CellKind kind_;
  int conv_kernel_;
  int ff_dim_;
  std::optional<MlstmCell> mlstm_;
  std::optional<SlstmCell> slstm_;
  Parameter* conv_w_;  // [kernel, d]; row 0 is the current step's tap
  Parameter* conv_b_;
  Parameter* ff_up_;
  Parameter* ff_up_b_;
  Parameter* ff_gate_;
  Parameter* ff_gate_b_;
  Parameter* ff_down_;
  Parameter* ff_down_b_;
  Parameter* ln_gamma_;
  Parameter* ln_beta_;
};

// Stacked xLSTM blocks over a segmented embedding; the final step's top
// hidden state is the sequence representation.
class BlockStack {
 public:
  BlockStack(const std::string& prefix, StackConfig config, ParamStore& store, Rng& init_rng);

  Var forward(Tape& tape, std::span<const Var> sequence) const;
  std::vector<Var> forward_sequence(Tape& tape, std::span<const Var> sequence,
                                    const GateOverride* override_gates = nullptr) const;

  const StackConfig& config() const { return config_; }

 private:
  StackConfig config_;
  std::vector<XlstmBlock> blocks_;
};

}  // namespace gxl
