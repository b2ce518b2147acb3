// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/xlstm.hpp"

#include <cmath>

#include "gxl/error.hpp"

namespace gxl {

std::vector<std::span<const float>> segment_embedding(std::span<const float> embedding,
                                                      int steps) {
  if (steps < 1) throw UsageError("segment_embedding: steps must be >= 1");
  const int64_t d = static_cast<int64_t>(embedding.size());
  if (d % steps != 0) {
    throw UsageError("segment_embedding: " + std::to_string(steps) + " steps do not divide dim " +
                     std::to_string(d));
  }
  const int64_t width = d / steps;
  std::vector<std::span<const float>> out;
  out.reserve(static_cast<size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    out.push_back(embedding.subspan(static_cast<size_t>(s) * static_cast<size_t>(width),
                                    static_cast<size_t>(width)));
  }
  return out;
}

void CellConfig::validate() const {
  if (input_dim <= 0 || hidden_dim <= 0) throw UsageError("cell: dims must be positive");
  if (heads <= 0 || hidden_dim % heads != 0) {
    throw UsageError("cell: hidden dim " + std::to_string(hidden_dim) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (qkv_blocks <= 0 || input_dim % qkv_blocks != 0 || hidden_dim % qkv_blocks != 0) {
    throw UsageError("cell: dims not divisible into " + std::to_string(qkv_blocks) +
                     " qkv blocks");
  }
}

namespace {

Var constant_like_gate(Tape& tape, int64_t batch, int64_t width, double v) {
  return tape.constant(Tensor::full({batch, width}, v));
}

}  // namespace

// ---------------------------------------------------------------------------
// MlstmCell
// ---------------------------------------------------------------------------

MlstmCell::MlstmCell(const std::string& prefix, CellConfig config, ParamStore& store,
                     Rng& init_rng)
    : config_(config) {
  config_.validate();
  const int d_in = config_.input_dim;
  const int d = config_.hidden_dim;
  const int nb = config_.qkv_blocks;
  const int bin = d_in / nb;
  const int bout = d / nb;
  const double w_std = 1.0 / std::sqrt(static_cast<double>(bin));
  for (int b = 0; b < nb; ++b) {
    wq_.push_back(store.normal(prefix + ".wq" + std::to_string(b), {bin, bout}, w_std, init_rng));
    wk_.push_back(store.normal(prefix + ".wk" + std::to_string(b), {bin, bout}, w_std, init_rng));
    wv_.push_back(store.normal(prefix + ".wv" + std::to_string(b), {bin, bout}, w_std, init_rng));
  }
  bq_ = store.zeros(prefix + ".bq", {1, d});
  bk_ = store.zeros(prefix + ".bk", {1, d});
  bv_ = store.zeros(prefix + ".bv", {1, d});
  const double g_std = 1.0 / std::sqrt(static_cast<double>(d_in));
  wi_ = store.normal(prefix + ".wi", {d_in, config_.heads}, g_std, init_rng);
  bi_ = store.zeros(prefix + ".bi", {1, config_.heads});
  wf_ = store.normal(prefix + ".wf", {d_in, config_.heads}, g_std, init_rng);
  bf_ = store.constant(prefix + ".bf", {1, config_.heads}, 1.0);
  wo_ = store.normal(prefix + ".wo", {d_in, d}, g_std, init_rng);
  bo_ = store.zeros(prefix + ".bo", {1, d});
}

Var MlstmCell::project(Tape& tape, Var x, const std::vector<Parameter*>& blocks,
                       Parameter* bias) const {
  const int nb = config_.qkv_blocks;
  const int64_t bin = config_.input_dim / nb;
  Var out;
  if (nb == 1) {
    out = tape.matmul(x, tape.leaf(blocks[0]));
  } else {
    std::vector<Var> parts;
    parts.reserve(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) {
      parts.push_back(tape.matmul(tape.slice_cols(x, b * bin, bin), tape.leaf(blocks[static_cast<size_t>(b)])));
    }
    out = tape.concat_cols(parts);
  }
  if (bias) out = tape.add(out, tape.leaf(bias));
  return out;
}

MlstmCell::State MlstmCell::initial_state(Tape& tape, int64_t batch) const {
  const int64_t h = config_.heads;
  const int64_t dh = config_.head_dim();
  State s;
  s.memory = tape.constant(Tensor::zeros({batch, h * dh * dh}));
  s.normalizer = tape.constant(Tensor::zeros({batch, h * dh}));
  s.stabilizer = tape.constant(Tensor::zeros({batch, h}));
  return s;
}

MlstmCell::StepOut MlstmCell::step(Tape& tape, const State& state, Var x,
                                   const GateOverride* override_gates) const {
  const int64_t batch = x.rows();
  const int64_t heads = config_.heads;
  const int64_t dh = config_.head_dim();

  Var q = project(tape, x, wq_, bq_);
  // k carries the attention-style 1/sqrt(d) on the projection, then bias.
  Var k = tape.add(tape.scale(project(tape, x, wk_, nullptr), 1.0 / std::sqrt(static_cast<double>(dh))),
                   tape.leaf(bk_));
  Var v = project(tape, x, wv_, bv_);
  Var o = tape.sigmoid(tape.add(tape.matmul(x, tape.leaf(wo_)), tape.leaf(bo_)));

  Var i_raw = tape.add(tape.matmul(x, tape.leaf(wi_)), tape.leaf(bi_));
  Var f_raw = tape.add(tape.matmul(x, tape.leaf(wf_)), tape.leaf(bf_));

  Var i_gate, f_gate, m_new;
  if (override_gates && (override_gates->input_gate || override_gates->forget_gate)) {
    i_gate = override_gates->input_gate
                 ? constant_like_gate(tape, batch, heads, *override_gates->input_gate)
                 : tape.sigmoid(i_raw);
    f_gate = override_gates->forget_gate
                 ? constant_like_gate(tape, batch, heads, *override_gates->forget_gate)
                 : tape.sigmoid(f_raw);
    m_new = state.stabilizer;
  } else if (config_.sigmoid_input_gate) {
    i_gate = tape.sigmoid(i_raw);
    f_gate = tape.sigmoid(f_raw);
    m_new = state.stabilizer;
  } else {
    // Stabilized exponential input gate, sigmoid forget gate in log space.
    Var log_f = tape.log_sigmoid(f_raw);
    m_new = tape.maximum(tape.add(log_f, state.stabilizer), i_raw);
    i_gate = tape.exp(tape.sub(i_raw, m_new));
    f_gate = tape.exp(tape.sub(tape.add(log_f, state.stabilizer), m_new));
  }

  // Per-head rank-1 write: C_t = f C_{t-1} + i v k^T.
  Var v_exp = tape.tile_cols_grouped(v, 1, dh);      // [B, H*dh*dh], v index varies slowly
  Var k_exp = tape.tile_cols_grouped(k, dh, dh);     // [B, H*dh*dh], k tiled within head
  Var outer = tape.mul(v_exp, k_exp);
  Var f_mem = tape.tile_cols_grouped(f_gate, 1, dh * dh);
  Var i_mem = tape.tile_cols_grouped(i_gate, 1, dh * dh);
  Var memory = tape.add(tape.mul(f_mem, state.memory), tape.mul(i_mem, outer));

  Var f_norm = tape.tile_cols_grouped(f_gate, 1, dh);
  Var i_norm = tape.tile_cols_grouped(i_gate, 1, dh);
  Var normalizer = tape.add(tape.mul(f_norm, state.normalizer), tape.mul(i_norm, k));

  // Read: h~ = C q / max(n^T q, 1) per head.
  Var q_exp = tape.tile_cols_grouped(q, dh, dh);
  Var read = tape.sum_cols_grouped(tape.mul(memory, q_exp), dh);      // [B, H*dh]
  Var nq = tape.sum_cols_grouped(tape.mul(normalizer, q), dh);        // [B, H]
  Var denom = tape.clamp_min(nq, 1.0);
  Var h_tilde = tape.div(read, tape.tile_cols_grouped(denom, 1, dh));
  Var hidden = tape.mul(o, h_tilde);

  StepOut out;
  out.hidden = hidden;
  out.state = State{memory, normalizer, m_new};
  out.denominator = denom;
  return out;
}

// ---------------------------------------------------------------------------
// SlstmCell
// ---------------------------------------------------------------------------

SlstmCell::SlstmCell(const std::string& prefix, CellConfig config, ParamStore& store,
                     Rng& init_rng)
    : config_(config) {
  config_.validate();
  const int d_in = config_.input_dim;
  const int d = config_.hidden_dim;
  const int dh = config_.head_dim();
  const double w_std = 1.0 / std::sqrt(static_cast<double>(d_in));
  const double r_std = 1.0 / std::sqrt(static_cast<double>(dh));
  wz_ = store.normal(prefix + ".wz", {d_in, d}, w_std, init_rng);
  wi_ = store.normal(prefix + ".wi", {d_in, d}, w_std, init_rng);
  wf_ = store.normal(prefix + ".wf", {d_in, d}, w_std, init_rng);
  wo_ = store.normal(prefix + ".wo", {d_in, d}, w_std, init_rng);
  for (int h = 0; h < config_.heads; ++h) {
    const std::string n = std::to_string(h);
    rz_.push_back(store.normal(prefix + ".rz" + n, {dh, dh}, r_std, init_rng));
    ri_.push_back(store.normal(prefix + ".ri" + n, {dh, dh}, r_std, init_rng));
    rf_.push_back(store.normal(prefix + ".rf" + n, {dh, dh}, r_std, init_rng));
    ro_.push_back(store.normal(prefix + ".ro" + n, {dh, dh}, r_std, init_rng));
  }
  bz_ = store.zeros(prefix + ".bz", {1, d});
  bi_ = store.zeros(prefix + ".bi", {1, d});
  bf_ = store.constant(prefix + ".bf", {1, d}, 1.0);
  bo_ = store.zeros(prefix + ".bo", {1, d});
}

Var SlstmCell::preactivation(Tape& tape, Var x, Var h, Parameter* w,
                             const std::vector<Parameter*>& r_blocks, Parameter* bias) const {
  const int64_t dh = config_.head_dim();
  Var acc = tape.matmul(x, tape.leaf(w));
  std::vector<Var> rec;
  rec.reserve(r_blocks.size());
  for (size_t head = 0; head < r_blocks.size(); ++head) {
    rec.push_back(tape.matmul(tape.slice_cols(h, static_cast<int64_t>(head) * dh, dh),
                              tape.leaf(r_blocks[head])));
  }
  return tape.add(tape.add(acc, tape.concat_cols(rec)), tape.leaf(bias));
}

SlstmCell::State SlstmCell::initial_state(Tape& tape, int64_t batch) const {
  const int64_t d = config_.hidden_dim;
  State s;
  s.cell = tape.constant(Tensor::zeros({batch, d}));
  s.normalizer = tape.constant(Tensor::zeros({batch, d}));
  s.stabilizer = tape.constant(Tensor::zeros({batch, d}));
  s.hidden = tape.constant(Tensor::zeros({batch, d}));
  return s;
}

SlstmCell::StepOut SlstmCell::step(Tape& tape, const State& state, Var x,
                                   const GateOverride* override_gates) const {
  const int64_t batch = x.rows();
  const int64_t d = config_.hidden_dim;

  Var z = tape.tanh(preactivation(tape, x, state.hidden, wz_, rz_, bz_));
  Var i_raw = preactivation(tape, x, state.hidden, wi_, ri_, bi_);
  Var f_raw = preactivation(tape, x, state.hidden, wf_, rf_, bf_);
  Var o = tape.sigmoid(preactivation(tape, x, state.hidden, wo_, ro_, bo_));

  Var i_gate, f_gate, m_new;
  if (override_gates && (override_gates->input_gate || override_gates->forget_gate)) {
    // Test hook: pinned gates bypass the stabilizer; any non-pinned gate
    // falls back to a plain sigmoid.
    i_gate = override_gates->input_gate
                 ? constant_like_gate(tape, batch, d, *override_gates->input_gate)
                 : tape.sigmoid(i_raw);
    f_gate = override_gates->forget_gate
                 ? constant_like_gate(tape, batch, d, *override_gates->forget_gate)
                 : tape.sigmoid(f_raw);
    m_new = state.stabilizer;
  } else if (config_.sigmoid_input_gate) {
    i_gate = tape.sigmoid(i_raw);
    f_gate = tape.sigmoid(f_raw);
    m_new = state.stabilizer;
  } else {
    // Exponential gating with the running log-scale max; both effective
    // gates land in (0, 1].
    m_new = tape.maximum(tape.add(f_raw, state.stabilizer), i_raw);
    i_gate = tape.exp(tape.sub(i_raw, m_new));
    f_gate = tape.exp(tape.sub(tape.add(f_raw, state.stabilizer), m_new));
  }

  Var cell = tape.add(tape.mul(f_gate, state.cell), tape.mul(i_gate, z));
  Var normalizer = tape.add(tape.mul(f_gate, state.normalizer), i_gate);
  Var hidden = tape.mul(o, tape.div(cell, normalizer));

  StepOut out;
  out.hidden = hidden;
  out.state = State{cell, normalizer, m_new, hidden};
  return out;
}

// ---------------------------------------------------------------------------
// Blocks and stacks
// ---------------------------------------------------------------------------

std::string StackConfig::expanded_pattern() const {
  std::string p = layer_pattern;
  if (p == "alternate") {
    p.clear();
    for (int i = 0; i < layers; ++i) p.push_back(i % 2 == 0 ? 'm' : 's');
  }
  if (static_cast<int>(p.size()) != layers) {
    throw UsageError("layer pattern '" + layer_pattern + "' does not match " +
                     std::to_string(layers) + " layers");
  }
  for (char c : p) {
    if (c != 'm' && c != 's') throw UsageError("layer pattern may contain only 'm' and 's'");
  }
  return p;
}

void StackConfig::validate() const {
  if (dim <= 0) throw UsageError("stack: dim must be positive");
  if (layers <= 0) throw UsageError("stack: layers must be positive");
  if (conv_kernel <= 0) throw UsageError("stack: conv kernel must be positive");
  if (ff_factor <= 0.0) throw UsageError("stack: feedforward factor must be positive");
  expanded_pattern();
  CellConfig cc{dim, dim, heads, qkv_blocks, sigmoid_input_gate};
  cc.validate();
}

XlstmBlock::XlstmBlock(const std::string& prefix, CellKind kind, const StackConfig& config,
                       ParamStore& store, Rng& init_rng)
    : kind_(kind), conv_kernel_(config.conv_kernel) {
  const int d = config.dim;
  ff_dim_ = std::max<int>(1, static_cast<int>(std::llround(config.ff_factor * d)));
  CellConfig cc{d, d, config.heads, config.qkv_blocks, config.sigmoid_input_gate};
  if (kind == CellKind::kMlstm) {
    mlstm_.emplace(prefix + ".mlstm", cc, store, init_rng);
  } else {
    slstm_.emplace(prefix + ".slstm", cc, store, init_rng);
  }
  const double conv_std = 1.0 / std::sqrt(static_cast<double>(config.conv_kernel));
  conv_w_ = store.normal(prefix + ".conv_w", {config.conv_kernel, d}, conv_std, init_rng);
  conv_b_ = store.zeros(prefix + ".conv_b", {1, d});
  const double up_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double down_std = 1.0 / std::sqrt(static_cast<double>(ff_dim_));
  ff_up_ = store.normal(prefix + ".ff_up", {d, ff_dim_}, up_std, init_rng);
  ff_up_b_ = store.zeros(prefix + ".ff_up_b", {1, ff_dim_});
  ff_gate_ = store.normal(prefix + ".ff_gate", {d, ff_dim_}, up_std, init_rng);
  ff_gate_b_ = store.zeros(prefix + ".ff_gate_b", {1, ff_dim_});
  ff_down_ = store.normal(prefix + ".ff_down", {ff_dim_, d}, down_std, init_rng);
  ff_down_b_ = store.zeros(prefix + ".ff_down_b", {1, d});
  ln_gamma_ = store.constant(prefix + ".ln_gamma", {1, d}, 1.0);
  ln_beta_ = store.zeros(prefix + ".ln_beta", {1, d});
}

std::vector<Var> XlstmBlock::forward(Tape& tape, std::span<const Var> inputs,
                                     const GateOverride* override_gates) const {
  if (inputs.empty()) throw UsageError("block forward: empty sequence");
  const int64_t batch = inputs[0].rows();
  const size_t steps = inputs.size();

  // Causal depthwise conv: taps indexed by lag, missing history is zero.
  std::vector<Var> taps;
  taps.reserve(static_cast<size_t>(conv_kernel_));
  Var conv_w = tape.leaf(conv_w_);
  for (int k = 0; k < conv_kernel_; ++k) taps.push_back(tape.slice_rows(conv_w, k, 1));
  Var conv_b = tape.leaf(conv_b_);

  std::vector<Var> conv_out;
  conv_out.reserve(steps);
  for (size_t t = 0; t < steps; ++t) {
    Var acc = tape.mul(inputs[t], taps[0]);
    for (int k = 1; k < conv_kernel_ && static_cast<size_t>(k) <= t; ++k) {
      acc = tape.add(acc, tape.mul(inputs[t - static_cast<size_t>(k)], taps[static_cast<size_t>(k)]));
    }
    conv_out.push_back(tape.add(acc, conv_b));
  }

  std::vector<Var> hidden;
  hidden.reserve(steps);
  if (kind_ == CellKind::kMlstm) {
    MlstmCell::State state = mlstm_->initial_state(tape, batch);
    for (size_t t = 0; t < steps; ++t) {
      auto out = mlstm_->step(tape, state, conv_out[t], override_gates);
      state = out.state;
      hidden.push_back(out.hidden);
    }
  } else {
    SlstmCell::State state = slstm_->initial_state(tape, batch);
    for (size_t t = 0; t < steps; ++t) {
      auto out = slstm_->step(tape, state, conv_out[t], override_gates);
      state = out.state;
      hidden.push_back(out.hidden);
    }
  }

  Var gamma = tape.leaf(ln_gamma_);
  Var beta = tape.leaf(ln_beta_);
  Var up_w = tape.leaf(ff_up_), up_b = tape.leaf(ff_up_b_);
  Var gate_w = tape.leaf(ff_gate_), gate_b = tape.leaf(ff_gate_b_);
  Var down_w = tape.leaf(ff_down_), down_b = tape.leaf(ff_down_b_);

  std::vector<Var> out;
  out.reserve(steps);
  for (size_t t = 0; t < steps; ++t) {
    Var up = tape.add(tape.matmul(hidden[t], up_w), up_b);
    Var gate = tape.add(tape.matmul(hidden[t], gate_w), gate_b);
    Var ff = tape.add(tape.matmul(tape.mul(tape.gelu(gate), up), down_w), down_b);
    out.push_back(tape.layer_norm(tape.add(inputs[t], ff), gamma, beta));
  }
  return out;
}

BlockStack::BlockStack(const std::string& prefix, StackConfig config, ParamStore& store,
                       Rng& init_rng)
    : config_(std::move(config)) {
  config_.validate();
  const std::string pattern = config_.expanded_pattern();
  for (int l = 0; l < config_.layers; ++l) {
    const CellKind kind = pattern[static_cast<size_t>(l)] == 'm' ? CellKind::kMlstm : CellKind::kSlstm;
    blocks_.emplace_back(prefix + ".block" + std::to_string(l), kind, config_, store, init_rng);
  }
}

std::vector<Var> BlockStack::forward_sequence(Tape& tape, std::span<const Var> sequence,
                                              const GateOverride* override_gates) const {
  if (sequence.empty()) throw UsageError("xlstm forward: empty sequence");
  std::vector<Var> current(sequence.begin(), sequence.end());
  for (const XlstmBlock& block : blocks_) {
    current = block.forward(tape, current, override_gates);
  }
  return current;
}

Var BlockStack::forward(Tape& tape, std::span<const Var> sequence) const {
  return forward_sequence(tape, sequence).back();
}

}  // namespace gxl
