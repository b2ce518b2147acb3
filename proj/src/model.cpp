// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/model.hpp"

#include <cmath>
#include <fstream>

#include "gxl/error.hpp"

namespace gxl {

void ModelConfig::validate() const {
  if (embedding_dim <= 0) throw UsageError("model: embedding_dim must be positive");
  if (segment_steps <= 0 || embedding_dim % segment_steps != 0) {
    throw UsageError("model: segment_steps " + std::to_string(segment_steps) +
                     " must divide embedding_dim " + std::to_string(embedding_dim));
  }
  if (context_frames < 1) throw UsageError("model: context_frames must be >= 1");
  StackConfig sc{hidden_dim(), layers,      layer_pattern, heads,
                 qkv_blocks,   conv_kernel, ff_factor,     sigmoid_input_gate};
  sc.validate();
}

GatedXlstmModel::GatedXlstmModel(ModelConfig config, uint64_t init_seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng init_rng(mix_seed(init_seed, 0x696e6974 /* "init" */));

  const int n_stacks = config_.share_frames ? 4 : config_.n_streams();
  StackConfig sc{config_.hidden_dim(), config_.layers,      config_.layer_pattern,
                 config_.heads,        config_.qkv_blocks,  config_.conv_kernel,
                 config_.ff_factor,    config_.sigmoid_input_gate};
  for (int s = 0; s < n_stacks; ++s) {
    stacks_.push_back(
        std::make_unique<BlockStack>("stream" + std::to_string(s), sc, store_, init_rng));
  }

  if (config_.gated) {
    // Weight vectors start at zero, bias at +1, so initial gate weights sit
    // near 0.73 and no stream is starved early.
    gate_w_.assign(static_cast<size_t>(config_.n_streams()), nullptr);
    gate_b_.assign(static_cast<size_t>(config_.n_streams()), nullptr);
    if (config_.shared_gate) {
      Parameter* w = store_.zeros("gate.w", {config_.embedding_dim, 1});
      Parameter* b = store_.constant("gate.b", {1, 1}, 1.0);
      for (int s = 1; s < config_.n_streams(); ++s) {
        gate_w_[static_cast<size_t>(s)] = w;
        gate_b_[static_cast<size_t>(s)] = b;
      }
    } else {
      for (int s = 1; s < config_.n_streams(); ++s) {
        gate_w_[static_cast<size_t>(s)] =
            store_.zeros("gate.w" + std::to_string(s), {config_.embedding_dim, 1});
        gate_b_[static_cast<size_t>(s)] = store_.constant("gate.b" + std::to_string(s), {1, 1}, 1.0);
      }
    }
  }

  // Zero-initialized head: an untrained model emits uniform posteriors.
  head_w_ = store_.zeros("head.w", {config_.n_streams() * config_.hidden_dim(), kNumEmotions});
  head_b_ = store_.zeros("head.b", {1, kNumEmotions});
}

const BlockStack& GatedXlstmModel::stack_for(int slot) const {
  const int idx = config_.share_frames ? slot % 4 : slot;
  return *stacks_[static_cast<size_t>(idx)];
}

namespace {

// Positions of each canonical slot within a StreamSet, validating that the
// set covers every slot exactly once.
std::vector<int> slot_index(const StreamSet& set, const ModelConfig& config) {
  const int n = config.n_streams();
  if (static_cast<int>(set.refs.size()) != n) {
    throw UsageError("stream set has " + std::to_string(set.refs.size()) + " streams, expected " +
                     std::to_string(n));
  }
  if (set.dim != config.embedding_dim) {
    throw UsageError("stream set dim " + std::to_string(set.dim) + " != model dim " +
                     std::to_string(config.embedding_dim));
  }
  std::vector<int> by_slot(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int s = set.refs[static_cast<size_t>(i)].slot();
    if (s < 0 || s >= n || by_slot[static_cast<size_t>(s)] != -1) {
      throw UsageError("stream set does not cover each canonical slot exactly once");
    }
    by_slot[static_cast<size_t>(s)] = i;
  }
  return by_slot;
}

}  // namespace

Var GatedXlstmModel::forward(Tape& tape, const std::vector<const StreamSet*>& batch,
                             const std::map<int, double>* forced_gates) const {
  if (batch.empty()) throw UsageError("forward: empty batch");
  const int64_t b = static_cast<int64_t>(batch.size());
  const int64_t dim = config_.embedding_dim;
  const int64_t token = config_.embedding_dim / config_.segment_steps;
  const int steps = config_.segment_steps;

  std::vector<std::vector<int>> slots;
  slots.reserve(batch.size());
  for (const StreamSet* set : batch) slots.push_back(slot_index(*set, config_));

  std::vector<Var> gated;
  gated.reserve(static_cast<size_t>(config_.n_streams()));
  for (int slot = 0; slot < config_.n_streams(); ++slot) {
    // Raw embeddings for this stream across the batch.
    Tensor embed({b, dim});
    for (int64_t i = 0; i < b; ++i) {
      const StreamSet& set = *batch[static_cast<size_t>(i)];
      const auto span = set.embeddings[static_cast<size_t>(slots[static_cast<size_t>(i)][static_cast<size_t>(slot)])];
      double* row = embed.data() + i * dim;
      for (int64_t j = 0; j < dim; ++j) row[j] = static_cast<double>(span[static_cast<size_t>(j)]);
      if (slot == 0 && config_.normalize_ref_audio) {
        double norm = 0.0;
        for (int64_t j = 0; j < dim; ++j) norm += row[j] * row[j];
        norm = std::sqrt(norm);
        if (norm > 0.0) {
          for (int64_t j = 0; j < dim; ++j) row[j] /= norm;
        }
      }
    }

    // Segment into the step sequence and run the stream's stack.
    std::vector<Var> seq;
    seq.reserve(static_cast<size_t>(steps));
    for (int t = 0; t < steps; ++t) {
      Tensor chunk({b, token});
      for (int64_t i = 0; i < b; ++i) {
        const double* src = embed.data() + i * dim + t * token;
        double* dst = chunk.data() + i * token;
        for (int64_t j = 0; j < token; ++j) dst[j] = src[j];
      }
      seq.push_back(tape.constant(std::move(chunk)));
    }
    Var features = stack_for(slot).forward(tape, seq);

    // Gate. Slot 0 is the reference stream with constant weight 1.
    Var z = features;
    const bool forced = forced_gates && forced_gates->count(slot);
    if (forced) {
      Var w = tape.constant(Tensor::full({b, 1}, forced_gates->at(slot)));
      z = tape.mul(features, w);
    } else if (slot != 0 && config_.gated) {
      Var embed_var = tape.constant(embed);
      Var w = tape.sigmoid(tape.add(tape.matmul(embed_var, tape.leaf(gate_w_[static_cast<size_t>(slot)])),
                                    tape.leaf(gate_b_[static_cast<size_t>(slot)])));
      z = tape.mul(features, w);
    }
    if (config_.strict_pad_mask) {
      Tensor mask({b, 1});
      for (int64_t i = 0; i < b; ++i) {
        const StreamSet& set = *batch[static_cast<size_t>(i)];
        const StreamRef& ref = set.refs[static_cast<size_t>(slots[static_cast<size_t>(i)][static_cast<size_t>(slot)])];
        mask[i] = ref.padded() ? 0.0 : 1.0;
      }
      z = tape.mul(z, tape.constant(std::move(mask)));
    }
    gated.push_back(z);
  }

  Var fused = tape.concat_cols(gated);
  return tape.add(tape.matmul(fused, tape.leaf(head_w_)), tape.leaf(head_b_));
}

std::vector<double> GatedXlstmModel::gate_values(const StreamSet& streams) const {
  const std::vector<int> by_slot = slot_index(streams, config_);
  std::vector<double> out(static_cast<size_t>(config_.n_streams()), 1.0);
  for (int slot = 1; slot < config_.n_streams(); ++slot) {
    if (!config_.gated) {
      out[static_cast<size_t>(slot)] = 1.0;
      continue;
    }
    const auto span = streams.embeddings[static_cast<size_t>(by_slot[static_cast<size_t>(slot)])];
    const Parameter* w = gate_w_[static_cast<size_t>(slot)];
    const Parameter* bias = gate_b_[static_cast<size_t>(slot)];
    double acc = bias->value.item();
    for (int64_t j = 0; j < static_cast<int64_t>(span.size()); ++j) {
      acc += static_cast<double>(span[static_cast<size_t>(j)]) * w->value[j];
    }
    out[static_cast<size_t>(slot)] = acc >= 0.0 ? 1.0 / (1.0 + std::exp(-acc))
                                                : std::exp(acc) / (1.0 + std::exp(acc));
  }
  return out;
}

std::vector<std::array<double, kNumEmotions>> GatedXlstmModel::predict_logits(
    const Dialogue& dialogue) const {
  constexpr int kEvalBatch = 64;
  std::vector<StreamSet> sets;
  sets.reserve(dialogue.utterances.size());
  for (int t = 0; t < dialogue.size(); ++t) {
    sets.push_back(build_context_window(dialogue, t, config_.context_frames));
  }
  std::vector<std::array<double, kNumEmotions>> out(sets.size());
  for (size_t start = 0; start < sets.size(); start += kEvalBatch) {
    const size_t end = std::min(sets.size(), start + kEvalBatch);
    std::vector<const StreamSet*> batch;
    batch.reserve(end - start);
    for (size_t i = start; i < end; ++i) batch.push_back(&sets[i]);
    Tape tape;
    Var logits = forward(tape, batch);
    const Tensor& lv = logits.value();
    for (size_t i = start; i < end; ++i) {
      for (int c = 0; c < kNumEmotions; ++c) {
        out[i][static_cast<size_t>(c)] = lv.at(static_cast<int64_t>(i - start), c);
      }
    }
  }
  return out;
}

std::array<double, kNumEmotions> softmax_probs(const std::array<double, kNumEmotions>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::array<double, kNumEmotions> p{};
  double z = 0.0;
  for (size_t c = 0; c < p.size(); ++c) {
    p[c] = std::exp(logits[c] - mx);
    z += p[c];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<std::array<double, kNumEmotions>> GatedXlstmModel::predict_posteriors(
    const Dialogue& dialogue) const {
  auto logits = predict_logits(dialogue);
  std::vector<std::array<double, kNumEmotions>> out;
  out.reserve(logits.size());
  for (const auto& l : logits) out.push_back(softmax_probs(l));
  return out;
}

GateReport GatedXlstmModel::gate_report(const Corpus& corpus) const {
  if (corpus.n_utterances() == 0) throw UsageError("gate report: empty corpus");
  const int n = config_.n_streams();
  std::vector<double> total(static_cast<size_t>(n), 0.0);
  int64_t count = 0;
  for (const Dialogue& d : corpus.dialogues) {
    for (int t = 0; t < d.size(); ++t) {
      StreamSet set = build_context_window(d, t, config_.context_frames);
      std::vector<double> w = gate_values(set);
      for (int s = 0; s < n; ++s) total[static_cast<size_t>(s)] += std::abs(w[static_cast<size_t>(s)]);
      ++count;
    }
  }
  GateReport report;
  for (int s = 0; s < n; ++s) {
    GateReport::Row row;
    row.ref.frame = s / 4;
    row.ref.role = (s % 4) < 2 ? StreamRole::kSelf : StreamRole::kInterlocutor;
    row.ref.modality = (s % 2) == 0 ? Modality::kAudio : Modality::kText;
    row.mean_abs_weight = s == 0 ? 1.0 : total[static_cast<size_t>(s)] / static_cast<double>(count);
    row.n = count;
    report.rows.push_back(row);
  }
  return report;
}

void write_gate_report_csv(const GateReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "role,modality,frame,mean_abs_weight,n\n";
  char buf[64];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.10f", row.mean_abs_weight);
    os << to_string(row.ref.role) << ',' << to_string(row.ref.modality) << ',' << row.ref.frame
       << ',' << buf << ',' << row.n << '\n';
  }
}

void write_gate_report_svg(const GateReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  const int bar_w = 28, gap = 14, h = 260, base = 210, left = 40;
  const int width = left + static_cast<int>(report.rows.size()) * (bar_w + gap) + 20;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << h
     << "\">\n";
  os << "<line x1=\"" << left - 6 << "\" y1=\"" << base << "\" x2=\"" << width - 10 << "\" y2=\""
     << base << "\" stroke=\"black\"/>\n";
  int x = left;
  for (const auto& row : report.rows) {
    const int bh = static_cast<int>(row.mean_abs_weight * 180.0);
    os << "<rect x=\"" << x << "\" y=\"" << base - bh << "\" width=\"" << bar_w << "\" height=\""
       << bh << "\" fill=\"" << (row.ref.role == StreamRole::kSelf ? "#4878cf" : "#d65f5f")
       << "\"/>\n";
    // Label: 0/1 for self/interlocutor, A/T for modality, k for frame.
    os << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base + 16
       << "\" font-size=\"10\" text-anchor=\"middle\">"
       << (row.ref.role == StreamRole::kSelf ? '0' : '1')
       << (row.ref.modality == Modality::kAudio ? 'A' : 'T') << "k" << row.ref.frame
       << "</text>\n";
    char val[32];
    std::snprintf(val, sizeof(val), "%.2f", row.mean_abs_weight);
    os << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base - bh - 4
       << "\" font-size=\"9\" text-anchor=\"middle\">" << val << "</text>\n";
    x += bar_w + gap;
  }
  os << "</svg>\n";
}

}  // namespace gxl
