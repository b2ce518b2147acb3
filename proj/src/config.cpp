// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gxl/error.hpp"

namespace gxl {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw UsageError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw UsageError("config: " + key + " expects an unsigned integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("config: " + key + " expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config: " + key + " expects true/false, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_seeds(const std::vector<uint64_t>& seeds) {
  std::string out;
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::vector<uint64_t> parse_seeds(const std::string& key, const std::string& v) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    seeds.push_back(to_u64(key, item));
  }
  if (seeds.empty()) throw UsageError("config: " + key + " needs at least one seed");
  return seeds;
}

struct KeyHandler {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, KeyHandler>& handlers() {
  static const std::map<std::string, KeyHandler> table = {
      {"feature_mode",
       {[](RunConfig& c, const std::string& v) { c.feature_mode = v; },
        [](const RunConfig& c) { return c.feature_mode; }}},
      {"corpus",
       {[](RunConfig& c, const std::string& v) { c.corpus_path = v; },
        [](const RunConfig& c) { return c.corpus_path; }}},
      {"synth_dialogues",
       {[](RunConfig& c, const std::string& v) { c.synthetic.n_dialogues = static_cast<int>(to_int("synth_dialogues", v)); },
        [](const RunConfig& c) { return std::to_string(c.synthetic.n_dialogues); }}},
      {"synth_utterances_min",
       {[](RunConfig& c, const std::string& v) { c.synthetic.utterances_min = static_cast<int>(to_int("synth_utterances_min", v)); },
        [](const RunConfig& c) { return std::to_string(c.synthetic.utterances_min); }}},
      {"synth_utterances_max",
       {[](RunConfig& c, const std::string& v) { c.synthetic.utterances_max = static_cast<int>(to_int("synth_utterances_max", v)); },
        [](const RunConfig& c) { return std::to_string(c.synthetic.utterances_max); }}},
      {"synth_q",
       {[](RunConfig& c, const std::string& v) { c.synthetic.self_transition_prob = to_double("synth_q", v); },
        [](const RunConfig& c) { return fmt_double(c.synthetic.self_transition_prob); }}},
      {"synth_scale_audio",
       {[](RunConfig& c, const std::string& v) { c.synthetic.audio_scale = to_double("synth_scale_audio", v); },
        [](const RunConfig& c) { return fmt_double(c.synthetic.audio_scale); }}},
      {"synth_scale_text",
       {[](RunConfig& c, const std::string& v) { c.synthetic.text_scale = to_double("synth_scale_text", v); },
        [](const RunConfig& c) { return fmt_double(c.synthetic.text_scale); }}},
      {"synth_class_separation",
       {[](RunConfig& c, const std::string& v) { c.synthetic.class_separation = to_double("synth_class_separation", v); },
        [](const RunConfig& c) { return fmt_double(c.synthetic.class_separation); }}},
      {"synth_sigma",
       {[](RunConfig& c, const std::string& v) { c.synthetic.noise_sigma = to_double("synth_sigma", v); },
        [](const RunConfig& c) { return fmt_double(c.synthetic.noise_sigma); }}},
      {"synth_speaker_continue_prob",
       {[](RunConfig& c, const std::string& v) { c.synthetic.speaker_continue_prob = to_double("synth_speaker_continue_prob", v); },
        [](const RunConfig& c) { return fmt_double(c.synthetic.speaker_continue_prob); }}},
      {"synth_seed",
       {[](RunConfig& c, const std::string& v) { c.synthetic.seed = to_u64("synth_seed", v); },
        [](const RunConfig& c) { return std::to_string(c.synthetic.seed); }}},
      {"split_seed",
       {[](RunConfig& c, const std::string& v) { c.split_seed = to_u64("split_seed", v); },
        [](const RunConfig& c) { return std::to_string(c.split_seed); }}},
      {"run_seeds",
       {[](RunConfig& c, const std::string& v) { c.run_seeds = parse_seeds("run_seeds", v); },
        [](const RunConfig& c) { return fmt_seeds(c.run_seeds); }}},
      {"epochs",
       {[](RunConfig& c, const std::string& v) { c.epochs = static_cast<int>(to_int("epochs", v)); },
        [](const RunConfig& c) { return std::to_string(c.epochs); }}},
      {"batch_size",
       {[](RunConfig& c, const std::string& v) { c.batch_size = static_cast<int>(to_int("batch_size", v)); },
        [](const RunConfig& c) { return std::to_string(c.batch_size); }}},
      {"learning_rate",
       {[](RunConfig& c, const std::string& v) { c.learning_rate = to_double("learning_rate", v); },
        [](const RunConfig& c) { return fmt_double(c.learning_rate); }}},
      {"early_stop_patience",
       {[](RunConfig& c, const std::string& v) { c.early_stop_patience = static_cast<int>(to_int("early_stop_patience", v)); },
        [](const RunConfig& c) { return std::to_string(c.early_stop_patience); }}},
      {"model",
       {[](RunConfig& c, const std::string& v) { c.model_mode = v; },
        [](const RunConfig& c) { return c.model_mode; }}},
      {"embedding_dim",
       {[](RunConfig& c, const std::string& v) { c.embedding_dim = static_cast<int>(to_int("embedding_dim", v)); },
        [](const RunConfig& c) { return std::to_string(c.embedding_dim); }}},
      {"segment_steps",
       {[](RunConfig& c, const std::string& v) { c.segment_steps = static_cast<int>(to_int("segment_steps", v)); },
        [](const RunConfig& c) { return std::to_string(c.segment_steps); }}},
      {"xlstm_layers",
       {[](RunConfig& c, const std::string& v) { c.xlstm_layers = static_cast<int>(to_int("xlstm_layers", v)); },
        [](const RunConfig& c) { return std::to_string(c.xlstm_layers); }}},
      {"heads",
       {[](RunConfig& c, const std::string& v) { c.heads = static_cast<int>(to_int("heads", v)); },
        [](const RunConfig& c) { return std::to_string(c.heads); }}},
      {"conv_kernel",
       {[](RunConfig& c, const std::string& v) { c.conv_kernel = static_cast<int>(to_int("conv_kernel", v)); },
        [](const RunConfig& c) { return std::to_string(c.conv_kernel); }}},
      {"qkv_block_size",
       {[](RunConfig& c, const std::string& v) { c.qkv_block_size = static_cast<int>(to_int("qkv_block_size", v)); },
        [](const RunConfig& c) { return std::to_string(c.qkv_block_size); }}},
      {"ff_factor",
       {[](RunConfig& c, const std::string& v) { c.ff_factor = to_double("ff_factor", v); },
        [](const RunConfig& c) { return fmt_double(c.ff_factor); }}},
      {"activation",
       {[](RunConfig& c, const std::string& v) { c.activation = v; },
        [](const RunConfig& c) { return c.activation; }}},
      {"context_frames",
       {[](RunConfig& c, const std::string& v) { c.context_frames = static_cast<int>(to_int("context_frames", v)); },
        [](const RunConfig& c) { return std::to_string(c.context_frames); }}},
      {"layer_pattern",
       {[](RunConfig& c, const std::string& v) { c.layer_pattern = v; },
        [](const RunConfig& c) { return c.layer_pattern; }}},
      {"max_seq_len",
       {[](RunConfig& c, const std::string& v) { c.max_seq_len = static_cast<int>(to_int("max_seq_len", v)); },
        [](const RunConfig& c) { return std::to_string(c.max_seq_len); }}},
      {"gates",
       {[](RunConfig& c, const std::string& v) { c.gates = v; },
        [](const RunConfig& c) { return c.gates; }}},
      {"shared_gate",
       {[](RunConfig& c, const std::string& v) { c.shared_gate = to_bool("shared_gate", v); },
        [](const RunConfig& c) { return c.shared_gate ? "true" : "false"; }}},
      {"share_frames",
       {[](RunConfig& c, const std::string& v) { c.share_frames = to_bool("share_frames", v); },
        [](const RunConfig& c) { return c.share_frames ? "true" : "false"; }}},
      {"normalize_ref_audio",
       {[](RunConfig& c, const std::string& v) { c.normalize_ref_audio = to_bool("normalize_ref_audio", v); },
        [](const RunConfig& c) { return c.normalize_ref_audio ? "true" : "false"; }}},
      {"strict_pad_mask",
       {[](RunConfig& c, const std::string& v) { c.strict_pad_mask = to_bool("strict_pad_mask", v); },
        [](const RunConfig& c) { return c.strict_pad_mask ? "true" : "false"; }}},
      {"decoder",
       {[](RunConfig& c, const std::string& v) { c.decoder = v; },
        [](const RunConfig& c) { return c.decoder; }}},
      {"beam_width",
       {[](RunConfig& c, const std::string& v) { c.beam_width = static_cast<int>(to_int("beam_width", v)); },
        [](const RunConfig& c) { return std::to_string(c.beam_width); }}},
      {"alpha",
       {[](RunConfig& c, const std::string& v) { c.alpha = to_double("alpha", v); },
        [](const RunConfig& c) { return fmt_double(c.alpha); }}},
      {"p0",
       {[](RunConfig& c, const std::string& v) {
          if (v == "none" || v.empty()) {
            c.p0_override.reset();
          } else {
            c.p0_override = to_double("p0", v);
          }
        },
        [](const RunConfig& c) { return c.p0_override ? fmt_double(*c.p0_override) : "none"; }}},
      {"eval_posterior_noise",
       {[](RunConfig& c, const std::string& v) { c.eval_posterior_noise = to_double("eval_posterior_noise", v); },
        [](const RunConfig& c) { return fmt_double(c.eval_posterior_noise); }}},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (feature_mode != "synthetic" && feature_mode != "clap-file") {
    throw UsageError("config: feature_mode must be 'synthetic' or 'clap-file'");
  }
  if (feature_mode == "clap-file" && corpus_path.empty()) {
    throw UsageError("config: feature_mode clap-file requires a corpus path");
  }
  if (model_mode != "gated-xlstm" && model_mode != "base-xlstm") {
    throw UsageError("config: model must be 'gated-xlstm' or 'base-xlstm'");
  }
  if (decoder != "none" && decoder != "ded") {
    throw UsageError("config: decoder must be 'none' or 'ded'");
  }
  if (gates != "exp" && gates != "sigmoid") {
    throw UsageError("config: gates must be 'exp' or 'sigmoid'");
  }
  if (activation != "gelu") throw UsageError("config: only gelu activation is supported");
  if (run_seeds.empty()) throw UsageError("config: run_seeds must not be empty");
  if (epochs < 0) throw UsageError("config: epochs must be >= 0");
  if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
  if (learning_rate <= 0.0) throw UsageError("config: learning_rate must be positive");
  if (early_stop_patience < 0) throw UsageError("config: early_stop_patience must be >= 0");
  if (beam_width < 1) throw UsageError("config: beam_width must be >= 1");
  if (alpha <= 0.0) throw UsageError("config: alpha must be positive");
  if (p0_override && (*p0_override <= 0.0 || *p0_override >= 1.0)) {
    throw UsageError("config: p0 must be in (0, 1)");
  }
  if (eval_posterior_noise < 0.0) {
    throw UsageError("config: eval_posterior_noise must be >= 0");
  }
  if (segment_steps > max_seq_len) {
    throw UsageError("config: segment_steps exceeds max_seq_len");
  }
  model_config().validate();
  if (feature_mode == "synthetic") {
    SyntheticConfig s = synthetic;
    s.embedding_dim = embedding_dim;
    s.validate();
  }
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.embedding_dim = embedding_dim;
  m.segment_steps = segment_steps;
  m.layers = xlstm_layers;
  m.heads = heads;
  m.qkv_blocks = qkv_block_size;
  m.conv_kernel = conv_kernel;
  m.ff_factor = ff_factor;
  m.context_frames = context_frames;
  m.layer_pattern = layer_pattern;
  m.gated = model_mode == "gated-xlstm";
  m.shared_gate = shared_gate;
  m.share_frames = share_frames;
  m.normalize_ref_audio = normalize_ref_audio;
  m.strict_pad_mask = strict_pad_mask;
  m.sigmoid_input_gate = gates == "sigmoid";
  return m;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [key, handler] : handlers()) {
    out += key;
    out += " = ";
    out += handler.get(*this);
    out += "\n";
  }
  return out;
}

void apply_config_override(RunConfig& config, const std::string& key, const std::string& value) {
  auto it = handlers().find(key);
  if (it == handlers().end()) throw UsageError("config: unknown key '" + key + "'");
  it->second.set(config, value);
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    apply_config_override(config, key, value);
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace gxl
