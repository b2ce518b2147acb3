// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gxl/error.hpp"
#include "gxl/rng.hpp"
#include "gxl/synthetic.hpp"

namespace gxl {

namespace {

int argmax4(const std::array<double, kNumEmotions>& p) {
  int best = 0;
  for (int c = 1; c < kNumEmotions; ++c) {
    if (p[static_cast<size_t>(c)] > p[static_cast<size_t>(best)]) best = c;
  }
  return best;
}

// Logits for one dialogue with optional seeded noise; the noise stream is
// keyed by the dialogue's position in the evaluation order.
std::vector<std::array<double, kNumEmotions>> noisy_logits(const GatedXlstmModel& model,
                                                           const Dialogue& dialogue,
                                                           double posterior_noise,
                                                           uint64_t noise_seed,
                                                           uint64_t ordinal) {
  auto logits = model.predict_logits(dialogue);
  if (posterior_noise > 0.0) {
    Rng rng(mix_seed(noise_seed, ordinal));
    for (auto& row : logits) {
      for (double& v : row) v += posterior_noise * rng.normal();
    }
  }
  return logits;
}

}  // namespace

Corpus corpus_from_config(const RunConfig& config) {
  if (config.feature_mode == "clap-file") return load_corpus(config.corpus_path);
  return generate_synthetic(config.effective_synthetic());
}

TrainResult train(const RunConfig& config, const Corpus& corpus, const SplitResult& split,
                  uint64_t seed) {
  config.validate();
  if (corpus.embedding_dim != config.embedding_dim) {
    throw UsageError("corpus embedding dim " + std::to_string(corpus.embedding_dim) +
                     " does not match config embedding_dim " +
                     std::to_string(config.embedding_dim));
  }

  TrainResult result;
  result.model = std::make_unique<GatedXlstmModel>(config.model_config(), seed);
  GatedXlstmModel& model = *result.model;

  // Context windows are fixed by the corpus; build them once, before
  // batching, so batch composition cannot leak future context.
  std::vector<StreamSet> contexts;
  std::vector<int> labels;
  for (int di : split.train) {
    const Dialogue& d = corpus.dialogues[static_cast<size_t>(di)];
    for (int t = 0; t < d.size(); ++t) {
      contexts.push_back(build_context_window(d, t, config.context_frames));
      labels.push_back(static_cast<int>(d.utterances[static_cast<size_t>(t)].label));
    }
  }
  if (contexts.empty()) throw UsageError("train: training split has no utterances");

  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  result.optimizer = std::make_unique<Adam>(model.params().all(), adam_config);
  Adam& adam = *result.optimizer;

  auto snapshot_params = [&]() {
    std::vector<Tensor> values;
    values.reserve(model.params().size());
    for (Parameter* p : model.params().all()) values.push_back(p->value);
    return values;
  };
  auto validation_f1 = [&]() {
    if (split.val.empty()) return 0.0;
    EvalOptions opts;  // raw argmax; model selection never sees the decoder
    return evaluate(model, corpus, split.val, opts).weighted_f1;
  };

  std::vector<Tensor> best_values = snapshot_params();
  std::vector<Tensor> best_m = adam.first_moments();
  std::vector<Tensor> best_v = adam.second_moments();
  int64_t best_step = adam.step_count();
  result.best_val_f1 = config.epochs > 0 ? validation_f1() : 0.0;
  result.best_epoch = 0;
  if (config.epochs > 0) result.val_f1_history.push_back(result.best_val_f1);

  std::vector<size_t> order(contexts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(mix_seed(seed, 0x73687566 /* "shuf" */));

  const size_t batch_size = static_cast<size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng epoch_rng = shuffle_rng.fork(static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);
    for (size_t start = 0, batch_index = 0; start < order.size();
         start += batch_size, ++batch_index) {
      const size_t end = std::min(order.size(), start + batch_size);
      std::vector<const StreamSet*> batch;
      std::vector<int> batch_labels;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        batch.push_back(&contexts[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      try {
        Tape tape;
        Var logits = model.forward(tape, batch);
        Var loss = tape.softmax_cross_entropy(logits, batch_labels);
        if (!std::isfinite(loss.value().item())) {
          throw NumericError("loss is not finite");
        }
        model.params().zero_grads();
        tape.backward(loss);
        adam.step();
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
    }

    const double val_f1 = validation_f1();
    result.val_f1_history.push_back(val_f1);
    if (val_f1 > result.best_val_f1) {
      result.best_val_f1 = val_f1;
      result.best_epoch = static_cast<uint32_t>(epoch);
      best_values = snapshot_params();
      best_m = adam.first_moments();
      best_v = adam.second_moments();
      best_step = adam.step_count();
    } else if (epoch - static_cast<int>(result.best_epoch) > config.early_stop_patience) {
      break;
    }
  }

  // Restore the best-validation state.
  auto params = model.params().all();
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  adam.first_moments() = best_m;
  adam.second_moments() = best_v;
  adam.set_step_count(best_step);

  std::vector<const Dialogue*> train_dialogues;
  train_dialogues.reserve(split.train.size());
  for (int di : split.train) train_dialogues.push_back(&corpus.dialogues[static_cast<size_t>(di)]);
  result.p0 = estimate_p0(train_dialogues);
  return result;
}

MetricsReport evaluate(const GatedXlstmModel& model, const Corpus& corpus,
                       const std::vector<int>& dialogue_indices, const EvalOptions& opts) {
  ConfusionMatrix confusion{};
  uint64_t ordinal = 0;
  for (int di : dialogue_indices) {
    const Dialogue& dialogue = corpus.dialogues[static_cast<size_t>(di)];
    const auto logits =
        noisy_logits(model, dialogue, opts.posterior_noise, opts.noise_seed, ordinal++);
    std::vector<EmotionLabel> predicted;
    predicted.reserve(logits.size());
    if (opts.use_ded) {
      std::vector<UtterancePosterior> posteriors;
      posteriors.reserve(logits.size());
      for (size_t i = 0; i < logits.size(); ++i) {
        posteriors.push_back(
            UtterancePosterior{dialogue.utterances[i].speaker_id, softmax_probs(logits[i])});
      }
      DecodeConfig dc;
      dc.beam_width = opts.beam_width;
      dc.alpha = opts.alpha;
      dc.p0_override = opts.p0_override;
      predicted = ded_decode(posteriors, dc, ShiftModel{opts.p0}).labels;
    } else {
      for (const auto& row : logits) predicted.push_back(label_from_index(argmax4(row)));
    }
    for (size_t i = 0; i < predicted.size(); ++i) {
      ++confusion[static_cast<size_t>(dialogue.utterances[i].label)]
                 [static_cast<size_t>(predicted[i])];
    }
  }
  return metrics_from_confusion(confusion);
}

MetricsReport evaluate_corpus(const GatedXlstmModel& model, const Corpus& corpus,
                              const EvalOptions& opts) {
  std::vector<int> all(corpus.dialogues.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return evaluate(model, corpus, all, opts);
}

std::vector<PosteriorRecord> collect_posteriors(const GatedXlstmModel& model, const Corpus& corpus,
                                                const std::vector<int>& dialogue_indices,
                                                double posterior_noise, uint64_t noise_seed) {
  std::vector<PosteriorRecord> out;
  uint64_t ordinal = 0;
  for (int di : dialogue_indices) {
    const Dialogue& dialogue = corpus.dialogues[static_cast<size_t>(di)];
    const auto logits = noisy_logits(model, dialogue, posterior_noise, noise_seed, ordinal++);
    for (size_t i = 0; i < logits.size(); ++i) {
      const Utterance& u = dialogue.utterances[i];
      PosteriorRecord rec;
      rec.dialogue_id = u.dialogue_id;
      rec.index = u.index;
      rec.speaker_id = u.speaker_id;
      rec.posterior = softmax_probs(logits[i]);
      rec.gold = u.label;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void write_posterior_jsonl(const std::vector<PosteriorRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  for (const PosteriorRecord& rec : records) {
    nlohmann::json j;
    j["dialogue_id"] = rec.dialogue_id;
    j["index"] = rec.index;
    j["speaker_id"] = rec.speaker_id;
    j["posterior"] = rec.posterior;
    if (rec.gold) j["gold"] = to_string(*rec.gold);
    os << j.dump() << '\n';
  }
}

std::vector<PosteriorRecord> read_posterior_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::vector<PosteriorRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw FormatError(path + " line " + std::to_string(lineno) + ": bad JSON");
    }
    PosteriorRecord rec;
    try {
      rec.dialogue_id = j.at("dialogue_id").get<std::string>();
      rec.index = j.at("index").get<int>();
      rec.speaker_id = j.at("speaker_id").get<std::string>();
      const auto p = j.at("posterior").get<std::vector<double>>();
      if (p.size() != kNumEmotions) {
        throw FormatError(path + " line " + std::to_string(lineno) + ": posterior must have " +
                          std::to_string(kNumEmotions) + " entries");
      }
      std::copy(p.begin(), p.end(), rec.posterior.begin());
      if (j.contains("gold")) rec.gold = label_from_string(j.at("gold").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DecodedUtterance> decode_posterior_records(const std::vector<PosteriorRecord>& records,
                                                       const DecodeConfig& config, double p0) {
  // Group by dialogue in first-appearance order; records within a dialogue
  // are decoded in their given order.
  std::vector<std::string> dialogue_order;
  std::map<std::string, std::vector<const PosteriorRecord*>> grouped;
  for (const PosteriorRecord& rec : records) {
    auto [it, inserted] = grouped.try_emplace(rec.dialogue_id);
    if (inserted) dialogue_order.push_back(rec.dialogue_id);
    it->second.push_back(&rec);
  }
  std::vector<DecodedUtterance> out;
  out.reserve(records.size());
  const ShiftModel shift{p0};
  for (const std::string& id : dialogue_order) {
    const auto& recs = grouped[id];
    std::vector<UtterancePosterior> posteriors;
    posteriors.reserve(recs.size());
    for (const PosteriorRecord* rec : recs) {
      posteriors.push_back(UtterancePosterior{rec->speaker_id, rec->posterior});
    }
    const auto labels = ded_decode(posteriors, config, shift).labels;
    for (size_t i = 0; i < recs.size(); ++i) {
      out.push_back(DecodedUtterance{id, recs[i]->index, recs[i]->speaker_id, labels[i]});
    }
  }
  return out;
}

void write_decoded_jsonl(const std::vector<DecodedUtterance>& decoded, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  for (const DecodedUtterance& d : decoded) {
    nlohmann::json j;
    j["dialogue_id"] = d.dialogue_id;
    j["index"] = d.index;
    j["speaker_id"] = d.speaker_id;
    j["label"] = to_string(d.label);
    os << j.dump() << '\n';
  }
}

std::string format_mean_std(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", mean, stddev);
  return buf;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

EvalOptions eval_options_from(const RunConfig& config, double p0, uint64_t seed) {
  EvalOptions opts;
  opts.use_ded = config.decoder == "ded";
  opts.beam_width = config.beam_width;
  opts.alpha = config.alpha;
  opts.p0 = p0;
  opts.p0_override = config.p0_override;
  opts.posterior_noise = config.eval_posterior_noise;
  opts.noise_seed = mix_seed(seed, 0x6e6f6973 /* "nois" */);
  return opts;
}

}  // namespace

ProtocolSummary run_protocol(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const Corpus corpus = corpus_from_config(config);
  const SplitResult split = split_dialogues(corpus, config.split_seed);

  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);

  ProtocolSummary summary;
  std::vector<double> accs, f1s;
  for (uint64_t seed : config.run_seeds) {
    TrainResult trained = train(config, corpus, split, seed);
    const EvalOptions opts = eval_options_from(config, trained.p0, seed);
    MetricsReport test = evaluate(*trained.model, corpus, split.test, opts);
    accs.push_back(100.0 * test.weighted_accuracy);
    f1s.push_back(100.0 * test.weighted_f1);

    if (!out_dir.empty()) {
      const fs::path seed_dir = fs::path(out_dir) / ("seed_" + std::to_string(seed));
      fs::create_directories(seed_dir);
      Checkpoint ckpt = make_checkpoint(config, seed, trained.best_epoch, trained.p0,
                                        trained.model->params(), trained.optimizer.get());
      save_checkpoint(ckpt, (seed_dir / "checkpoint.bin").string());
      write_metrics_csv(test, (seed_dir / "metrics.csv").string());
      write_confusion_csv(test.confusion, (seed_dir / "confusion.csv").string());
      if (trained.model->config().gated) {
        const Corpus test_corpus = corpus_subset(corpus, split.test);
        write_gate_report_csv(trained.model->gate_report(test_corpus),
                              (seed_dir / "gates.csv").string());
      }
    }
    summary.runs.push_back(SeedRun{seed, std::move(test)});
  }

  std::tie(summary.mean_w_acc, summary.std_w_acc) = mean_std(accs);
  std::tie(summary.mean_w_f1, summary.std_w_f1) = mean_std(f1s);
  summary.formatted_w_acc = format_mean_std(summary.mean_w_acc, summary.std_w_acc);
  summary.formatted_w_f1 = format_mean_std(summary.mean_w_f1, summary.std_w_f1);

  if (!out_dir.empty()) {
    write_summary_csv(summary, (fs::path(out_dir) / "summary.csv").string());
  }
  return summary;
}

void write_summary_csv(const ProtocolSummary& summary, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  char buf[128];
  os << "metric,mean,std,formatted\n";
  std::snprintf(buf, sizeof(buf), "weighted_accuracy,%.6f,%.6f,%s\n", summary.mean_w_acc,
                summary.std_w_acc, summary.formatted_w_acc.c_str());
  os << buf;
  std::snprintf(buf, sizeof(buf), "weighted_f1,%.6f,%.6f,%s\n", summary.mean_w_f1,
                summary.std_w_f1, summary.formatted_w_f1.c_str());
  os << buf;
  os << "seeds,";
  for (size_t i = 0; i < summary.runs.size(); ++i) {
    if (i) os << ' ';
    os << summary.runs[i].seed;
  }
  os << ",,\n";
}

std::vector<std::pair<std::string, std::pair<double, double>>> parse_summary_csv(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::vector<std::pair<std::string, std::pair<double, double>>> out;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string metric, mean, stddev;
    std::getline(ss, metric, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, stddev, ',');
    if (metric == "seeds" || metric.empty()) continue;
    out.emplace_back(metric, std::make_pair(std::stod(mean), std::stod(stddev)));
  }
  return out;
}

std::vector<AblationRow> ablate(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const Corpus corpus = corpus_from_config(config);
  const SplitResult split = split_dialogues(corpus, config.split_seed);
  const std::string feature = config.feature_mode == "clap-file" ? "clap" : "synthetic";

  // Rows in Table-style order; every row is evaluated on the same test
  // dialogues of the same split.
  const std::array<std::pair<const char*, const char*>, 4> grid = {{
      {"base-xlstm", "none"},
      {"base-xlstm", "ded"},
      {"gated-xlstm", "none"},
      {"gated-xlstm", "ded"},
  }};
  std::array<std::vector<double>, 4> acc_by_row, f1_by_row;

  for (uint64_t seed : config.run_seeds) {
    std::map<std::string, TrainResult> trained;
    for (const char* mode : {"base-xlstm", "gated-xlstm"}) {
      RunConfig arm = config;
      arm.model_mode = mode;
      trained.emplace(mode, train(arm, corpus, split, seed));
    }
    for (size_t row = 0; row < grid.size(); ++row) {
      const TrainResult& tr = trained.at(grid[row].first);
      RunConfig arm = config;
      arm.model_mode = grid[row].first;
      arm.decoder = grid[row].second;
      EvalOptions opts = eval_options_from(arm, tr.p0, seed);
      const MetricsReport report = evaluate(*tr.model, corpus, split.test, opts);
      acc_by_row[row].push_back(100.0 * report.weighted_accuracy);
      f1_by_row[row].push_back(100.0 * report.weighted_f1);
    }
  }

  std::vector<AblationRow> rows;
  for (size_t row = 0; row < grid.size(); ++row) {
    AblationRow r;
    r.feature = feature;
    r.model = grid[row].first;
    r.decoder = grid[row].second;
    r.w_acc = mean_std(acc_by_row[row]).first;
    r.w_f1 = mean_std(f1_by_row[row]).first;
    rows.push_back(r);
  }
  for (AblationRow& r : rows) {
    r.delta_acc = r.w_acc - rows[0].w_acc;
    r.delta_f1 = r.w_f1 - rows[0].w_f1;
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_ablation_csv(rows, (std::filesystem::path(out_dir) / "ablation.csv").string());
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "feature,model,decoder,w_acc,w_f1,delta_w_acc,delta_w_f1\n";
  char buf[160];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.2f,%.2f,%+.2f,%+.2f\n", r.feature.c_str(),
                  r.model.c_str(), r.decoder.c_str(), r.w_acc, r.w_f1, r.delta_acc, r.delta_f1);
    os << buf;
  }
}

}  // namespace gxl
