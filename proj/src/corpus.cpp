// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "gxl/error.hpp"
#include "gxl/rng.hpp"

namespace gxl {

namespace {

constexpr char kMagic[4] = {'G', 'X', 'E', 'B'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  // Assumes a little-endian host; asserted below at load time via magic.
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw DataError("corpus file truncated");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

const char* to_string(EmotionLabel label) {
  switch (label) {
    case EmotionLabel::kAnger: return "anger";
    case EmotionLabel::kHappiness: return "happiness";
    case EmotionLabel::kNeutrality: return "neutrality";
    case EmotionLabel::kSadness: return "sadness";
  }
  throw DataError("invalid emotion label value");
}

EmotionLabel label_from_string(const std::string& s) {
  if (s == "anger") return EmotionLabel::kAnger;
  if (s == "happiness") return EmotionLabel::kHappiness;
  if (s == "neutrality") return EmotionLabel::kNeutrality;
  if (s == "sadness") return EmotionLabel::kSadness;
  throw DataError("unknown emotion label: " + s);
}

EmotionLabel label_from_index(int i) {
  if (i < 0 || i >= kNumEmotions) throw DataError("emotion index out of range: " + std::to_string(i));
  return static_cast<EmotionLabel>(i);
}

const char* to_string(StreamRole role) {
  return role == StreamRole::kSelf ? "self" : "interlocutor";
}

const char* to_string(Modality modality) {
  return modality == Modality::kAudio ? "audio" : "text";
}

int64_t Corpus::n_utterances() const {
  int64_t n = 0;
  for (const Dialogue& d : dialogues) n += d.size();
  return n;
}

std::array<int64_t, kNumEmotions> Corpus::recount_histogram() const {
  std::array<int64_t, kNumEmotions> h{};
  for (const Dialogue& d : dialogues)
    for (const Utterance& u : d.utterances) ++h[static_cast<size_t>(u.label)];
  return h;
}

void Corpus::validate() const {
  for (const Dialogue& d : dialogues) {
    for (int i = 0; i < d.size(); ++i) {
      const Utterance& u = d.utterances[static_cast<size_t>(i)];
      if (u.index != i) {
        throw DataError("dialogue " + d.id + ": utterance indices not contiguous at " +
                        std::to_string(i));
      }
      if (u.dialogue_id != d.id) {
        throw DataError("dialogue " + d.id + ": utterance carries id " + u.dialogue_id);
      }
      if (static_cast<int>(u.audio_embedding.size()) != embedding_dim ||
          static_cast<int>(u.text_embedding.size()) != embedding_dim) {
        throw DataError("dialogue " + d.id + " utterance " + std::to_string(i) +
                        ": embedding dim mismatch");
      }
    }
  }
  if (recount_histogram() != label_histogram) {
    throw DataError("label histogram does not match utterance labels");
  }
}

Corpus make_corpus(std::vector<Dialogue> dialogues) {
  Corpus c;
  c.dialogues = std::move(dialogues);
  for (Dialogue& d : c.dialogues) {
    d.speakers.clear();
    for (const Utterance& u : d.utterances) {
      if (std::find(d.speakers.begin(), d.speakers.end(), u.speaker_id) == d.speakers.end()) {
        d.speakers.push_back(u.speaker_id);
      }
      if (c.embedding_dim == 0) c.embedding_dim = static_cast<int>(u.audio_embedding.size());
    }
  }
  c.label_histogram = c.recount_histogram();
  c.validate();
  return c;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  corpus.validate();
  std::string metadata;
  for (const Dialogue& d : corpus.dialogues) {
    for (const Utterance& u : d.utterances) {
      nlohmann::json j;
      j["dialogue_id"] = u.dialogue_id;
      j["index"] = u.index;
      j["label"] = to_string(u.label);
      j["speaker_id"] = u.speaker_id;
      metadata += j.dump();
      metadata += '\n';
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_le<uint16_t>(os, kVersion);
  write_le<uint32_t>(os, static_cast<uint32_t>(corpus.embedding_dim));
  write_le<uint32_t>(os, static_cast<uint32_t>(corpus.dialogues.size()));
  write_le<uint64_t>(os, static_cast<uint64_t>(corpus.n_utterances()));
  write_le<uint64_t>(os, static_cast<uint64_t>(metadata.size()));
  os.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  for (const Dialogue& d : corpus.dialogues) {
    for (const Utterance& u : d.utterances) {
      for (float v : u.audio_embedding) write_le<float>(os, v);
      for (float v : u.text_embedding) write_le<float>(os, v);
    }
  }
  if (!os) throw DataError("write failed for " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + ": not a GXEB corpus file (bad magic)");
  }
  const uint16_t version = read_le<uint16_t>(is);
  if (version != kVersion) {
    throw FormatError(path + ": unsupported GXEB version " + std::to_string(version));
  }
  const uint32_t dim = read_le<uint32_t>(is);
  const uint32_t n_dialogues = read_le<uint32_t>(is);
  const uint64_t n_utterances = read_le<uint64_t>(is);
  const uint64_t metadata_bytes = read_le<uint64_t>(is);

  std::string metadata(metadata_bytes, '\0');
  is.read(metadata.data(), static_cast<std::streamsize>(metadata_bytes));
  if (!is) throw DataError(path + ": truncated metadata block");

  // Dialogues appear in metadata order; utterances of one dialogue must be
  // contiguous and 0..n-1.
  std::vector<Dialogue> dialogues;
  std::map<std::string, size_t> dialogue_pos;
  size_t line_start = 0;
  uint64_t parsed = 0;
  while (line_start < metadata.size()) {
    size_t line_end = metadata.find('\n', line_start);
    if (line_end == std::string::npos) line_end = metadata.size();
    const std::string line = metadata.substr(line_start, line_end - line_start);
    line_start = line_end + 1;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw FormatError(path + ": bad metadata JSON line");
    Utterance u;
    try {
      u.dialogue_id = j.at("dialogue_id").get<std::string>();
      u.index = j.at("index").get<int>();
      u.speaker_id = j.at("speaker_id").get<std::string>();
      u.label = label_from_string(j.at("label").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ": metadata line missing field: " + e.what());
    }
    auto it = dialogue_pos.find(u.dialogue_id);
    if (it == dialogue_pos.end()) {
      dialogue_pos.emplace(u.dialogue_id, dialogues.size());
      dialogues.push_back(Dialogue{u.dialogue_id, {}, {}});
      it = dialogue_pos.find(u.dialogue_id);
    }
    dialogues[it->second].utterances.push_back(std::move(u));
    ++parsed;
  }
  if (parsed != n_utterances) {
    throw DataError(path + ": header claims " + std::to_string(n_utterances) +
                    " utterances, metadata has " + std::to_string(parsed));
  }
  if (dialogues.size() != n_dialogues) {
    throw DataError(path + ": header claims " + std::to_string(n_dialogues) +
                    " dialogues, metadata has " + std::to_string(dialogues.size()));
  }

  for (Dialogue& d : dialogues) {
    for (size_t i = 0; i < d.utterances.size(); ++i) {
      Utterance& u = d.utterances[i];
      if (u.index != static_cast<int>(i)) {
        throw DataError(path + ": dialogue " + d.id + " has non-contiguous utterance indices");
      }
      u.audio_embedding.resize(dim);
      u.text_embedding.resize(dim);
      for (uint32_t k = 0; k < dim; ++k) u.audio_embedding[k] = read_le<float>(is);
      for (uint32_t k = 0; k < dim; ++k) u.text_embedding[k] = read_le<float>(is);
    }
  }

  Corpus corpus = make_corpus(std::move(dialogues));
  corpus.embedding_dim = static_cast<int>(dim);
  corpus.validate();
  return corpus;
}

std::optional<int> find_interlocutor(const Dialogue& dialogue, int t) {
  if (t < 0 || t >= dialogue.size()) throw UsageError("find_interlocutor: index out of range");
  const std::string& self = dialogue.utterances[static_cast<size_t>(t)].speaker_id;
  for (int j = t - 1; j >= 0; --j) {
    if (dialogue.utterances[static_cast<size_t>(j)].speaker_id != self) return j;
  }
  return std::nullopt;
}

namespace {

// Index of the k-th previous utterance by the same speaker, counting back
// from t (k = 0 is t itself); absent when the history is too short.
std::optional<int> self_anchor(const Dialogue& dialogue, int t, int k) {
  const std::string& self = dialogue.utterances[static_cast<size_t>(t)].speaker_id;
  int found = 0;
  for (int j = t; j >= 0; --j) {
    if (dialogue.utterances[static_cast<size_t>(j)].speaker_id == self) {
      if (found == k) return j;
      ++found;
    }
  }
  return std::nullopt;
}

}  // namespace

StreamSet build_context_window(const Dialogue& dialogue, int t, int frames) {
  if (t < 0 || t >= dialogue.size()) throw UsageError("build_context_window: index out of range");
  if (frames < 1) throw UsageError("build_context_window: frames must be >= 1");

  StreamSet set;
  set.dim = static_cast<int>(dialogue.utterances[static_cast<size_t>(t)].audio_embedding.size());
  set.zero.assign(static_cast<size_t>(set.dim), 0.0f);

  auto push = [&](StreamRole role, Modality modality, int frame, std::optional<int> idx) {
    StreamRef ref{role, modality, frame, idx};
    set.refs.push_back(ref);
    if (idx.has_value()) {
      const Utterance& u = dialogue.utterances[static_cast<size_t>(*idx)];
      const std::vector<float>& e =
          modality == Modality::kAudio ? u.audio_embedding : u.text_embedding;
      set.embeddings.emplace_back(e.data(), e.size());
    } else {
      set.embeddings.emplace_back(set.zero.data(), set.zero.size());
    }
  };

  for (int frame = 0; frame < frames; ++frame) {
    std::optional<int> anchor = self_anchor(dialogue, t, frame);
    std::optional<int> partner =
        anchor.has_value() ? find_interlocutor(dialogue, *anchor) : std::nullopt;
    push(StreamRole::kSelf, Modality::kAudio, frame, anchor);
    push(StreamRole::kSelf, Modality::kText, frame, anchor);
    push(StreamRole::kInterlocutor, Modality::kAudio, frame, partner);
    push(StreamRole::kInterlocutor, Modality::kText, frame, partner);
  }
  return set;
}

SplitResult split_dialogues(const Corpus& corpus, uint64_t seed, double train_ratio,
                            double val_ratio, double test_ratio) {
  const int n = static_cast<int>(corpus.dialogues.size());
  if (n == 0) throw UsageError("split_dialogues: empty corpus");
  if (n < 3) throw UsageError("split_dialogues: need at least 3 dialogues");
  const double total = train_ratio + val_ratio + test_ratio;
  if (total <= 0.0) throw UsageError("split_dialogues: ratios must be positive");

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  int n_val = static_cast<int>(std::llround(n * val_ratio / total));
  int n_test = static_cast<int>(std::llround(n * test_ratio / total));
  // Train absorbs the rounding remainder.
  n_val = std::min(n_val, n);
  n_test = std::min(n_test, n - n_val);
  const int n_train = n - n_val - n_test;

  SplitResult r;
  r.train.assign(order.begin(), order.begin() + n_train);
  r.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  r.test.assign(order.begin() + n_train + n_val, order.end());
  return r;
}

Corpus corpus_subset(const Corpus& corpus, const std::vector<int>& dialogue_indices) {
  std::vector<Dialogue> dialogues;
  dialogues.reserve(dialogue_indices.size());
  for (int i : dialogue_indices) dialogues.push_back(corpus.dialogues[static_cast<size_t>(i)]);
  Corpus out = make_corpus(std::move(dialogues));
  out.embedding_dim = corpus.embedding_dim;
  return out;
}

}  // namespace gxl
