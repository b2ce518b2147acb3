// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gxl {

// The four-class emotion domain. Enum order is the canonical label order
// used by tie-breaking, file formats and reports.
enum class EmotionLabel : uint8_t {
  kAnger = 0,
  kHappiness = 1,
  kNeutrality = 2,
  kSadness = 3,
};

constexpr int kNumEmotions = 4;

const char* to_string(EmotionLabel label);
EmotionLabel label_from_string(const std::string& s);  // throws DataError
EmotionLabel label_from_index(int i);                  // throws DataError

// One speaker turn. Embeddings are stored as 32-bit floats, matching the
// on-disk payload, and widened to doubles at the engine boundary.
struct Utterance {
  std::string dialogue_id;
  int index = 0;
  std::string speaker_id;
  EmotionLabel label = EmotionLabel::kAnger;
  std::vector<float> audio_embedding;
  std::vector<float> text_embedding;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  std::vector<std::string> speakers;  // distinct ids, in order of first turn

  int size() const { return static_cast<int>(utterances.size()); }
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  int embedding_dim = 0;
  std::array<int64_t, kNumEmotions> label_histogram{};

  int64_t n_utterances() const;
  std::array<int64_t, kNumEmotions> recount_histogram() const;
  // Checks contiguous utterance indices, embedding dims and the histogram.
  // Throws DataError on violation.
  void validate() const;
};

// Builds a corpus from dialogues: fills speaker lists, the histogram and
// the embedding dim, then validates.
Corpus make_corpus(std::vector<Dialogue> dialogues);

// GXEB binary corpus file (little-endian):
//   magic "GXEB", version u16 = 1, embedding_dim u32, n_dialogues u32,
//   n_utterances u64, metadata_bytes u64,
//   metadata: one JSON line per utterance
//     {"dialogue_id":..,"index":..,"label":..,"speaker_id":..}
//   payload: per utterance, audio embedding then text embedding, f32.
// Writing is canonical: equal corpora produce byte-identical files.
Corpus load_corpus(const std::string& path);
void write_corpus(const Corpus& corpus, const std::string& path);

// Largest index j < t spoken by a different speaker; absent if none.
std::optional<int> find_interlocutor(const Dialogue& dialogue, int t);

enum class StreamRole : uint8_t { kSelf = 0, kInterlocutor = 1 };
enum class Modality : uint8_t { kAudio = 0, kText = 1 };

const char* to_string(StreamRole role);
const char* to_string(Modality modality);

// Identity of one gated input stream. frame 0 is the current pair; higher
// frames anchor at earlier utterances of the same speaker. utterance_index
// is absent when the stream is zero-padded.
struct StreamRef {
  StreamRole role = StreamRole::kSelf;
  Modality modality = Modality::kAudio;
  int frame = 0;
  std::optional<int> utterance_index;

  bool padded() const { return !utterance_index.has_value(); }
  // Canonical slot: frame-major, self before interlocutor, audio before
  // text. Slot 0 is the reference stream (current speaker audio).
  int slot() const {
    return frame * 4 + static_cast<int>(role) * 2 + static_cast<int>(modality);
  }
};

// The 4*frames input streams for one prediction target. Embedding views
// point into the source corpus (or at an owned zero buffer when padded), so
// a StreamSet must not outlive its corpus.
struct StreamSet {
  std::vector<StreamRef> refs;                     // canonical slot order
  std::vector<std::span<const float>> embeddings;  // parallel to refs
  int dim = 0;
  std::vector<float> zero;  // shared backing for padded spans
};

StreamSet build_context_window(const Dialogue& dialogue, int t, int frames = 3);

struct SplitResult {
  std::vector<int> train;  // dialogue indices into corpus.dialogues
  std::vector<int> val;
  std::vector<int> test;
};

// Dialogue-level partition. val/test sizes round to nearest; train absorbs
// the remainder. Deterministic in (corpus order, seed).
SplitResult split_dialogues(const Corpus& corpus, uint64_t seed, double train_ratio = 8.0,
                            double val_ratio = 1.0, double test_ratio = 1.0);

// Deep-copied sub-corpus over the given dialogue indices.
Corpus corpus_subset(const Corpus& corpus, const std::vector<int>& dialogue_indices);

}  // namespace gxl
