// Copyright (c) 2025 svkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svkit/feats.hpp"
#include "svkit/types.hpp"

namespace svkit::dataio {

// ---------------------------------------------------------------------------
// Binary formats.  All integers and floats little-endian; payloads are f32.
// ---------------------------------------------------------------------------

// Embedding archive, magic "SVEB": header (magic, version u16, dim u32,
// count u64) followed by records (id length u16, id bytes UTF-8, dim * f32).
struct ArchiveRecord {
  std::string id;
  VectorF vec;
};

struct EmbeddingArchive {
  std::uint32_t dim = 0;
  std::vector<ArchiveRecord> records;
};

void save_archive(const std::string& path, const EmbeddingArchive& archive);
EmbeddingArchive load_archive(const std::string& path);

// Feature-matrix container, magic "SVFM": version u16, cols u32, rows u64,
// cmn flag u8, then rows*cols f32 row-major.
void save_feature_matrix(const std::string& path, const feats::FeatureMatrix& f);
feats::FeatureMatrix load_feature_matrix(const std::string& path);

// 16-bit PCM mono RIFF WAV.
feats::Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const feats::Waveform& wave);

// ---------------------------------------------------------------------------
// Text formats.  UTF-8, newline-delimited, whitespace-separated.
// ---------------------------------------------------------------------------

// Trial: "enroll-id test-id [0|1]"; label -1 when absent.
struct Trial {
  std::string enroll;
  std::string test;
  int label = -1;
};

struct TrialList {
  std::vector<Trial> trials;
};

// Scored trial: "enroll-id test-id score" plus the label carried over from
// the trial list when known.
struct ScoredTrial {
  std::string enroll;
  std::string test;
  double score = 0.0;
  int label = -1;
};

struct ScoreSet {
  std::vector<ScoredTrial> trials;
};

void save_trials(const std::string& path, const TrialList& trials);
TrialList load_trials(const std::string& path);

void save_scores(const std::string& path, const ScoreSet& scores);
ScoreSet load_scores(const std::string& path);

// Genre table: "utt-id genre".
void save_genres(const std::string& path,
                 const std::map<std::string, std::string>& genres);
std::map<std::string, std::string> load_genres(const std::string& path);

// Multi-segment enrollments: "enroll-id utt-id utt-id ...".
using EnrollMap = std::map<std::string, std::vector<std::string>>;
void save_enroll_map(const std::string& path, const EnrollMap& m);
EnrollMap load_enroll_map(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic corpus.
// ---------------------------------------------------------------------------

// The 11 CN-Celeb genres.
const std::vector<std::string>& known_genres();

struct SynthCorpusSpec {
  int n_speakers = 100;
  int utterances_per_speaker = 10;
  int dim = 128;
  std::vector<std::string> genres;       // subset of known_genres()
  double genre_offset_scale = 0.0;       // norm of the shared per-genre offset
  double within_speaker_noise = 0.1;     // norm of the per-utterance noise
  bool speed_triple = false;             // spawn 0.9x/1.1x label copies
  int frames_per_utt = 0;                // > 0 makes this a feature corpus
  double frame_noise = 0.05;             // per-frame jitter for features
  std::uint64_t seed = 1;
};

struct SynthUtterance {
  std::string id;
  int label = 0;
  std::string genre;
  Vector base;                 // unit-norm utterance vector
  std::uint64_t frame_seed = 0;
};

// Speed-perturbed classes carry the "#sp0.9" / "#sp1.1" id suffix, which
// makes removing the augmented part a pure id filter.
inline constexpr const char* kSpeedTag = "#sp";

struct SynthCorpus {
  int dim = 0;
  int frames_per_utt = 0;
  double frame_noise = 0.0;
  std::vector<std::string> class_ids;   // originals first, then speed copies
  std::vector<SynthUtterance> utts;

  bool is_speed_class(int label) const;
  int n_original_classes() const;
};

SynthCorpus gen_synthetic(const SynthCorpusSpec& spec);

// Frame t of an utterance is base + frame_noise * jitter, with a per-row
// seeded stream so any crop can be materialized independently.
Matrix materialize_frames(const SynthUtterance& utt, int frames_per_utt,
                          double frame_noise);
Matrix materialize_crop(const SynthUtterance& utt, int frames_per_utt,
                        double frame_noise, Index start, Index n);

// Corpus on disk: "<prefix>.emb" (base vectors), "<prefix>.utts"
// (id label class-id genre frame-seed), "<prefix>.genres" (utt-id genre),
// "<prefix>.meta" (key=value).
void save_corpus(const std::string& prefix, const SynthCorpus& corpus);
SynthCorpus load_corpus(const std::string& prefix);

// ---------------------------------------------------------------------------
// Trial / retrieval manifest generation.  Both draw only from non-speed
// utterances, mirroring evaluation on unaugmented data.
// ---------------------------------------------------------------------------

struct TrialGenResult {
  TrialList trials;      // labeled
  EnrollMap enroll_map;  // populated when concat_enroll
};

TrialGenResult gen_trials(const SynthCorpus& corpus, int n_target,
                          int n_nontarget, bool concat_enroll,
                          std::uint64_t seed);

struct RetrievalSpec {
  int n_targets = 25;
  int tests_per_target = 10;
  int n_nontarget = 2000;  // shared candidate pool
  std::uint64_t seed = 1;
};

// Labeled manifest: per target, one enrollment utterance paired with its
// relevant utterances and the shared non-target pool.
TrialList gen_retrieval(const SynthCorpus& corpus, const RetrievalSpec& spec);

// Atomic text/binary writes: temp file in the target directory + rename.
void atomic_write(const std::string& path, const std::string& payload);

}  // namespace svkit::dataio
