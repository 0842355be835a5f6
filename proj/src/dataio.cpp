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

#include "svkit/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "svkit/error.hpp"
#include "svkit/rng.hpp"

namespace svkit::dataio {

namespace {

// --- little-endian primitives ---------------------------------------------

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

void put_u16(std::string& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  put_bytes(out, b, 2);
}

void put_u32(std::string& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 8);
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    require_data(in_.good(), "truncated file", "cannot open " + path);
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    require_data(static_cast<std::size_t>(in_.gcount()) == n, "truncated file",
                 "unexpected end of file");
  }

  std::uint16_t u16() {
    unsigned char b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string str(std::size_t n) {
    std::string s(n, '\0');
    if (n > 0) bytes(s.data(), n);
    return s;
  }

  void expect_magic(const char magic[4]) {
    char got[4];
    bytes(got, 4);
    require_data(std::memcmp(got, magic, 4) == 0, "bad magic",
                 std::string("expected ") + std::string(magic, 4));
  }

 private:
  std::ifstream in_;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> fields;
  std::string f;
  while (ss >> f) fields.push_back(f);
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw_data("malformed line", context + ": bad number '" + s + "'");
  }
  require_data(pos == s.size(), "malformed line",
               context + ": bad number '" + s + "'");
  return v;
}

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  require_data(in.good(), "truncated file", "cannot open " + path);
  return in;
}

}  // namespace

void atomic_write(const std::string& path, const std::string& payload) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require_data(out.good(), "truncated file", "cannot open " + tmp.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    require_data(out.good(), "truncated file", "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  require_data(!ec, "truncated file",
               "rename failed: " + tmp.string() + " -> " + path);
}

// ---------------------------------------------------------------------------
// Embedding archive.
// ---------------------------------------------------------------------------

void save_archive(const std::string& path, const EmbeddingArchive& archive) {
  std::set<std::string> seen;
  std::string out;
  out.reserve(24 + archive.records.size() * (archive.dim * 4 + 18));
  put_bytes(out, "SVEB", 4);
  put_u16(out, 1);
  put_u32(out, archive.dim);
  put_u64(out, archive.records.size());
  for (const auto& rec : archive.records) {
    require_data(seen.insert(rec.id).second, "duplicate id", rec.id);
    require_data(rec.vec.size() == static_cast<Index>(archive.dim),
                 "dim mismatch", "record " + rec.id);
    require_data(rec.id.size() <= 0xffff, "malformed line",
                 "id longer than 65535 bytes");
    put_u16(out, static_cast<std::uint16_t>(rec.id.size()));
    put_bytes(out, rec.id.data(), rec.id.size());
    for (Index i = 0; i < rec.vec.size(); ++i) put_f32(out, rec.vec[i]);
  }
  atomic_write(path, out);
}

EmbeddingArchive load_archive(const std::string& path) {
  Reader r(path);
  r.expect_magic("SVEB");
  const std::uint16_t version = r.u16();
  require_data(version == 1, "bad magic", "unsupported archive version");
  EmbeddingArchive archive;
  archive.dim = r.u32();
  const std::uint64_t count = r.u64();
  archive.records.reserve(count);
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    ArchiveRecord rec;
    rec.id = r.str(r.u16());
    require_data(seen.insert(rec.id).second, "duplicate id", rec.id);
    rec.vec.resize(archive.dim);
    for (std::uint32_t d = 0; d < archive.dim; ++d) rec.vec[d] = r.f32();
    archive.records.push_back(std::move(rec));
  }
  return archive;
}

// ---------------------------------------------------------------------------
// Feature matrix container.
// ---------------------------------------------------------------------------

void save_feature_matrix(const std::string& path,
                         const feats::FeatureMatrix& f) {
  std::string out;
  out.reserve(32 + static_cast<std::size_t>(f.frames.size()) * 4);
  put_bytes(out, "SVFM", 4);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(f.dim()));
  put_u64(out, static_cast<std::uint64_t>(f.num_frames()));
  out.push_back(f.cmn_applied ? 1 : 0);
  for (Index t = 0; t < f.num_frames(); ++t) {
    for (Index c = 0; c < f.dim(); ++c) {
      put_f32(out, static_cast<float>(f.frames(t, c)));
    }
  }
  atomic_write(path, out);
}

feats::FeatureMatrix load_feature_matrix(const std::string& path) {
  Reader r(path);
  r.expect_magic("SVFM");
  require_data(r.u16() == 1, "bad magic", "unsupported feature version");
  const std::uint32_t cols = r.u32();
  const std::uint64_t rows = r.u64();
  std::uint8_t cmn = 0;
  r.bytes(&cmn, 1);
  feats::FeatureMatrix f;
  f.frames.resize(static_cast<Index>(rows), cols);
  for (std::uint64_t t = 0; t < rows; ++t) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      f.frames(static_cast<Index>(t), c) = r.f32();
    }
  }
  f.cmn_applied = cmn != 0;
  return f;
}

// ---------------------------------------------------------------------------
// WAV (16-bit PCM mono RIFF).
// ---------------------------------------------------------------------------

feats::Waveform read_wav(const std::string& path) {
  Reader r(path);
  r.expect_magic("RIFF");
  r.u32();  // chunk size
  char wave[4];
  r.bytes(wave, 4);
  require_data(std::memcmp(wave, "WAVE", 4) == 0, "bad magic",
               "not a WAVE file");

  feats::Waveform out;
  bool have_fmt = false;
  while (true) {
    char id[4];
    r.bytes(id, 4);
    std::uint32_t size = r.u32();
    if (std::memcmp(id, "fmt ", 4) == 0) {
      require_data(size >= 16, "truncated file", "fmt chunk too small");
      const std::uint16_t format = r.u16();
      const std::uint16_t channels = r.u16();
      const std::uint32_t rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      const std::uint16_t bits = r.u16();
      require_data(format == 1 && bits == 16, "invalid config",
                   "only 16-bit PCM is supported");
      require_data(channels == 1, "invalid config", "only mono is supported");
      require_data(rate > 0, "invalid config", "non-positive sample rate");
      out.sample_rate = static_cast<int>(rate);
      if (size > 16) r.str(size - 16);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      require_data(have_fmt, "bad magic", "data chunk before fmt");
      const std::size_t n = size / 2;
      out.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t raw = r.u16();
        const std::int16_t s = static_cast<std::int16_t>(raw);
        out.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return out;
    } else {
      r.str(size + (size & 1));  // skip unknown chunk (word-aligned)
    }
  }
}

void write_wav(const std::string& path, const feats::Waveform& wave) {
  require_data(wave.sample_rate > 0, "invalid config",
               "non-positive sample rate");
  const std::uint32_t n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out;
  out.reserve(44 + n * 2);
  put_bytes(out, "RIFF", 4);
  put_u32(out, 36 + n * 2);
  put_bytes(out, "WAVE", 4);
  put_bytes(out, "fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_bytes(out, "data", 4);
  put_u32(out, n * 2);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const int v = static_cast<int>(std::lrint(clipped * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  atomic_write(path, out);
}

// ---------------------------------------------------------------------------
// Text formats.
// ---------------------------------------------------------------------------

void save_trials(const std::string& path, const TrialList& trials) {
  std::string out;
  for (const auto& t : trials.trials) {
    out += t.enroll;
    out += ' ';
    out += t.test;
    if (t.label >= 0) {
      out += ' ';
      out += t.label > 0 ? '1' : '0';
    }
    out += '\n';
  }
  atomic_write(path, out);
}

TrialList load_trials(const std::string& path) {
  auto in = open_text(path);
  TrialList list;
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    require_data(fields.size() == 2 || fields.size() == 3, "malformed line",
                 "trial line: " + line);
    Trial t;
    t.enroll = fields[0];
    t.test = fields[1];
    if (fields.size() == 3) {
      require_data(fields[2] == "0" || fields[2] == "1", "malformed line",
                   "trial label must be 0 or 1: " + line);
      t.label = fields[2] == "1" ? 1 : 0;
    }
    list.trials.push_back(std::move(t));
  }
  return list;
}

void save_scores(const std::string& path, const ScoreSet& scores) {
  std::string out;
  for (const auto& t : scores.trials) {
    out += t.enroll;
    out += ' ';
    out += t.test;
    out += ' ';
    out += format_double(t.score);
    out += '\n';
  }
  atomic_write(path, out);
}

ScoreSet load_scores(const std::string& path) {
  auto in = open_text(path);
  ScoreSet set;
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    require_data(fields.size() == 3, "malformed line", "score line: " + line);
    ScoredTrial t;
    t.enroll = fields[0];
    t.test = fields[1];
    t.score = parse_double(fields[2], "score file");
    set.trials.push_back(std::move(t));
  }
  return set;
}

void save_genres(const std::string& path,
                 const std::map<std::string, std::string>& genres) {
  std::string out;
  for (const auto& [id, genre] : genres) {
    out += id;
    out += ' ';
    out += genre;
    out += '\n';
  }
  atomic_write(path, out);
}

std::map<std::string, std::string> load_genres(const std::string& path) {
  auto in = open_text(path);
  std::map<std::string, std::string> genres;
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    require_data(fields.size() == 2, "malformed line", "genre line: " + line);
    genres[fields[0]] = fields[1];
  }
  return genres;
}

void save_enroll_map(const std::string& path, const EnrollMap& m) {
  std::string out;
  for (const auto& [id, segments] : m) {
    out += id;
    for (const auto& s : segments) {
      out += ' ';
      out += s;
    }
    out += '\n';
  }
  atomic_write(path, out);
}

EnrollMap load_enroll_map(const std::string& path) {
  auto in = open_text(path);
  EnrollMap m;
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    require_data(fields.size() >= 2, "malformed line",
                 "enroll map line: " + line);
    m[fields[0]] = {fields.begin() + 1, fields.end()};
  }
  return m;
}

// ---------------------------------------------------------------------------
// Synthetic corpus.
// ---------------------------------------------------------------------------

const std::vector<std::string>& known_genres() {
  static const std::vector<std::string> genres = {
      "advertisement", "drama",      "entertainment", "interview",
      "livebroadcast", "movie",      "play",          "recitation",
      "singing",       "speech",     "vlog"};
  return genres;
}

bool SynthCorpus::is_speed_class(int label) const {
  return class_ids[static_cast<std::size_t>(label)].find(kSpeedTag) !=
         std::string::npos;
}

int SynthCorpus::n_original_classes() const {
  int n = 0;
  for (const auto& id : class_ids) {
    if (id.find(kSpeedTag) == std::string::npos) ++n;
  }
  return n;
}

namespace {

Vector unit_direction(Rng& rng, int dim) {
  Vector v = rng.normal_vector(dim);
  const double n = v.norm();
  return n > 1e-12 ? Vector(v / n) : Vector(Vector::Unit(dim, 0));
}

void validate_spec(const SynthCorpusSpec& spec) {
  require_data(spec.n_speakers >= 1 && spec.utterances_per_speaker >= 1 &&
                   spec.dim >= 1,
               "invalid config", "corpus counts must be >= 1");
  require_data(spec.genre_offset_scale >= 0 && spec.within_speaker_noise >= 0 &&
                   spec.frame_noise >= 0,
               "invalid config", "noise scales must be >= 0");
  require_data(!spec.genres.empty(), "invalid config", "need >= 1 genre");
  const auto& known = known_genres();
  for (const auto& g : spec.genres) {
    require_data(std::find(known.begin(), known.end(), g) != known.end(),
                 "invalid config", "unknown genre " + g);
  }
}

}  // namespace

SynthCorpus gen_synthetic(const SynthCorpusSpec& spec) {
  validate_spec(spec);
  Rng rng(hash_combine(spec.seed, 0x636f7270ULL));  // "corp"

  SynthCorpus corpus;
  corpus.dim = spec.dim;
  corpus.frames_per_utt = spec.frames_per_utt;
  corpus.frame_noise = spec.frame_noise;

  // Shared per-genre offsets, generated in sorted genre order.
  std::vector<std::string> genres = spec.genres;
  std::sort(genres.begin(), genres.end());
  genres.erase(std::unique(genres.begin(), genres.end()), genres.end());
  std::map<std::string, Vector> offsets;
  for (const auto& g : genres) {
    offsets[g] = spec.genre_offset_scale * unit_direction(rng, spec.dim);
  }

  // Class identities: originals first, then the 0.9x/1.1x speed copies.
  std::vector<Vector> identities;
  char buf[64];
  for (int i = 0; i < spec.n_speakers; ++i) {
    std::snprintf(buf, sizeof(buf), "spk%05d", i);
    corpus.class_ids.emplace_back(buf);
    identities.push_back(unit_direction(rng, spec.dim));
  }
  if (spec.speed_triple) {
    constexpr double kSpeedPerturb = 0.3;
    for (int i = 0; i < spec.n_speakers; ++i) {
      for (const char* factor : {"0.9", "1.1"}) {
        corpus.class_ids.push_back(corpus.class_ids[i] + kSpeedTag + factor);
        Vector v = identities[i] + kSpeedPerturb * unit_direction(rng, spec.dim);
        identities.push_back(v / v.norm());
      }
    }
  }

  std::uint64_t utt_index = 0;
  for (std::size_t cls = 0; cls < corpus.class_ids.size(); ++cls) {
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      SynthUtterance utt;
      std::snprintf(buf, sizeof(buf), "-u%04d", u);
      utt.id = corpus.class_ids[cls] + buf;
      utt.label = static_cast<int>(cls);
      utt.genre = genres[rng.integer(genres.size())];
      Vector v = identities[cls] + offsets[utt.genre] +
                 spec.within_speaker_noise * unit_direction(rng, spec.dim);
      utt.base = v / v.norm();
      utt.frame_seed = hash_combine(spec.seed, 0xf7a3e5ULL + utt_index);
      corpus.utts.push_back(std::move(utt));
      ++utt_index;
    }
  }
  return corpus;
}

Matrix materialize_frames(const SynthUtterance& utt, int frames_per_utt,
                          double frame_noise) {
  return materialize_crop(utt, frames_per_utt, frame_noise, 0, frames_per_utt);
}

Matrix materialize_crop(const SynthUtterance& utt, int frames_per_utt,
                        double frame_noise, Index start, Index n) {
  require_data(frames_per_utt >= 1, "invalid config",
               "not a feature corpus (frames_per_utt == 0)");
  require_data(n >= 1, "invalid length", "crop length must be positive");
  require_data(start >= 0, "invalid length", "crop start must be nonnegative");
  const Index dim = utt.base.size();
  Matrix out(n, dim);
  for (Index i = 0; i < n; ++i) {
    const Index row = (start + i) % frames_per_utt;
    Rng rng(hash_combine(utt.frame_seed, static_cast<std::uint64_t>(row)));
    for (Index d = 0; d < dim; ++d) {
      out(i, d) = utt.base[d] + frame_noise * rng.normal();
    }
  }
  return out;
}

void save_corpus(const std::string& prefix, const SynthCorpus& corpus) {
  EmbeddingArchive archive;
  archive.dim = static_cast<std::uint32_t>(corpus.dim);
  archive.records.reserve(corpus.utts.size());
  std::map<std::string, std::string> genres;
  std::string utts_text;
  for (const auto& utt : corpus.utts) {
    archive.records.push_back({utt.id, utt.base.cast<float>()});
    genres[utt.id] = utt.genre;
    utts_text += utt.id + ' ' + std::to_string(utt.label) + ' ' +
                 corpus.class_ids[static_cast<std::size_t>(utt.label)] + ' ' +
                 utt.genre + ' ' + std::to_string(utt.frame_seed) + '\n';
  }
  save_archive(prefix + ".emb", archive);
  atomic_write(prefix + ".utts", utts_text);
  save_genres(prefix + ".genres", genres);
  std::string meta;
  meta += "dim=" + std::to_string(corpus.dim) + '\n';
  meta += "frames_per_utt=" + std::to_string(corpus.frames_per_utt) + '\n';
  meta += "frame_noise=" + format_double(corpus.frame_noise) + '\n';
  meta += "n_classes=" + std::to_string(corpus.class_ids.size()) + '\n';
  atomic_write(prefix + ".meta", meta);
}

SynthCorpus load_corpus(const std::string& prefix) {
  SynthCorpus corpus;

  std::map<std::string, std::string> meta;
  {
    auto in = open_text(prefix + ".meta");
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  require_data(meta.count("dim") && meta.count("frames_per_utt") &&
                   meta.count("frame_noise") && meta.count("n_classes"),
               "malformed line", "incomplete corpus meta");
  corpus.dim = std::stoi(meta["dim"]);
  corpus.frames_per_utt = std::stoi(meta["frames_per_utt"]);
  corpus.frame_noise = parse_double(meta["frame_noise"], "corpus meta");
  corpus.class_ids.resize(std::stoul(meta["n_classes"]));

  const EmbeddingArchive archive = load_archive(prefix + ".emb");
  require_data(archive.dim == static_cast<std::uint32_t>(corpus.dim),
               "dim mismatch", "corpus meta vs archive");
  std::map<std::string, const ArchiveRecord*> by_id;
  for (const auto& rec : archive.records) by_id[rec.id] = &rec;

  auto in = open_text(prefix + ".utts");
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    require_data(fields.size() == 5, "malformed line", "utts line: " + line);
    SynthUtterance utt;
    utt.id = fields[0];
    utt.label = std::stoi(fields[1]);
    require_data(utt.label >= 0 &&
                     utt.label < static_cast<int>(corpus.class_ids.size()),
                 "bad label", "utts line: " + line);
    corpus.class_ids[static_cast<std::size_t>(utt.label)] = fields[2];
    utt.genre = fields[3];
    utt.frame_seed = std::stoull(fields[4]);
    const auto it = by_id.find(utt.id);
    require_data(it != by_id.end(), "dim mismatch",
                 "utterance missing from archive: " + utt.id);
    utt.base = it->second->vec.cast<double>();
    corpus.utts.push_back(std::move(utt));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Trial / retrieval generation.
// ---------------------------------------------------------------------------

namespace {

// Utterance indices of non-speed classes, grouped by label.
std::map<int, std::vector<std::size_t>> clean_by_class(
    const SynthCorpus& corpus) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.utts.size(); ++i) {
    if (!corpus.is_speed_class(corpus.utts[i].label)) {
      groups[corpus.utts[i].label].push_back(i);
    }
  }
  return groups;
}

}  // namespace

TrialGenResult gen_trials(const SynthCorpus& corpus, int n_target,
                          int n_nontarget, bool concat_enroll,
                          std::uint64_t seed) {
  require_data(n_target >= 0 && n_nontarget >= 0, "invalid config",
               "trial counts must be >= 0");
  const auto groups = clean_by_class(corpus);
  std::vector<int> speakers;
  for (const auto& [label, utts] : groups) speakers.push_back(label);
  require_data(!speakers.empty(), "corpus too small", "no clean utterances");

  Rng rng(hash_combine(seed, 0x747269616cULL));  // "trial"
  TrialGenResult result;
  std::set<std::pair<std::string, std::string>> used;
  int concat_counter = 0;

  auto pick_enroll = [&](int label) -> std::pair<std::string, std::string> {
    // Returns (enroll id, excluded test utt id == "" when none).
    const auto& utts = groups.at(label);
    if (!concat_enroll || utts.size() < 3) {
      const auto idx = utts[rng.integer(utts.size())];
      return {corpus.utts[idx].id, corpus.utts[idx].id};
    }
    const std::size_t n_seg = 2 + rng.integer(std::min<std::size_t>(
                                      utts.size() - 1, 3) - 1);
    std::vector<std::size_t> pool = utts;
    rng.shuffle(pool);
    std::vector<std::string> segments;
    for (std::size_t s = 0; s < n_seg; ++s) {
      segments.push_back(corpus.utts[pool[s]].id);
    }
    std::sort(segments.begin(), segments.end());
    const std::string enroll_id =
        "enr" + std::to_string(concat_counter++) + "-" +
        corpus.class_ids[static_cast<std::size_t>(label)];
    result.enroll_map[enroll_id] = segments;
    return {enroll_id, ""};
  };

  auto add_trials = [&](int want, bool target) {
    int made = 0;
    const long max_attempts = 200L * (want + 1);
    for (long attempt = 0; attempt < max_attempts && made < want; ++attempt) {
      const int spk_e =
          speakers[rng.integer(speakers.size())];
      if (target && groups.at(spk_e).size() < 2) continue;
      int spk_t = spk_e;
      if (!target) {
        if (speakers.size() < 2) break;
        do {
          spk_t = speakers[rng.integer(speakers.size())];
        } while (spk_t == spk_e);
      }
      const auto [enroll_id, excluded] = pick_enroll(spk_e);
      const auto& test_pool = groups.at(spk_t);
      std::string test_id;
      for (int tries = 0; tries < 8; ++tries) {
        const auto idx = test_pool[rng.integer(test_pool.size())];
        if (corpus.utts[idx].id != excluded) {
          test_id = corpus.utts[idx].id;
          break;
        }
      }
      if (test_id.empty()) continue;
      if (result.enroll_map.count(enroll_id)) {
        // Concatenated enrollments must not contain the test utterance.
        const auto& segs = result.enroll_map[enroll_id];
        if (std::find(segs.begin(), segs.end(), test_id) != segs.end()) {
          result.enroll_map.erase(enroll_id);
          continue;
        }
      }
      // Concat enroll ids are freshly minted, so only single-utterance
      // enrollments can collide here.
      if (!used.insert({enroll_id, test_id}).second) continue;
      result.trials.trials.push_back({enroll_id, test_id, target ? 1 : 0});
      ++made;
    }
    require_data(made == want, "corpus too small",
                 "could not assemble requested trials");
  };

  add_trials(n_target, true);
  add_trials(n_nontarget, false);
  return result;
}

TrialList gen_retrieval(const SynthCorpus& corpus, const RetrievalSpec& spec) {
  require_data(spec.n_targets >= 1 && spec.tests_per_target >= 1 &&
                   spec.n_nontarget >= 0,
               "invalid config", "retrieval counts");
  const auto groups = clean_by_class(corpus);

  std::vector<int> eligible;
  for (const auto& [label, utts] : groups) {
    if (static_cast<int>(utts.size()) >= spec.tests_per_target + 1) {
      eligible.push_back(label);
    }
  }
  require_data(static_cast<int>(eligible.size()) >= spec.n_targets,
               "corpus too small", "not enough speakers for retrieval targets");

  Rng rng(hash_combine(spec.seed, 0x736572ULL));  // "ser"
  rng.shuffle(eligible);
  eligible.resize(static_cast<std::size_t>(spec.n_targets));
  const std::set<int> target_set(eligible.begin(), eligible.end());

  // Shared non-target candidate pool from non-target speakers.
  std::vector<std::size_t> pool;
  for (const auto& [label, utts] : groups) {
    if (!target_set.count(label)) {
      pool.insert(pool.end(), utts.begin(), utts.end());
    }
  }
  require_data(static_cast<int>(pool.size()) >= spec.n_nontarget,
               "corpus too small", "not enough non-target utterances");
  rng.shuffle(pool);
  pool.resize(static_cast<std::size_t>(spec.n_nontarget));

  TrialList manifest;
  for (const int label : eligible) {
    std::vector<std::size_t> utts = groups.at(label);
    rng.shuffle(utts);
    const std::string enroll_id = corpus.utts[utts[0]].id;
    for (int k = 0; k < spec.tests_per_target; ++k) {
      manifest.trials.push_back({enroll_id, corpus.utts[utts[1 + k]].id, 1});
    }
    for (const auto idx : pool) {
      manifest.trials.push_back({enroll_id, corpus.utts[idx].id, 0});
    }
  }
  return manifest;
}

}  // namespace svkit::dataio
