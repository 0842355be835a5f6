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

#include <cstddef>
#include <vector>

#include "svkit/types.hpp"

namespace svkit::feats {

// Mono waveform, amplitudes in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

// Log-mel filter bank with a prepended log-energy column: dim = n_mels + 1
// with the defaults, i.e. 81.
struct FeatureConfig {
  double window_ms = 25.0;
  double shift_ms = 10.0;
  int n_mels = 80;
  bool include_energy = true;

  int dim() const { return n_mels + (include_energy ? 1 : 0); }
};

struct FeatureMatrix {
  Matrix frames;  // T x dim
  bool cmn_applied = false;

  Index num_frames() const { return frames.rows(); }
  Index dim() const { return frames.cols(); }
};

// Only 16 kHz input is supported; other rates are rejected, resampling is
// up to the caller.
inline constexpr int kSampleRate = 16000;
inline constexpr double kMelLowHz = 20.0;
inline constexpr double kMelHighHz = 7600.0;

// Floor applied inside log() for both energy and mel channels, so silence
// maps to log(1e-10) instead of -inf.
double log_floor();

int window_samples(const FeatureConfig& cfg);
int shift_samples(const FeatureConfig& cfg);

// floor((n_samples - window) / shift) + 1; requires at least one full window.
Index num_frames(std::size_t n_samples, const FeatureConfig& cfg);

// Triangular filters on the HTK mel scale 2595*log10(1 + f/700), returned as
// an n_mels x (n_fft/2 + 1) weight matrix acting on the power spectrum.
Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate,
                      double low_hz = kMelLowHz, double high_hz = kMelHighHz);

// Center frequency (Hz) of each mel filter, same construction as above.
Vector mel_center_freqs(int n_mels, double low_hz = kMelLowHz,
                        double high_hz = kMelHighHz);

// Hamming-windowed power-spectrum fbank.  Column 0 is per-frame log energy
// when cfg.include_energy; the rest are log mel-filter energies.  No
// dithering and no pre-emphasis, so extraction is deterministic.
FeatureMatrix extract_fbank(const Waveform& wave,
                            const FeatureConfig& cfg = {});

// Per-utterance cepstral mean normalization: zero-centers every column.
FeatureMatrix apply_cmn(const FeatureMatrix& f);

// Returns n consecutive frames starting at `start`, wrapping modulo T so
// short utterances tile instead of being zero-padded.
FeatureMatrix crop_frames(const FeatureMatrix& f, Index n, Index start = 0);

}  // namespace svkit::feats
