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

#include "svkit/feats.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "svkit/error.hpp"

namespace svkit::feats {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEnergyFloor = 1e-10;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> step(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

Vector hamming_window(int n) {
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
  }
  return w;
}

void validate_config(const FeatureConfig& cfg) {
  require_data(cfg.shift_ms > 0 && cfg.shift_ms <= cfg.window_ms,
               "invalid config", "need 0 < shift_ms <= window_ms");
  require_data(cfg.n_mels >= 1, "invalid config", "n_mels must be >= 1");
}

}  // namespace

double log_floor() { return std::log(kEnergyFloor); }

int window_samples(const FeatureConfig& cfg) {
  return static_cast<int>(cfg.window_ms * kSampleRate / 1000.0 + 0.5);
}

int shift_samples(const FeatureConfig& cfg) {
  return static_cast<int>(cfg.shift_ms * kSampleRate / 1000.0 + 0.5);
}

Index num_frames(std::size_t n_samples, const FeatureConfig& cfg) {
  validate_config(cfg);
  const int win = window_samples(cfg);
  const int shift = shift_samples(cfg);
  require_data(n_samples >= static_cast<std::size_t>(win), "input too short",
               "waveform shorter than one window");
  return static_cast<Index>((n_samples - win) / shift) + 1;
}

Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double low_hz,
                      double high_hz) {
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(low_hz);
  const double mel_hi = hz_to_mel(high_hz);
  Vector edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
  }
  Matrix fb = Matrix::Zero(n_mels, n_bins);
  for (int k = 0; k < n_bins; ++k) {
    const double mel_k =
        hz_to_mel(static_cast<double>(k) * sample_rate / n_fft);
    for (int m = 1; m <= n_mels; ++m) {
      const double left = edges[m - 1], center = edges[m], right = edges[m + 1];
      const double w = mel_k <= center ? (mel_k - left) / (center - left)
                                       : (right - mel_k) / (right - center);
      if (w > 0.0) fb(m - 1, k) = w;
    }
  }
  return fb;
}

Vector mel_center_freqs(int n_mels, double low_hz, double high_hz) {
  const double mel_lo = hz_to_mel(low_hz);
  const double mel_hi = hz_to_mel(high_hz);
  Vector centers(n_mels);
  for (int m = 1; m <= n_mels; ++m) {
    centers[m - 1] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));
  }
  return centers;
}

FeatureMatrix extract_fbank(const Waveform& wave, const FeatureConfig& cfg) {
  require_data(wave.sample_rate == kSampleRate, "invalid config",
               "only 16 kHz input is supported");
  const Index frames = num_frames(wave.samples.size(), cfg);
  const int win = window_samples(cfg);
  const int shift = shift_samples(cfg);

  int n_fft = 1;
  while (n_fft < win) n_fft <<= 1;
  const int n_bins = n_fft / 2 + 1;

  const Matrix fbank = mel_filterbank(cfg.n_mels, n_fft, kSampleRate);
  const Vector window = hamming_window(win);

  Matrix out(frames, cfg.dim());
  std::vector<std::complex<double>> buf(n_fft);
  Vector power(n_bins);
  const int energy_cols = cfg.include_energy ? 1 : 0;

  for (Index t = 0; t < frames; ++t) {
    const double* x = wave.samples.data() + t * shift;
    if (cfg.include_energy) {
      double energy = 0.0;
      for (int i = 0; i < win; ++i) energy += x[i] * x[i];
      out(t, 0) = std::log(std::max(energy, kEnergyFloor));
    }
    for (int i = 0; i < win; ++i) buf[i] = {x[i] * window[i], 0.0};
    for (int i = win; i < n_fft; ++i) buf[i] = {0.0, 0.0};
    fft_radix2(buf);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
    const Vector mel = fbank * power;
    for (int m = 0; m < cfg.n_mels; ++m) {
      out(t, energy_cols + m) = std::log(std::max(mel[m], kEnergyFloor));
    }
  }
  return {std::move(out), false};
}

FeatureMatrix apply_cmn(const FeatureMatrix& f) {
  require_data(f.num_frames() >= 1, "input too short", "empty feature matrix");
  FeatureMatrix out;
  out.frames = f.frames.rowwise() - f.frames.colwise().mean();
  out.cmn_applied = true;
  return out;
}

FeatureMatrix crop_frames(const FeatureMatrix& f, Index n, Index start) {
  require_data(n >= 1, "invalid length", "crop length must be positive");
  require_data(start >= 0, "invalid length", "crop start must be nonnegative");
  const Index total = f.num_frames();
  require_data(total >= 1, "input too short", "empty feature matrix");
  FeatureMatrix out;
  out.frames.resize(n, f.dim());
  for (Index i = 0; i < n; ++i) {
    out.frames.row(i) = f.frames.row((start + i) % total);
  }
  out.cmn_applied = f.cmn_applied;
  return out;
}

}  // namespace svkit::feats
