// Copyright (c) 2026 The ProsodyKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prosodykit/spectral.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "prosodykit/error.h"

namespace prosodykit {

void StftConfig::Validate() const {
  if (sample_rate <= 0 || window_length <= 0 || hop_length <= 0 ||
      hop_length > window_length || mel_channels < 1 || fmin < 0.0 ||
      fmin >= fmax || fmax > sample_rate / 2.0 || energy_floor <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid STFT configuration");
  }
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

int NumFrames(int64_t num_samples, int window_length, int hop_length) {
  const int64_t padded = num_samples + 2 * (window_length / 2);
  return static_cast<int>(1 + (padded - window_length) / hop_length);
}

std::vector<double> CenterPad(std::span<const double> samples, int pad) {
  const int64_t n = static_cast<int64_t>(samples.size());
  std::vector<double> out(static_cast<size_t>(n + 2 * pad), 0.0);
  std::copy(samples.begin(), samples.end(), out.begin() + pad);
  if (n > pad) {
    for (int i = 0; i < pad; ++i) {
      out[static_cast<size_t>(pad - 1 - i)] = samples[static_cast<size_t>(i + 1)];
      out[static_cast<size_t>(pad + n + i)] =
          samples[static_cast<size_t>(n - 2 - i)];
    }
  }
  return out;
}

std::vector<double> MelCenterFrequencies(const StftConfig& cfg) {
  const double lo = HzToMel(cfg.fmin);
  const double hi = HzToMel(cfg.fmax);
  std::vector<double> centers(static_cast<size_t>(cfg.mel_channels));
  for (int m = 0; m < cfg.mel_channels; ++m) {
    centers[static_cast<size_t>(m)] =
        MelToHz(lo + (hi - lo) * (m + 1) / (cfg.mel_channels + 1));
  }
  return centers;
}

Matrix MelFilterbank(const StftConfig& cfg) {
  cfg.Validate();
  const int bins = cfg.fft_bins();
  const double lo = HzToMel(cfg.fmin);
  const double hi = HzToMel(cfg.fmax);
  std::vector<double> edges(static_cast<size_t>(cfg.mel_channels + 2));
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) /
                                (cfg.mel_channels + 1));
  }
  Matrix fb = Matrix::Zero(cfg.mel_channels, bins);
  for (int m = 0; m < cfg.mel_channels; ++m) {
    const double left = edges[static_cast<size_t>(m)];
    const double center = edges[static_cast<size_t>(m + 1)];
    const double right = edges[static_cast<size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.window_length;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      fb(m, k) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

std::vector<double> HannWindow(int length) {
  std::vector<double> w(static_cast<size_t>(length));
  for (int i = 0; i < length; ++i) {
    w[static_cast<size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
  }
  return w;
}

ComplexMatrix Stft(std::span<const double> samples, const StftConfig& cfg) {
  const int win = cfg.window_length;
  const int bins = cfg.fft_bins();
  const std::vector<double> padded = CenterPad(samples, win / 2);
  const int frames = NumFrames(static_cast<int64_t>(samples.size()), win,
                               cfg.hop_length);
  const std::vector<double> window = HannWindow(win);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<size_t>(win));
  std::vector<std::complex<double>> out;
  ComplexMatrix spec(frames, bins);
  for (int t = 0; t < frames; ++t) {
    const size_t start = static_cast<size_t>(t) * cfg.hop_length;
    for (int i = 0; i < win; ++i) {
      buf[static_cast<size_t>(i)] =
          padded[start + static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
    }
    fft.fwd(out, buf);
    for (int k = 0; k < bins; ++k) spec(t, k) = out[static_cast<size_t>(k)];
  }
  return spec;
}

std::vector<double> Istft(const ComplexMatrix& spec, const StftConfig& cfg) {
  const int win = cfg.window_length;
  const int hop = cfg.hop_length;
  const int frames = static_cast<int>(spec.rows());
  const int bins = cfg.fft_bins();
  const std::vector<double> window = HannWindow(win);
  const size_t padded_len = static_cast<size_t>(frames - 1) * hop + win;
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> half(static_cast<size_t>(bins));
  std::vector<double> frame;
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) half[static_cast<size_t>(k)] = spec(t, k);
    fft.inv(frame, half, win);
    const size_t start = static_cast<size_t>(t) * hop;
    for (int i = 0; i < win; ++i) {
      const double w = window[static_cast<size_t>(i)];
      acc[start + static_cast<size_t>(i)] += frame[static_cast<size_t>(i)] * w;
      norm[start + static_cast<size_t>(i)] += w * w;
    }
  }
  const size_t pad = static_cast<size_t>(win / 2);
  const size_t n = static_cast<size_t>(frames - 1) * hop;
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    const double d = norm[pad + i];
    out[i] = d > 1e-10 ? acc[pad + i] / d : 0.0;
  }
  return out;
}

MelSpectrogram ComputeMelSpectrogram(const Waveform& wave,
                                     const StftConfig& cfg) {
  cfg.Validate();
  if (wave.samples.empty()) {
    throw Error(ErrorCode::kSignalTooShort,
                "waveform shorter than one analysis window");
  }
  if (wave.sample_rate != cfg.sample_rate) {
    throw Error(ErrorCode::kInvalidArgument,
                "waveform rate " + std::to_string(wave.sample_rate) +
                    " differs from STFT rate " + std::to_string(cfg.sample_rate));
  }
  const ComplexMatrix spec = Stft(wave.samples, cfg);
  const Matrix magnitude = spec.cwiseAbs();
  const Matrix fb = MelFilterbank(cfg);
  MelSpectrogram mel;
  mel.hop_length = cfg.hop_length;
  mel.sample_rate = cfg.sample_rate;
  mel.frames = (magnitude * fb.transpose())
                   .cwiseMax(cfg.energy_floor)
                   .array()
                   .log()
                   .matrix();
  return mel;
}

Waveform ReconstructWaveform(const MelSpectrogram& mel, const StftConfig& cfg,
                             int iterations, uint64_t seed) {
  cfg.Validate();
  if (iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  }
  if (mel.num_frames() < 1 || mel.num_channels() != cfg.mel_channels ||
      !mel.frames.allFinite()) {
    throw Error(ErrorCode::kMalformedInput, "malformed mel spectrogram");
  }
  const Matrix fb = MelFilterbank(cfg);
  const Matrix pinv = fb.completeOrthogonalDecomposition().pseudoInverse();
  // [T x bins]
  const Matrix magnitude =
      (mel.frames.array().exp().matrix() * pinv.transpose()).cwiseMax(0.0);
  const int frames = mel.num_frames();
  const int bins = cfg.fft_bins();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(-std::numbers::pi,
                                                    std::numbers::pi);
  ComplexMatrix phase(frames, bins);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) phase(t, k) = std::polar(1.0, phase_dist(rng));
  }
  const ComplexMatrix complex_magnitude =
      magnitude.cast<std::complex<double>>();
  std::vector<double> samples;
  for (int it = 0; it < iterations; ++it) {
    samples = Istft(complex_magnitude.cwiseProduct(phase), cfg);
    if (it + 1 == iterations) break;
    const ComplexMatrix rebuilt = Stft(samples, cfg);
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < bins; ++k) {
        const std::complex<double> z = rebuilt(t, k);
        const double a = std::abs(z);
        phase(t, k) = a > 1e-12 ? z / a : std::complex<double>(1.0, 0.0);
      }
    }
  }
  Waveform wave;
  wave.sample_rate = cfg.sample_rate;
  wave.samples = std::move(samples);
  double peak = 0.0;
  for (double s : wave.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0) {
    for (double& s : wave.samples) s /= peak;
  }
  return wave;
}

double MelReconstructionError(const MelSpectrogram& a,
                              const MelSpectrogram& b) {
  const int frames = std::min(a.num_frames(), b.num_frames());
  if (frames == 0 || a.num_channels() != b.num_channels()) {
    throw Error(ErrorCode::kLengthMismatch, "incomparable mel spectrograms");
  }
  return (a.frames.topRows(frames) - b.frames.topRows(frames))
      .cwiseAbs()
      .mean();
}

Matrix HarmonicExcitation(const PitchContour& contour, const StftConfig& cfg) {
  cfg.Validate();
  const Matrix fb = MelFilterbank(cfg);
  const int bins = cfg.fft_bins();
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.window_length;
  const double nyquist = 0.5 * cfg.sample_rate;
  // Magnitude response of the Hann window at an offset of x bins.
  const auto hann = [](double x) {
    const double ax = std::abs(x);
    if (ax < 1e-9) return 0.5;
    if (std::abs(ax - 1.0) < 1e-9) return 0.25;
    return std::abs(0.5 * std::sin(std::numbers::pi * x) /
                    (std::numbers::pi * x * (1.0 - x * x)));
  };
  Matrix out = Matrix::Zero(contour.size(), cfg.mel_channels);
  Vector spectrum(bins);
  for (int t = 0; t < contour.size(); ++t) {
    const double f0 = contour.f0[static_cast<size_t>(t)];
    if (!contour.voiced[static_cast<size_t>(t)] || !(f0 > 0.0)) continue;
    spectrum.setZero();
    for (double h = f0; h < nyquist; h += f0) {
      const double center = h / bin_hz;
      const int b0 = std::max(0, static_cast<int>(std::floor(center)) - 3);
      const int b1 = std::min(bins - 1, static_cast<int>(std::ceil(center)) + 3);
      for (int b = b0; b <= b1; ++b) spectrum(b) += hann(b - center);
    }
    const Vector mel = ((fb * spectrum).array() + 1e-3).log();
    out.row(t) = (mel.array() - mel.mean()).transpose();
  }
  return out;
}

namespace {

void PutU32(std::ostream& out, uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff),
                              static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

uint32_t GetU32(const unsigned char* b) {
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void WriteMelBinary(const std::filesystem::path& path, const Matrix& frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
  PutU32(out, static_cast<uint32_t>(frames.rows()));
  PutU32(out, static_cast<uint32_t>(frames.cols()));
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      const float v = static_cast<float>(frames(r, c));
      uint32_t bits = 0;
      std::memcpy(&bits, &v, sizeof(bits));
      PutU32(out, bits);
    }
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

Matrix ReadMelBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 8) {
    throw Error(ErrorCode::kMalformedInput, "truncated mel file " + path.string());
  }
  const uint32_t rows = GetU32(bytes.data());
  const uint32_t cols = GetU32(bytes.data() + 4);
  if (bytes.size() != 8 + 4ull * rows * cols) {
    throw Error(ErrorCode::kMalformedInput, "size mismatch in " + path.string());
  }
  Matrix m(rows, cols);
  const unsigned char* p = bytes.data() + 8;
  for (uint32_t r = 0; r < rows; ++r) {
    for (uint32_t c = 0; c < cols; ++c, p += 4) {
      const uint32_t bits = GetU32(p);
      float v = 0.0f;
      std::memcpy(&v, &bits, sizeof(v));
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace prosodykit
