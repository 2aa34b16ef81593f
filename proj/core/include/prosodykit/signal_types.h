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

#ifndef PROSODYKIT_SIGNAL_TYPES_H_
#define PROSODYKIT_SIGNAL_TYPES_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace prosodykit {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

inline constexpr int kDefaultSampleRate = 22050;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

struct StftConfig {
  int sample_rate = kDefaultSampleRate;
  int window_length = 1024;
  int hop_length = 256;
  int mel_channels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double energy_floor = 1e-5;

  // Throws kInvalidArgument when the invariants do not hold.
  void Validate() const;
  int fft_bins() const { return window_length / 2 + 1; }
};

// Log-mel energies, one row per frame.
struct MelSpectrogram {
  Matrix frames;  // [T x mel_channels]
  int hop_length = 256;
  int sample_rate = kDefaultSampleRate;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int num_channels() const { return static_cast<int>(frames.cols()); }
};

// Per-frame F0. Unvoiced frames hold exactly 0.0 and voiced[t] == false;
// consumers branch on the mask.
struct PitchContour {
  std::vector<double> f0;
  std::vector<bool> voiced;
  int hop_length = 256;
  int sample_rate = kDefaultSampleRate;

  int size() const { return static_cast<int>(f0.size()); }
  int num_voiced() const;
  bool operator==(const PitchContour& other) const = default;
};

struct F0Config {
  int sample_rate = kDefaultSampleRate;
  int window_length = 1024;
  int hop_length = 256;
  double fmin_search = 50.0;
  double fmax_search = 600.0;
  double voicing_threshold = 0.3;
  // Frames whose RMS falls below this are unvoiced without further analysis.
  double silence_rms = 1e-3;

  void Validate() const;
};

struct VocalRangeStats {
  double log_f0_mean = 0.0;
  double log_f0_std = 0.0;
  int64_t n_voiced_frames = 0;

  bool valid() const { return n_voiced_frames > 0; }
  bool operator==(const VocalRangeStats&) const = default;
};

}  // namespace prosodykit

#endif  // PROSODYKIT_SIGNAL_TYPES_H_
