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

#include "prosodykit/pitch.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "prosodykit/error.h"
#include "prosodykit/spectral.h"

namespace prosodykit {

int PitchContour::num_voiced() const {
  return static_cast<int>(std::count(voiced.begin(), voiced.end(), true));
}

void F0Config::Validate() const {
  if (sample_rate <= 0 || window_length <= 0 || hop_length <= 0 ||
      fmin_search <= 0.0 || fmin_search >= fmax_search ||
      voicing_threshold <= 0.0 || voicing_threshold >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid F0 configuration");
  }
  if (fmax_search > sample_rate / 2.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "F0 search range exceeds the Nyquist frequency");
  }
  if (sample_rate / fmin_search >= window_length - 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "F0 search floor needs a lag longer than the analysis window");
  }
}

PitchContour ExtractF0(const Waveform& wave, const F0Config& cfg) {
  cfg.Validate();
  if (wave.sample_rate != cfg.sample_rate) {
    throw Error(ErrorCode::kInvalidArgument,
                "waveform rate differs from F0 configuration");
  }
  if (wave.samples.empty()) {
    throw Error(ErrorCode::kSignalTooShort, "empty waveform");
  }
  const int win = cfg.window_length;
  const int tau_min = std::max(
      2, static_cast<int>(std::floor(cfg.sample_rate / cfg.fmax_search)));
  const int tau_max =
      static_cast<int>(std::ceil(cfg.sample_rate / cfg.fmin_search));
  const int span = win - tau_max;  // integration length
  const std::vector<double> padded = CenterPad(wave.samples, win / 2);
  const int frames = NumFrames(static_cast<int64_t>(wave.samples.size()), win,
                               cfg.hop_length);

  PitchContour contour;
  contour.hop_length = cfg.hop_length;
  contour.sample_rate = cfg.sample_rate;
  contour.f0.assign(static_cast<size_t>(frames), 0.0);
  contour.voiced.assign(static_cast<size_t>(frames), false);

  std::vector<double> diff(static_cast<size_t>(tau_max + 2), 0.0);
  std::vector<double> cmnd(static_cast<size_t>(tau_max + 2), 1.0);
  for (int t = 0; t < frames; ++t) {
    const double* x = padded.data() + static_cast<size_t>(t) * cfg.hop_length;
    double energy = 0.0;
    for (int i = 0; i < win; ++i) energy += x[i] * x[i];
    if (std::sqrt(energy / win) < cfg.silence_rms) continue;

    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      double acc = 0.0;
      for (int j = 0; j < span - 1; ++j) {
        const double d = x[j] - x[j + tau];
        acc += d * d;
      }
      diff[static_cast<size_t>(tau)] = acc;
    }
    double running = 0.0;
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      running += diff[static_cast<size_t>(tau)];
      cmnd[static_cast<size_t>(tau)] =
          running > 0.0 ? diff[static_cast<size_t>(tau)] * tau / running : 1.0;
    }

    int best = -1;
    for (int tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[static_cast<size_t>(tau)] < cfg.voicing_threshold) {
        while (tau + 1 <= tau_max &&
               cmnd[static_cast<size_t>(tau + 1)] < cmnd[static_cast<size_t>(tau)]) {
          ++tau;
        }
        best = tau;
        break;
      }
    }
    if (best < 0) continue;

    double refined = best;
    const double a = cmnd[static_cast<size_t>(best - 1)];
    const double b = cmnd[static_cast<size_t>(best)];
    const double c = cmnd[static_cast<size_t>(best + 1)];
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) > 1e-12) {
      refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    }
    const double f0 = std::clamp(cfg.sample_rate / refined, cfg.fmin_search,
                                 cfg.fmax_search);
    contour.f0[static_cast<size_t>(t)] = f0;
    contour.voiced[static_cast<size_t>(t)] = true;
  }
  return contour;
}

PitchContour ScalePitch(const PitchContour& contour, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::kInvalidArgument, "pitch scale factor must be > 0");
  }
  PitchContour out = contour;
  for (size_t t = 0; t < out.f0.size(); ++t) {
    if (out.voiced[t]) out.f0[t] *= factor;
  }
  return out;
}

PitchContour FitVocalRange(const PitchContour& contour,
                           const VocalRangeStats& source,
                           const VocalRangeStats& target, bool match_std) {
  if (!target.valid()) {
    throw Error(ErrorCode::kDegenerateStats,
                "target vocal range has no voiced frames");
  }
  double ratio = 1.0;
  if (match_std) {
    if (!(source.log_f0_std > 0.0)) {
      throw Error(ErrorCode::kDegenerateStats,
                  "source log-F0 std is zero; disable std matching");
    }
    ratio = target.log_f0_std / source.log_f0_std;
  }
  PitchContour out = contour;
  for (size_t t = 0; t < out.f0.size(); ++t) {
    if (!out.voiced[t]) continue;
    const double log_f0 = std::log(out.f0[t]);
    out.f0[t] =
        std::exp((log_f0 - source.log_f0_mean) * ratio + target.log_f0_mean);
  }
  return out;
}

VocalRangeStats ComputeVocalRangeStats(const PitchContour& contour) {
  VocalRangeStats stats;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (size_t t = 0; t < contour.f0.size(); ++t) {
    if (!contour.voiced[t]) continue;
    const double v = std::log(contour.f0[t]);
    sum += v;
    sum_sq += v * v;
    ++stats.n_voiced_frames;
  }
  if (stats.n_voiced_frames == 0) return stats;
  const double n = static_cast<double>(stats.n_voiced_frames);
  stats.log_f0_mean = sum / n;
  stats.log_f0_std =
      std::sqrt(std::max(0.0, sum_sq / n - stats.log_f0_mean * stats.log_f0_mean));
  return stats;
}

double NormalizeF0(double f0_hz, bool voiced, double ref_hz) {
  return voiced ? std::log(f0_hz / ref_hz) : 0.0;
}

void WriteContourCsv(std::ostream& out, const PitchContour& contour) {
  out << "frame,f0_hz,voiced\n";
  out << std::setprecision(17);
  for (size_t t = 0; t < contour.f0.size(); ++t) {
    out << t << ',' << contour.f0[t] << ',' << (contour.voiced[t] ? 1 : 0)
        << '\n';
  }
}

void WriteContourCsv(const std::filesystem::path& path,
                     const PitchContour& contour) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  WriteContourCsv(out, contour);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

PitchContour ReadContourCsv(std::istream& in, int hop_length,
                            int sample_rate) {
  PitchContour contour;
  contour.hop_length = hop_length;
  contour.sample_rate = sample_rate;
  std::string line;
  if (!std::getline(in, line) || line != "frame,f0_hz,voiced") {
    throw Error(ErrorCode::kMalformedInput, "missing contour CSV header");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string frame, f0, voiced;
    if (!std::getline(row, frame, ',') || !std::getline(row, f0, ',') ||
        !std::getline(row, voiced)) {
      throw Error(ErrorCode::kMalformedInput,
                  "bad contour row at line " + std::to_string(line_no));
    }
    try {
      const double hz = std::stod(f0);
      const bool v = voiced == "1";
      if ((voiced != "0" && !v) || (v != (hz > 0.0)) ||
          std::stoul(frame) != contour.f0.size()) {
        throw Error(ErrorCode::kMalformedInput, "");
      }
      contour.f0.push_back(hz);
      contour.voiced.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedInput,
                  "bad contour row at line " + std::to_string(line_no));
    }
  }
  return contour;
}

PitchContour ReadContourCsv(const std::filesystem::path& path, int hop_length,
                            int sample_rate) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "no such file: " + path.string());
  return ReadContourCsv(in, hop_length, sample_rate);
}

double MedianVoicedF0(const PitchContour& contour) {
  std::vector<double> values;
  for (size_t t = 0; t < contour.f0.size(); ++t) {
    if (contour.voiced[t]) values.push_back(contour.f0[t]);
  }
  if (values.empty()) return 0.0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid),
                   values.end());
  double median = values[mid];
  if (values.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(values.begin(),
                                               values.begin() + static_cast<long>(mid)));
  }
  return median;
}

}  // namespace prosodykit
