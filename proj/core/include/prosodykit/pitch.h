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

#ifndef PROSODYKIT_PITCH_H_
#define PROSODYKIT_PITCH_H_

#include <filesystem>
#include <iosfwd>

#include "prosodykit/signal_types.h"

namespace prosodykit {

// Cumulative-mean-normalized difference (YIN) pitch tracker with parabolic
// refinement. Frames are centered exactly like ComputeMelSpectrogram, so the
// contour length equals the mel frame count for the same window and hop.
PitchContour ExtractF0(const Waveform& wave, const F0Config& cfg);

// Multiplies voiced frames by `factor`; unvoiced frames stay at 0.
PitchContour ScalePitch(const PitchContour& contour, double factor);

// Log-domain mean (and optionally std) matching of voiced frames:
//   log f0' = (log f0 - src.mean) * (tgt.std / src.std) + tgt.mean
// With match_std == false the ratio is fixed to 1.
PitchContour FitVocalRange(const PitchContour& contour,
                           const VocalRangeStats& source,
                           const VocalRangeStats& target,
                           bool match_std = true);

// Mean/std of log f0 over voiced frames (population std).
VocalRangeStats ComputeVocalRangeStats(const PitchContour& contour);

// Normalized model input: log(f0 / ref_hz) on voiced frames, 0 elsewhere.
double NormalizeF0(double f0_hz, bool voiced, double ref_hz = 200.0);

// CSV with header `frame,f0_hz,voiced`. Values are written with 17
// significant digits so that reading back is exact.
void WriteContourCsv(std::ostream& out, const PitchContour& contour);
void WriteContourCsv(const std::filesystem::path& path,
                     const PitchContour& contour);
PitchContour ReadContourCsv(std::istream& in, int hop_length = 256,
                            int sample_rate = kDefaultSampleRate);
PitchContour ReadContourCsv(const std::filesystem::path& path,
                            int hop_length = 256,
                            int sample_rate = kDefaultSampleRate);

double MedianVoicedF0(const PitchContour& contour);

}  // namespace prosodykit

#endif  // PROSODYKIT_PITCH_H_
