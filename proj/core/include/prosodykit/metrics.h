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

#ifndef PROSODYKIT_METRICS_H_
#define PROSODYKIT_METRICS_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "prosodykit/signal_types.h"

namespace prosodykit {

inline constexpr double kGrossPitchThreshold = 0.2;
inline constexpr int kDefaultCepstralOrder = 13;

// Raw frame counts behind the F0 metrics. The fractions are derived from
// these so that ffe * n_frames == vde * n_frames + gpe * n_both_voiced holds
// in integers.
struct PitchErrorCounts {
  int64_t n_frames = 0;
  int64_t n_both_voiced = 0;
  int64_t n_voicing_errors = 0;
  int64_t n_gross_errors = 0;
};

PitchErrorCounts CountPitchErrors(const PitchContour& ref,
                                  const PitchContour& est,
                                  double threshold = kGrossPitchThreshold);

double VoicingDecisionError(const PitchContour& ref, const PitchContour& est);
// Returns 0 when no frame is voiced in both contours.
double GrossPitchError(const PitchContour& ref, const PitchContour& est,
                       double threshold = kGrossPitchThreshold);
double F0FrameError(const PitchContour& ref, const PitchContour& est,
                    double threshold = kGrossPitchThreshold);

struct McepSequence {
  Matrix coefficients;  // [T x D], 0th coefficient excluded
};

// Orthonormal DCT-II of each log-mel frame, keeping coefficients 1..n_coeffs.
McepSequence MelCepstrum(const MelSpectrogram& mel,
                         int n_coeffs = kDefaultCepstralOrder);

struct DtwAlignment {
  double total_cost = 0.0;  // sum of Euclidean frame distances on the path
  int64_t path_length = 0;
};

// Unconstrained DTW, steps (1,0), (0,1), (1,1). Ties in accumulated cost go
// to the shorter path.
DtwAlignment AlignDtw(const Matrix& ref, const Matrix& est);

// Mean over the DTW path of (10 / ln 10) * sqrt(2 * sum_d (ref_d - est_d)^2).
double MelCepstralDistortion(const McepSequence& ref, const McepSequence& est);

struct MetricReport {
  double gpe = 0.0;
  double vde = 0.0;
  double ffe = 0.0;
  double mcd_db = 0.0;
  int64_t n_frames = 0;
  int64_t n_both_voiced = 0;
  int64_t n_voicing_errors = 0;
  int64_t n_gross_errors = 0;
};

struct EvalConfig {
  StftConfig stft;
  F0Config f0;
  int n_cepstra = kDefaultCepstralOrder;
  double gpe_threshold = kGrossPitchThreshold;
};

// Builds a report from two contours and two mel spectrograms. Contours of
// unequal length are compared over their common prefix.
MetricReport EvaluateFeatures(const PitchContour& ref_f0,
                              const MelSpectrogram& ref_mel,
                              const PitchContour& est_f0,
                              const MelSpectrogram& est_mel,
                              const EvalConfig& cfg);

MetricReport EvaluatePair(const Waveform& ref, const Waveform& est,
                          const EvalConfig& cfg);

struct NamedReport {
  std::string utt_id;
  MetricReport report;
};

// CSV `utt_id,gpe,vde,ffe,mcd_db,n_frames,n_both_voiced`.
void WriteReportCsv(std::ostream& out, const std::vector<NamedReport>& rows);

}  // namespace prosodykit

#endif  // PROSODYKIT_METRICS_H_
