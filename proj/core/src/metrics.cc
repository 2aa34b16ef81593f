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

#include "prosodykit/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "prosodykit/error.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"

namespace prosodykit {
namespace {

void CheckSameLength(const PitchContour& a, const PitchContour& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "contour lengths differ: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
}

double Fraction(int64_t num, int64_t den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

PitchContour Prefix(const PitchContour& c, int n) {
  PitchContour out = c;
  out.f0.resize(static_cast<size_t>(n));
  out.voiced.resize(static_cast<size_t>(n));
  return out;
}

}  // namespace

PitchErrorCounts CountPitchErrors(const PitchContour& ref,
                                  const PitchContour& est, double threshold) {
  CheckSameLength(ref, est);
  if (!(threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "GPE threshold must be > 0");
  }
  PitchErrorCounts counts;
  counts.n_frames = ref.size();
  for (size_t t = 0; t < ref.f0.size(); ++t) {
    const bool rv = ref.voiced[t];
    const bool ev = est.voiced[t];
    if (rv != ev) {
      ++counts.n_voicing_errors;
    } else if (rv) {
      ++counts.n_both_voiced;
      if (std::abs(est.f0[t] - ref.f0[t]) > threshold * ref.f0[t]) {
        ++counts.n_gross_errors;
      }
    }
  }
  return counts;
}

double VoicingDecisionError(const PitchContour& ref, const PitchContour& est) {
  const PitchErrorCounts c = CountPitchErrors(ref, est);
  return Fraction(c.n_voicing_errors, c.n_frames);
}

double GrossPitchError(const PitchContour& ref, const PitchContour& est,
                       double threshold) {
  const PitchErrorCounts c = CountPitchErrors(ref, est, threshold);
  return Fraction(c.n_gross_errors, c.n_both_voiced);
}

double F0FrameError(const PitchContour& ref, const PitchContour& est,
                    double threshold) {
  const PitchErrorCounts c = CountPitchErrors(ref, est, threshold);
  return Fraction(c.n_voicing_errors + c.n_gross_errors, c.n_frames);
}

McepSequence MelCepstrum(const MelSpectrogram& mel, int n_coeffs) {
  const int channels = mel.num_channels();
  if (n_coeffs < 1 || n_coeffs > channels) {
    throw Error(ErrorCode::kInvalidArgument,
                "cepstral order must lie in [1, mel_channels]");
  }
  // basis(n, k) for k = 1..n_coeffs
  Matrix basis(channels, n_coeffs);
  const double scale = std::sqrt(2.0 / channels);
  for (int n = 0; n < channels; ++n) {
    for (int k = 1; k <= n_coeffs; ++k) {
      basis(n, k - 1) =
          scale * std::cos(std::numbers::pi * k * (2 * n + 1) / (2.0 * channels));
    }
  }
  return McepSequence{mel.frames * basis};
}

DtwAlignment AlignDtw(const Matrix& ref, const Matrix& est) {
  const Eigen::Index n = ref.rows();
  const Eigen::Index m = est.rows();
  if (n == 0 || m == 0) {
    throw Error(ErrorCode::kInvalidArgument, "DTW needs non-empty sequences");
  }
  if (ref.cols() != est.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "cepstral dimensions differ");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Two rolling rows of (cost, length).
  std::vector<double> prev_cost(static_cast<size_t>(m), kInf);
  std::vector<int64_t> prev_len(static_cast<size_t>(m), 0);
  std::vector<double> cur_cost(static_cast<size_t>(m));
  std::vector<int64_t> cur_len(static_cast<size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double local = (ref.row(i) - est.row(j)).norm();
      double best = kInf;
      int64_t best_len = 0;
      auto consider = [&](double c, int64_t len) {
        if (c < best || (c == best && len < best_len)) {
          best = c;
          best_len = len;
        }
      };
      if (i == 0 && j == 0) {
        consider(0.0, 0);
      } else {
        if (i > 0) consider(prev_cost[static_cast<size_t>(j)], prev_len[static_cast<size_t>(j)]);
        if (j > 0) consider(cur_cost[static_cast<size_t>(j - 1)], cur_len[static_cast<size_t>(j - 1)]);
        if (i > 0 && j > 0) {
          consider(prev_cost[static_cast<size_t>(j - 1)],
                   prev_len[static_cast<size_t>(j - 1)]);
        }
      }
      cur_cost[static_cast<size_t>(j)] = best + local;
      cur_len[static_cast<size_t>(j)] = best_len + 1;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_len, cur_len);
  }
  return {prev_cost.back(), prev_len.back()};
}

double MelCepstralDistortion(const McepSequence& ref, const McepSequence& est) {
  if (ref.coefficients.rows() == 0 || est.coefficients.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty cepstral sequence");
  }
  if (ref.coefficients.cols() != est.coefficients.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "cepstral dimensions differ");
  }
  const DtwAlignment path = AlignDtw(ref.coefficients, est.coefficients);
  const double k = 10.0 / std::numbers::ln10 * std::numbers::sqrt2;
  return k * path.total_cost / static_cast<double>(path.path_length);
}

MetricReport EvaluateFeatures(const PitchContour& ref_f0,
                              const MelSpectrogram& ref_mel,
                              const PitchContour& est_f0,
                              const MelSpectrogram& est_mel,
                              const EvalConfig& cfg) {
  const int common = std::min(ref_f0.size(), est_f0.size());
  const PitchErrorCounts counts = CountPitchErrors(
      Prefix(ref_f0, common), Prefix(est_f0, common), cfg.gpe_threshold);
  MetricReport report;
  report.n_frames = counts.n_frames;
  report.n_both_voiced = counts.n_both_voiced;
  report.n_voicing_errors = counts.n_voicing_errors;
  report.n_gross_errors = counts.n_gross_errors;
  report.vde = Fraction(counts.n_voicing_errors, counts.n_frames);
  report.gpe = Fraction(counts.n_gross_errors, counts.n_both_voiced);
  report.ffe = Fraction(counts.n_voicing_errors + counts.n_gross_errors,
                        counts.n_frames);
  report.mcd_db = MelCepstralDistortion(MelCepstrum(ref_mel, cfg.n_cepstra),
                                        MelCepstrum(est_mel, cfg.n_cepstra));
  return report;
}

MetricReport EvaluatePair(const Waveform& ref, const Waveform& est,
                          const EvalConfig& cfg) {
  return EvaluateFeatures(ExtractF0(ref, cfg.f0),
                          ComputeMelSpectrogram(ref, cfg.stft),
                          ExtractF0(est, cfg.f0),
                          ComputeMelSpectrogram(est, cfg.stft), cfg);
}

void WriteReportCsv(std::ostream& out, const std::vector<NamedReport>& rows) {
  out << "utt_id,gpe,vde,ffe,mcd_db,n_frames,n_both_voiced\n";
  out << std::setprecision(10);
  for (const auto& row : rows) {
    const MetricReport& r = row.report;
    out << row.utt_id << ',' << r.gpe << ',' << r.vde << ',' << r.ffe << ','
        << r.mcd_db << ',' << r.n_frames << ',' << r.n_both_voiced << '\n';
  }
}

}  // namespace prosodykit
