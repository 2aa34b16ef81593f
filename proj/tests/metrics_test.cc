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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "prosodykit/error.h"
#include "prosodykit/metrics.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"
#include "test_util.h"

namespace prosodykit {
namespace {

using testing::MakeContour;
using testing::RandomContour;
using testing::Tone;

PitchContour FromFlags(const std::vector<int>& flags, double hz = 150.0) {
  std::vector<double> f0;
  for (int v : flags) f0.push_back(v ? hz : 0.0);
  return MakeContour(f0);
}

TEST(VdeTest, Examples) {
  const PitchContour a = FromFlags({1, 1, 0, 0});
  EXPECT_EQ(VoicingDecisionError(a, a), 0.0);
  EXPECT_EQ(VoicingDecisionError(a, FromFlags({1, 0, 0, 1})), 0.5);
  EXPECT_EQ(VoicingDecisionError(a, FromFlags({0, 0, 1, 1})), 1.0);
  EXPECT_THROW(VoicingDecisionError(a, FromFlags({1, 1, 0})), Error);
}

TEST(GpeTest, Examples) {
  const PitchContour ref = MakeContour({100.0});
  EXPECT_EQ(GrossPitchError(ref, ref), 0.0);
  EXPECT_EQ(GrossPitchError(ref, MakeContour({125.0}), 0.2), 1.0);
  EXPECT_EQ(GrossPitchError(ref, MakeContour({115.0}), 0.2), 0.0);
  EXPECT_EQ(GrossPitchError(MakeContour({0.0}), MakeContour({0.0})), 0.0);
}

TEST(FfeTest, Examples) {
  const PitchContour ref = MakeContour({100, 100, 100, 0});
  // frame 0 fine, frame 1 gross, frame 2 voicing mismatch, frame 3 agree.
  const PitchContour est = MakeContour({105, 150, 0, 0});
  EXPECT_EQ(F0FrameError(ref, ref), 0.0);
  EXPECT_EQ(F0FrameError(ref, est), 0.5);
  const PitchContour silent = FromFlags({0, 0, 0});
  EXPECT_EQ(F0FrameError(silent, silent), 0.0);
}

TEST(PitchMetricProperties, RandomPairs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> thr(0.01, 0.8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const PitchContour a = RandomContour(rng, n);
    const PitchContour b = RandomContour(rng, n);
    const double t1 = thr(rng);
    const double t2 = t1 + thr(rng);
    EXPECT_EQ(VoicingDecisionError(a, b), VoicingDecisionError(b, a));
    EXPECT_GE(GrossPitchError(a, b, t1), GrossPitchError(a, b, t2));
    const PitchErrorCounts c = CountPitchErrors(a, b);
    EXPECT_EQ(c.n_voicing_errors + c.n_gross_errors,
              static_cast<int64_t>(std::lround(F0FrameError(a, b) * n)));
    for (double v : {VoicingDecisionError(a, b), GrossPitchError(a, b),
                     F0FrameError(a, b)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(GrossPitchError(a, b, t1), oracle::BruteGpe(a, b, t1), 1e-12);
  }
}

TEST(MelCepstrumTest, ConstantFrameHasNoCepstrum) {
  MelSpectrogram mel;
  mel.frames = Matrix::Constant(3, 20, -2.5);
  const McepSequence c = MelCepstrum(mel, 13);
  ASSERT_EQ(c.coefficients.cols(), 13);
  EXPECT_LT(c.coefficients.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MelCepstrumTest, MatchesDirectDct) {
  MelSpectrogram mel;
  mel.frames.resize(2, 4);
  mel.frames << 1, 2, 3, 4, 1, 2, 3, 4;
  const McepSequence c = MelCepstrum(mel, 3);
  for (int k = 1; k <= 3; ++k) {
    EXPECT_NEAR(c.coefficients(0, k - 1), oracle::Dct2({1, 2, 3, 4}, k), 1e-12);
  }
  EXPECT_EQ(c.coefficients.row(0), c.coefficients.row(1));
  EXPECT_THROW(MelCepstrum(mel, 0), Error);
  EXPECT_THROW(MelCepstrum(mel, 5), Error);
}

TEST(McdTest, ClosedForms) {
  McepSequence a{Matrix::Constant(1, 1, 0.0)};
  McepSequence b{Matrix::Constant(1, 1, 0.3)};
  EXPECT_NEAR(MelCepstralDistortion(a, b), 10.0 / std::log(10.0) * std::sqrt(2.0) * 0.3,
              1e-12);
  EXPECT_NEAR(MelCepstralDistortion(a, b), 1.8426, 1e-4);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix x(7, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  EXPECT_EQ(MelCepstralDistortion({x}, {x}), 0.0);
  EXPECT_THROW(MelCepstralDistortion({Matrix(0, 5)}, {x}), Error);
  EXPECT_THROW(MelCepstralDistortion({Matrix::Zero(2, 4)}, {x}), Error);
}

TEST(McdTest, MatchesBruteForceDtw) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> len(1, 16);
  std::uniform_int_distribution<int> dim(1, 6);
  std::normal_distribution<double> g(0.0, 0.5);
  auto random = [&](int n, int d) {
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
  };
  {
    const Matrix a = random(3, 4), b = random(5, 4);
    EXPECT_NEAR(MelCepstralDistortion({a}, {b}),
                oracle::McdFromPath(oracle::DtwTopDown(a, b)), 1e-9);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int d = dim(rng);
    const Matrix a = random(len(rng), d), b = random(len(rng), d);
    EXPECT_NEAR(MelCepstralDistortion({a}, {b}),
                oracle::McdFromPath(oracle::DtwTopDown(a, b)), 1e-9);
  }
  std::uniform_int_distribution<int> tiny(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random(tiny(rng), 3), b = random(tiny(rng), 3);
    const auto exhaustive = oracle::DtwExhaustive(a, b);
    const DtwAlignment fast = AlignDtw(a, b);
    EXPECT_NEAR(fast.total_cost, exhaustive.first, 1e-9);
    EXPECT_EQ(fast.path_length, exhaustive.second);
  }
}

TEST(EvaluatePairTest, IdenticalIsZero) {
  EvalConfig cfg;
  const Waveform w = Tone(180.0, 0.5);
  const MetricReport r = EvaluatePair(w, w, cfg);
  EXPECT_EQ(r.gpe, 0.0);
  EXPECT_EQ(r.vde, 0.0);
  EXPECT_EQ(r.ffe, 0.0);
  EXPECT_EQ(r.mcd_db, 0.0);
  EXPECT_GT(r.n_both_voiced, 0);
}

TEST(EvaluatePairTest, OneAndAHalfTimesPitchIsAllGross) {
  EvalConfig cfg;
  const MetricReport r =
      EvaluatePair(Tone(150.0, 0.8), Tone(225.0, 0.8), cfg);
  EXPECT_EQ(r.gpe, 1.0);
  EXPECT_GT(r.n_both_voiced, 0);
  EXPECT_GT(r.mcd_db, 0.0);
  EXPECT_EQ(r.n_voicing_errors + r.n_gross_errors,
            static_cast<int64_t>(std::lround(r.ffe * r.n_frames)));
  EXPECT_DOUBLE_EQ(r.ffe * r.n_frames, r.vde * r.n_frames + r.gpe * r.n_both_voiced);
}

TEST(ReportCsvTest, Header) {
  std::ostringstream out;
  WriteReportCsv(out, {{"u1", MetricReport{}}});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "utt_id,gpe,vde,ffe,mcd_db,n_frames,n_both_voiced");
}

}  // namespace
}  // namespace prosodykit
