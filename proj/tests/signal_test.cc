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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "prosodykit/audio_io.h"
#include "prosodykit/error.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"
#include "test_util.h"

namespace prosodykit {
namespace {

using testing::MakeContour;
using testing::Silence;
using testing::TempDir;
using testing::Tone;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kPrecondition;
}

TEST(AudioIoTest, SilenceLoadsAsZeros) {
  TempDir dir("audio");
  WriteWaveform(dir / "s.wav", Silence(1.0));
  const Waveform w = LoadWaveform(dir / "s.wav", 22050);
  ASSERT_EQ(w.samples.size(), 22050u);
  EXPECT_TRUE(std::all_of(w.samples.begin(), w.samples.end(),
                          [](double s) { return s == 0.0; }));
}

TEST(AudioIoTest, DownsampledLengthMatchesImpulseCount) {
  // 44.1 kHz impulse train, one impulse every 2 samples; the resampled
  // length must agree with the number of impulses (= ceil(n / 2)).
  TempDir dir("audio");
  for (int n : {44100, 44101, 1001}) {
    Waveform in;
    in.sample_rate = 44100;
    in.samples.assign(static_cast<size_t>(n), 0.0);
    int impulses = 0;
    for (int i = 0; i < n; i += 2, ++impulses) in.samples[static_cast<size_t>(i)] = 0.5;
    WriteWaveform(dir / "i.wav", in, WavEncoding::kFloat32);
    const Waveform out = LoadWaveform(dir / "i.wav", 22050);
    EXPECT_NEAR(static_cast<double>(out.samples.size()), impulses, 1.0);
    EXPECT_EQ(out.sample_rate, 22050);
  }
}

TEST(AudioIoTest, DistinctErrors) {
  TempDir dir("audio");
  EXPECT_EQ(CodeOf([&] { LoadWaveform(dir / "nope.wav"); }),
            ErrorCode::kMissingFile);
  {
    std::ofstream(dir / "junk.wav") << "definitely not a wav file";
  }
  EXPECT_EQ(CodeOf([&] { LoadWaveform(dir / "junk.wav"); }),
            ErrorCode::kUnsupportedEncoding);
  Waveform empty;
  WriteWaveform(dir / "empty.wav", empty);
  EXPECT_EQ(CodeOf([&] { LoadWaveform(dir / "empty.wav"); }),
            ErrorCode::kEmptyAudio);
}

TEST(AudioIoTest, Pcm16RoundTripWithinQuantization) {
  TempDir dir("audio");
  const Waveform tone = Tone(330.0, 0.2, 0.7);
  WriteWaveform(dir / "t.wav", tone);
  const Waveform back = LoadWaveform(dir / "t.wav");
  ASSERT_EQ(back.samples.size(), tone.samples.size());
  for (size_t i = 0; i < tone.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], tone.samples[i], 1.0 / 32767.0);
  }
}

TEST(MelTest, SilenceIsEnergyFloor) {
  StftConfig cfg;
  const MelSpectrogram mel = ComputeMelSpectrogram(Silence(0.5), cfg);
  EXPECT_TRUE((mel.frames.array() == std::log(cfg.energy_floor)).all());
}

TEST(MelTest, FrameCountForOneSecond) {
  StftConfig cfg;
  Waveform w = Tone(200.0, 1.0);
  ASSERT_EQ(w.samples.size(), 22050u);
  EXPECT_EQ(ComputeMelSpectrogram(w, cfg).num_frames(), 87);
}

TEST(MelTest, ToneArgmaxIsNearestCenter) {
  StftConfig cfg;
  // Independent oracle: centers from the HTK formula, evenly spaced in mel.
  const double mel_hi = 2595.0 * std::log10(1.0 + cfg.fmax / 700.0);
  int nearest = 0;
  double best = 1e300;
  for (int m = 0; m < cfg.mel_channels; ++m) {
    const double mel = mel_hi * (m + 1) / (cfg.mel_channels + 1);
    const double hz = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    if (std::abs(hz - 440.0) < best) {
      best = std::abs(hz - 440.0);
      nearest = m;
    }
  }
  const MelSpectrogram mel = ComputeMelSpectrogram(Tone(440.0, 0.5), cfg);
  for (int t = 2; t < mel.num_frames() - 2; ++t) {
    Eigen::Index arg;
    mel.frames.row(t).maxCoeff(&arg);
    EXPECT_EQ(arg, nearest) << "frame " << t;
  }
}

TEST(MelTest, DeterministicBitwise) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.1);
  Waveform w = Silence(0.3);
  for (double& s : w.samples) s = noise(rng);
  StftConfig cfg;
  const Matrix a = ComputeMelSpectrogram(w, cfg).frames;
  const Matrix b = ComputeMelSpectrogram(w, cfg).frames;
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
}

TEST(MelTest, RejectsEmptyAndBadConfig) {
  StftConfig cfg;
  EXPECT_EQ(CodeOf([&] { ComputeMelSpectrogram(Waveform{}, cfg); }),
            ErrorCode::kSignalTooShort);
  cfg.hop_length = 2048;
  EXPECT_EQ(CodeOf([&] { ComputeMelSpectrogram(Tone(100, 0.1), cfg); }),
            ErrorCode::kInvalidArgument);
}

TEST(F0Test, SilenceIsUnvoiced) {
  const PitchContour c = ExtractF0(Silence(1.0), F0Config{});
  EXPECT_EQ(c.num_voiced(), 0);
  EXPECT_TRUE(std::all_of(c.f0.begin(), c.f0.end(), [](double v) { return v == 0.0; }));
}

TEST(F0Test, Sine220) {
  const PitchContour c = ExtractF0(Tone(220.0, 2.0), F0Config{});
  EXPECT_NEAR(MedianVoicedF0(c), 220.0, 0.02 * 220.0);
  int voiced = 0;
  for (int t = 2; t < c.size() - 2; ++t) voiced += c.voiced[static_cast<size_t>(t)];
  EXPECT_GE(voiced, 0.9 * (c.size() - 4));
}

TEST(F0Test, TwoPlateaus) {
  Waveform w = Tone(110.0, 1.0);
  const Waveform hi = Tone(220.0, 1.0);
  w.samples.insert(w.samples.end(), hi.samples.begin(), hi.samples.end());
  const PitchContour c = ExtractF0(w, F0Config{});
  const int half = c.size() / 2;
  PitchContour first = c, second = c;
  for (int t = 0; t < c.size(); ++t) {
    const bool in_first = t >= 3 && t < half - 3;
    const bool in_second = t >= half + 3 && t < c.size() - 3;
    if (!in_first) first.voiced[static_cast<size_t>(t)] = false;
    if (!in_second) second.voiced[static_cast<size_t>(t)] = false;
  }
  EXPECT_NEAR(MedianVoicedF0(first), 110.0, 2.2);
  EXPECT_NEAR(MedianVoicedF0(second), 220.0, 4.4);
}

class PureToneTest : public ::testing::TestWithParam<double> {};

TEST_P(PureToneTest, MedianWithinTwoPercent) {
  const double f = GetParam();
  const PitchContour c = ExtractF0(Tone(f, 1.0), F0Config{});
  EXPECT_NEAR(MedianVoicedF0(c), f, 0.02 * f);
}

INSTANTIATE_TEST_SUITE_P(Frequencies, PureToneTest,
                         ::testing::Values(80.0, 110.0, 160.0, 220.0, 300.0,
                                           400.0));

TEST(F0Test, FrameAlignmentWithMel) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(600, 30000);
  for (int i = 0; i < 20; ++i) {
    Waveform w = Tone(150.0, 0.0);
    w.samples.assign(static_cast<size_t>(len(rng)), 0.0);
    for (size_t k = 0; k < w.samples.size(); ++k) w.samples[k] = std::sin(0.05 * k);
    EXPECT_EQ(ExtractF0(w, F0Config{}).size(),
              ComputeMelSpectrogram(w, StftConfig{}).num_frames());
  }
}

TEST(F0Test, RejectsRangeAboveNyquist) {
  F0Config cfg;
  cfg.sample_rate = 8000;
  cfg.fmax_search = 5000.0;
  Waveform w = Tone(100.0, 0.2, 0.5, 8000);
  EXPECT_EQ(CodeOf([&] { ExtractF0(w, cfg); }), ErrorCode::kInvalidArgument);
}

TEST(ScalePitchTest, Examples) {
  const PitchContour c = MakeContour({200, 180, 0, 160});
  EXPECT_EQ(ScalePitch(c, 1.0), c);
  const PitchContour half = ScalePitch(c, 0.5);
  EXPECT_EQ(half.f0, (std::vector<double>{100, 90, 0, 80}));
  EXPECT_EQ(half.voiced, c.voiced);
  const PitchContour back = ScalePitch(ScalePitch(c, 2.0), 0.5);
  for (size_t t = 0; t < c.f0.size(); ++t) EXPECT_NEAR(back.f0[t], c.f0[t], 1e-12);
  EXPECT_EQ(CodeOf([&] { ScalePitch(c, 0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { ScalePitch(c, -1.0); }), ErrorCode::kInvalidArgument);
}

TEST(ScalePitchTest, MultiplicativeAndVoicingPreserving) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> factor(0.1, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const PitchContour c = testing::RandomContour(rng, 32);
    const double a = factor(rng);
    const double b = factor(rng);
    const PitchContour ab = ScalePitch(ScalePitch(c, a), b);
    const PitchContour direct = ScalePitch(c, a * b);
    EXPECT_EQ(ab.voiced, c.voiced);
    for (size_t t = 0; t < c.f0.size(); ++t) {
      EXPECT_NEAR(ab.f0[t], direct.f0[t], 1e-9);
      if (!c.voiced[t]) EXPECT_EQ(ab.f0[t], 0.0);
    }
  }
}

TEST(FitVocalRangeTest, Examples) {
  const PitchContour flat = MakeContour({200, 200, 0, 200});
  VocalRangeStats src{std::log(200.0), 1.0, 3};
  VocalRangeStats tgt{std::log(100.0), 1.0, 3};
  const PitchContour out = FitVocalRange(flat, src, tgt);
  EXPECT_NEAR(out.f0[0], 100.0, 1e-9);
  EXPECT_NEAR(out.f0[3], 100.0, 1e-9);
  EXPECT_EQ(out.f0[2], 0.0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const PitchContour c = testing::RandomContour(rng, 40, 0.8);
    const VocalRangeStats s = ComputeVocalRangeStats(c);
    const PitchContour same = FitVocalRange(c, s, s);
    for (size_t t = 0; t < c.f0.size(); ++t) EXPECT_NEAR(same.f0[t], c.f0[t], 1e-9);

    VocalRangeStats target{std::log(123.0), 0.3, 10};
    const VocalRangeStats fitted =
        ComputeVocalRangeStats(FitVocalRange(c, s, target, false));
    EXPECT_NEAR(fitted.log_f0_mean, target.log_f0_mean, 1e-9);
  }
}

TEST(FitVocalRangeTest, DegenerateStats) {
  const PitchContour c = MakeContour({200, 200});
  const VocalRangeStats flat = ComputeVocalRangeStats(c);
  EXPECT_EQ(flat.log_f0_std, 0.0);
  VocalRangeStats tgt{std::log(100.0), 0.2, 5};
  EXPECT_EQ(CodeOf([&] { FitVocalRange(c, flat, tgt, true); }),
            ErrorCode::kDegenerateStats);
  EXPECT_NO_THROW(FitVocalRange(c, flat, tgt, false));
  EXPECT_EQ(CodeOf([&] { FitVocalRange(c, tgt, VocalRangeStats{}, false); }),
            ErrorCode::kDegenerateStats);
}

TEST(ContourCsvTest, RoundTripIsExact) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const PitchContour c = testing::RandomContour(rng, 50);
    std::stringstream ss;
    WriteContourCsv(ss, c);
    EXPECT_EQ(ReadContourCsv(ss), c);
  }
  std::stringstream bad("frame,f0_hz,voiced\n0,100,0\n");
  EXPECT_EQ(CodeOf([&] { ReadContourCsv(bad); }), ErrorCode::kMalformedInput);
}

TEST(ReconstructTest, ToneSurvivesRoundTrip) {
  StftConfig cfg;
  const MelSpectrogram mel = ComputeMelSpectrogram(Tone(440.0, 1.0), cfg);
  const Waveform w = ReconstructWaveform(mel, cfg, 60);
  EXPECT_EQ(ComputeMelSpectrogram(w, cfg).num_frames(), mel.num_frames());
  EXPECT_NEAR(MedianVoicedF0(ExtractF0(w, F0Config{})), 440.0, 0.05 * 440.0);
}

TEST(ReconstructTest, MoreIterationsDoNotHurt) {
  StftConfig cfg;
  Waveform w = Tone(180.0, 0.6);
  const Waveform over = Tone(540.0, 0.6, 0.2);
  for (size_t i = 0; i < w.samples.size(); ++i) w.samples[i] += over.samples[i];
  const MelSpectrogram mel = ComputeMelSpectrogram(w, cfg);
  const double e1 =
      MelReconstructionError(mel, ComputeMelSpectrogram(ReconstructWaveform(mel, cfg, 1), cfg));
  const double e60 =
      MelReconstructionError(mel, ComputeMelSpectrogram(ReconstructWaveform(mel, cfg, 60), cfg));
  EXPECT_LE(e60, e1);
}

TEST(ReconstructTest, FloorMelIsNearSilent) {
  StftConfig cfg;
  const MelSpectrogram mel = ComputeMelSpectrogram(Silence(0.5), cfg);
  const Waveform w = ReconstructWaveform(mel, cfg, 10);
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  EXPECT_LT(peak, 0.05);
}

TEST(ReconstructTest, DeterministicForSeed) {
  StftConfig cfg;
  const MelSpectrogram mel = ComputeMelSpectrogram(Tone(300.0, 0.3), cfg);
  EXPECT_EQ(ReconstructWaveform(mel, cfg, 5, 9).samples,
            ReconstructWaveform(mel, cfg, 5, 9).samples);
  EXPECT_EQ(CodeOf([&] { ReconstructWaveform(mel, cfg, 0); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace prosodykit
