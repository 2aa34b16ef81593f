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

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "prosodykit/metrics.h"
#include "prosodykit/model.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"

namespace prosodykit {
namespace {

Waveform Chirp(double seconds) {
  Waveform w;
  const int n = static_cast<int>(seconds * w.sample_rate);
  w.samples.resize(static_cast<size_t>(n));
  double phase = 0.0;
  for (int i = 0; i < n; ++i) {
    const double hz = 120.0 + 80.0 * i / n;
    phase += 2.0 * std::numbers::pi * hz / w.sample_rate;
    w.samples[static_cast<size_t>(i)] = 0.4 * std::sin(phase) + 0.1 * std::sin(2 * phase);
  }
  return w;
}

void BM_MelSpectrogram(benchmark::State& state) {
  const Waveform w = Chirp(static_cast<double>(state.range(0)));
  const StftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ComputeMelSpectrogram(w, cfg));
}
BENCHMARK(BM_MelSpectrogram)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ExtractF0(benchmark::State& state) {
  const Waveform w = Chirp(static_cast<double>(state.range(0)));
  const F0Config cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ExtractF0(w, cfg));
}
BENCHMARK(BM_ExtractF0)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Dtw(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const auto t = static_cast<Eigen::Index>(state.range(0));
  const Matrix a = Matrix::NullaryExpr(t, 24, [&] { return n(rng); });
  const Matrix b = Matrix::NullaryExpr(t + t / 10, 24, [&] { return n(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(AlignDtw(a, b));
}
BENCHMARK(BM_Dtw)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_HardDecoderStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.vocab_size = 12;
  cfg.n_speakers = 4;
  const ProsodyModel model(cfg);
  const int frames = 50;
  PhonemeSequence text{{2, 3, 4, 5, 6, 7, kEosId}};
  PitchContour f0;
  for (int t = 0; t < frames; ++t) {
    f0.f0.push_back(150.0 + t);
    f0.voiced.push_back(true);
  }
  const Matrix ref = Matrix::Constant(frames, cfg.mel_channels, -4.0);
  for (auto _ : state) {
    ad::Tape tape(false);
    DecodeRequest req;
    req.text = &text;
    req.f0 = &f0;
    benchmark::DoNotOptimize(model.Forward(tape, req, {&ref, &f0}));
  }
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_HardDecoderStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace prosodykit

BENCHMARK_MAIN();
