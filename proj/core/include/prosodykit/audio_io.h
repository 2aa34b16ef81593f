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

#ifndef PROSODYKIT_AUDIO_IO_H_
#define PROSODYKIT_AUDIO_IO_H_

#include <filesystem>
#include <span>
#include <vector>

#include "prosodykit/signal_types.h"

namespace prosodykit {

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a PCM WAV file (8/16/24/32-bit integer or 32/64-bit float), mixes it
// down to mono, resamples to target_rate and scales it down so that
// |sample| <= 1. Errors: kMissingFile, kUnsupportedEncoding, kEmptyAudio.
Waveform LoadWaveform(const std::filesystem::path& path,
                      int target_rate = kDefaultSampleRate);

// Writes a mono WAV. Samples are clipped to [-1, 1] for kPcm16.
void WriteWaveform(const std::filesystem::path& path, const Waveform& wave,
                   WavEncoding encoding = WavEncoding::kPcm16);

// Band-limited (windowed-sinc) sample-rate conversion. The output holds
// ceil(n * to_rate / from_rate) samples.
std::vector<double> Resample(std::span<const double> input, int from_rate,
                             int to_rate);

}  // namespace prosodykit

#endif  // PROSODYKIT_AUDIO_IO_H_
