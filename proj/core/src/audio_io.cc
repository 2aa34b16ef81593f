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

#include "prosodykit/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <string>

#include "prosodykit/error.h"

namespace prosodykit {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t ReadU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string* out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xFF));
  out->push_back(static_cast<char>((v >> 8) & 0xFF));
}

double DecodeSample(const unsigned char* p, uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::memcpy(&f, p, 4);
      return f;
    }
    double d;
    std::memcpy(&d, p, 8);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<int16_t>(ReadU16(p)) / 32768.0;
    case 24: {
      int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v |= ~0xFFFFFF;
      return v / 8388608.0;
    }
    default:
      return static_cast<int32_t>(ReadU32(p)) / 2147483648.0;
  }
}

}  // namespace

std::vector<double> Resample(std::span<const double> input, int from_rate,
                             int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample rates must be positive");
  }
  if (from_rate == to_rate) return {input.begin(), input.end()};
  const int64_t n_in = static_cast<int64_t>(input.size());
  const int64_t n_out = (n_in * to_rate + from_rate - 1) / from_rate;
  const double ratio = static_cast<double>(to_rate) / from_rate;
  const double cutoff = std::min(1.0, ratio);
  constexpr int kZeroCrossings = 32;
  const double half_width = kZeroCrossings / cutoff;
  std::vector<double> out(static_cast<size_t>(n_out), 0.0);
  for (int64_t i = 0; i < n_out; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const int64_t lo = static_cast<int64_t>(std::ceil(center - half_width));
    const int64_t hi = static_cast<int64_t>(std::floor(center + half_width));
    double acc = 0.0;
    for (int64_t j = std::max<int64_t>(lo, 0); j <= std::min(hi, n_in - 1); ++j) {
      const double x = (static_cast<double>(j) - center) * cutoff;
      const double sinc =
          x == 0.0 ? 1.0
                   : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      // Hann taper over the kernel support.
      const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * x / kZeroCrossings);
      acc += input[static_cast<size_t>(j)] * sinc * w;
    }
    out[static_cast<size_t>(i)] = acc * cutoff;
  }
  return out;
}

Waveform LoadWaveform(const std::filesystem::path& path, int target_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!std::filesystem::is_regular_file(path) || !in) {
    throw Error(ErrorCode::kMissingFile, "no such audio file: " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "not a RIFF/WAVE file: " + path.string());
  }
  uint16_t format = 0;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  const unsigned char* data = nullptr;
  size_t data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    const size_t avail = std::min<size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0 && avail >= 16) {
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = static_cast<int>(ReadU32(chunk + 12));
      bits = ReadU16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) {
        format = ReadU16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  const bool int_ok = format == kFormatPcm &&
                      (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == kFormatFloat && (bits == 32 || bits == 64);
  if (!(int_ok || float_ok) || channels <= 0 || rate <= 0 || data == nullptr) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "unsupported WAV encoding in " + path.string());
  }
  const size_t frame_bytes = static_cast<size_t>(channels) * (bits / 8);
  const size_t n = data_size / frame_bytes;
  if (n == 0) {
    throw Error(ErrorCode::kEmptyAudio, "no samples in " + path.string());
  }
  std::vector<double> mono(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      acc += DecodeSample(data + i * frame_bytes + c * (bits / 8), format, bits);
    }
    mono[i] = acc / channels;
  }
  Waveform wave;
  wave.sample_rate = target_rate;
  wave.samples = Resample(mono, rate, target_rate);
  double peak = 0.0;
  for (double s : wave.samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kUnsupportedEncoding,
                  "non-finite sample in " + path.string());
    }
    peak = std::max(peak, std::abs(s));
  }
  if (peak > 1.0) {
    for (double& s : wave.samples) s /= peak;
  }
  return wave;
}

void WriteWaveform(const std::filesystem::path& path, const Waveform& wave,
                   WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm ? 16 : 32;
  const uint32_t data_bytes =
      static_cast<uint32_t>(wave.samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, pcm ? kFormatPcm : kFormatFloat);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate) * (bits / 8));
  PutU16(&out, bits / 8);
  PutU16(&out, bits);
  out += "data";
  PutU32(&out, data_bytes);
  for (double s : wave.samples) {
    if (pcm) {
      const long q = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto v = static_cast<int16_t>(std::clamp(q, -32768L, 32767L));
      PutU16(&out, static_cast<uint16_t>(v));
    } else {
      const auto f = static_cast<float>(s);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      PutU32(&out, u);
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file || !file.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
}

}  // namespace prosodykit
