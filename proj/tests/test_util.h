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

#ifndef PROSODYKIT_TESTS_TEST_UTIL_H_
#define PROSODYKIT_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prosodykit/signal_types.h"

namespace prosodykit::testing {

inline Waveform Tone(double hz, double seconds, double amplitude = 0.5,
                     int rate = kDefaultSampleRate) {
  Waveform w;
  w.sample_rate = rate;
  const int n = static_cast<int>(std::lround(seconds * rate));
  w.samples.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    w.samples[static_cast<size_t>(i)] =
        amplitude * std::sin(2.0 * std::numbers::pi * hz * i / rate);
  }
  return w;
}

inline Waveform Silence(double seconds, int rate = kDefaultSampleRate) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(static_cast<size_t>(std::lround(seconds * rate)), 0.0);
  return w;
}

inline PitchContour MakeContour(const std::vector<double>& f0) {
  PitchContour c;
  c.f0 = f0;
  for (double v : f0) c.voiced.push_back(v > 0.0);
  return c;
}

inline PitchContour RandomContour(std::mt19937_64& rng, int length,
                                  double p_voiced = 0.6) {
  std::bernoulli_distribution voiced(p_voiced);
  std::uniform_real_distribution<double> hz(60.0, 400.0);
  PitchContour c;
  for (int t = 0; t < length; ++t) {
    const bool v = voiced(rng);
    c.voiced.push_back(v);
    c.f0.push_back(v ? hz(rng) : 0.0);
  }
  return c;
}

inline Eigen::MatrixXd RandomMatrix(std::mt19937_64& rng, Eigen::Index rows,
                                    Eigen::Index cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("prosodykit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace prosodykit::testing

#endif  // PROSODYKIT_TESTS_TEST_UTIL_H_
