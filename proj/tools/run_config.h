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

#ifndef PROSODYKIT_TOOLS_RUN_CONFIG_H_
#define PROSODYKIT_TOOLS_RUN_CONFIG_H_

#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prosodykit/metrics.h"
#include "prosodykit/model.h"
#include "prosodykit/synthesis.h"
#include "prosodykit/training.h"

namespace prosodykit::cli {

// Bad flags, unknown keys, unparsable values. Exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  StftConfig stft;
  F0Config f0;
  ModelConfig model;
  TrainConfig train;
  SynthesisOptions synthesis;
  EvalConfig eval;
  std::vector<double> sweep_lambdas{0.0, 0.02, 0.2, 2.0};
  std::vector<uint64_t> sweep_seeds{1};
  std::map<std::string, std::string> paths;  // data.*, transfer.*, eval.*_dir
  std::string text;
  std::string speaker;
  double pitch_scale = 0.0;  // 0 = no scaling
  std::string fit_speaker;
};

// Flat `key = value` configuration over Settings. Every key has a default;
// unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();
  RunConfig(const RunConfig&) = delete;
  RunConfig& operator=(const RunConfig&) = delete;

  void Set(const std::string& key, const std::string& value);
  std::string Get(const std::string& key) const;
  bool Has(const std::string& key) const { return fields_.count(key) != 0; }
  std::vector<std::string> Keys() const;

  // `#` starts a comment; blank lines are ignored.
  void LoadFile(const std::filesystem::path& path);
  void LoadText(const std::string& text, const std::string& origin);
  void Write(std::ostream& out) const;

  // Settings with derived fields synchronized (f0 framing follows stft,
  // lambda and seed are shared by model and trainer).
  const Settings& settings();

 private:
  struct Field {
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  void Bind(const std::string& key, int& v);
  void Bind(const std::string& key, uint64_t& v);
  void Bind(const std::string& key, double& v);
  void Bind(const std::string& key, bool& v);
  void Bind(const std::string& key, std::string& v);
  void BindPath(const std::string& key);

  Settings s_;
  std::map<std::string, Field> fields_;
};

// Shortest round-trip text for a double.
std::string FormatDouble(double v);

// Parses `key = value` lines into pairs in file order.
std::vector<std::pair<std::string, std::string>> ParseKeyValues(
    const std::string& text, const std::string& origin);

}  // namespace prosodykit::cli

#endif  // PROSODYKIT_TOOLS_RUN_CONFIG_H_
