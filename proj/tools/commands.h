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

#ifndef PROSODYKIT_TOOLS_COMMANDS_H_
#define PROSODYKIT_TOOLS_COMMANDS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "prosodykit/corpus.h"
#include "run_config.h"

namespace prosodykit::cli {

struct RunContext {
  std::string command;
  std::string command_line;
  std::filesystem::path out;  // empty selects runs/<command>-<timestamp>
  bool force = false;
};

// Creates the run directory and writes config.txt into it. An existing
// non-empty directory is rejected unless `force` is set or `reuse` allows
// it.
std::filesystem::path OpenRunDirectory(const RunContext& ctx, RunConfig& cfg,
                                       const std::vector<std::string>& extra_lines = {},
                                       bool reuse = false);

// Parses a synthetic-corpus description (`key = value`).
SyntheticCorpusSpec ReadSyntheticSpec(const std::filesystem::path& path);

int RunPrepare(const RunContext& ctx, RunConfig& cfg, bool fail_fast);
int RunTrain(const RunContext& ctx, RunConfig& cfg);
int RunTransfer(const RunContext& ctx, RunConfig& cfg);
int RunEval(const RunContext& ctx, RunConfig& cfg);
int RunSweep(const RunContext& ctx, RunConfig& cfg);
int RunPlot(const RunContext& ctx, RunConfig& cfg, const std::vector<std::string>& series);

}  // namespace prosodykit::cli

#endif  // PROSODYKIT_TOOLS_COMMANDS_H_
