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

#ifndef PROSODYKIT_SWEEP_H_
#define PROSODYKIT_SWEEP_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "prosodykit/metrics.h"
#include "prosodykit/synthesis.h"
#include "prosodykit/training.h"

namespace prosodykit {

struct SweepConfig {
  std::vector<double> lambdas{0.0, 0.02, 0.2, 2.0};
  // Each lambda is trained once per seed; metrics are averaged.
  std::vector<uint64_t> seeds{1};
  ModelConfig model;
  TrainConfig train;
  SynthesisOptions synthesis;
  EvalConfig eval;
};

struct SweepRow {
  double lambda = 0.0;
  double gpe = 0.0;
  double vde = 0.0;
  double ffe = 0.0;
  double mcd_db = 0.0;
  double probe_accuracy = 0.0;
  bool complete = true;
  std::string note;  // failure reason for incomplete rows
};

// Self-transfer of every example through the model: mean metrics of the
// rendered output against the example's own features.
MetricReport EvaluateSelfTransfer(const ProsodyModel& model,
                                  const std::vector<TrainingExample>& examples,
                                  const SynthesisOptions& synthesis,
                                  const EvalConfig& eval);

// Trains one model per (lambda, seed), evaluates self-transfer on
// `eval_set` and the leave-one-out speaker probe on `train_set`. A run that
// fails numerically yields an incomplete row and the sweep continues. When
// `report` is set the CSV is rewritten after every lambda. Rows are sorted
// by lambda.
std::vector<SweepRow> LambdaSweep(
    const TrainingSet& train_set, const std::vector<TrainingExample>& eval_set,
    const SweepConfig& cfg,
    const std::optional<std::filesystem::path>& report = std::nullopt,
    const std::function<void(const SweepRow&)>& on_row = {});

// `lambda,gpe,vde,ffe,mcd_db,probe_accuracy`; incomplete rows carry nan and
// are listed in trailing `# incomplete` comment lines.
void WriteSweepReport(std::ostream& out, std::vector<SweepRow> rows);

}  // namespace prosodykit

#endif  // PROSODYKIT_SWEEP_H_
