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

#ifndef PROSODYKIT_TRAINING_H_
#define PROSODYKIT_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prosodykit/corpus.h"
#include "prosodykit/model.h"
#include "prosodykit/vocabulary.h"

namespace prosodykit {

struct TrainConfig {
  double initial_lr = 1e-3;
  int decay_steps = 50000;
  int batch_size = 4;
  int max_steps = 1000;
  uint64_t seed = 1;
  double lambda = 0.0;
  // 0 writes only the final checkpoint.
  int checkpoint_interval = 0;
  // Global gradient norm bound; <= 0 disables clipping.
  double clip_norm = 1.0;
  // Soft variant: weight of the diagonal prior on prosody attention (the
  // reference is the target itself during training). Not part of the
  // logged total.
  double guided_attention_weight = 1.0;
  double guided_attention_width = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void Validate() const;
};

// initial_lr * 0.5^floor(step / decay_steps).
double LearningRate(int64_t step, const TrainConfig& cfg);

struct TrainingExample {
  std::string utt_id;
  PhonemeSequence text;
  int speaker = 0;
  Matrix mel;
  PitchContour f0;
};

struct TrainingSet {
  Vocabulary vocab;
  std::vector<std::string> speakers;
  std::vector<TrainingExample> examples;
  std::map<std::string, VocalRangeStats> speaker_stats;

  int SpeakerIndex(const std::string& name) const;
};

// Vocabulary holds the sorted unique manifest symbols after the reserved
// ones; speakers are sorted names.
TrainingSet BuildTrainingSet(const std::vector<UtteranceRecord>& records,
                             const std::filesystem::path& feature_dir,
                             const StftConfig& stft = {});

// Examples encoded with an existing set's vocabulary and speakers.
std::vector<TrainingExample> BuildExamples(const TrainingSet& like,
                                           const std::vector<UtteranceRecord>& records,
                                           const std::filesystem::path& feature_dir,
                                           const StftConfig& stft = {});

struct LossLogRow {
  int64_t step = 0;  // completed updates
  double lr = 0.0;
  double total = 0.0;
  double rmse = 0.0;
  double bce = 0.0;
  double ce = 0.0;
};

void WriteLossLog(std::ostream& out, const std::vector<LossLogRow>& rows);

// Adam over a ParameterSet, keyed by parameter name.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const TrainConfig& cfg) : cfg_(cfg) {}
  void Step(ad::ParameterSet& params, double lr);
  int64_t steps() const { return t_; }

 private:
  TrainConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

double GlobalGradNorm(const ad::ParameterSet& params);
// Rescales gradients to norm max_norm when above it; returns the norm before
// clipping.
double ClipGradNorm(ad::ParameterSet& params, double max_norm);

struct Checkpoint {
  ModelConfig model;
  StftConfig stft;
  F0Config f0;
  std::vector<std::string> vocabulary;
  std::vector<std::string> speakers;
  std::map<std::string, VocalRangeStats> speaker_stats;
  int64_t step = 0;
  ad::ParameterSet params;
};

// Binary archive: 8-byte magic, uint32 version, uint64 header length, JSON
// header, then every parameter as little-endian float64 in header order.
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);
// Rebuilds the model and copies the stored parameters into it.
ProsodyModel ModelFromCheckpoint(const Checkpoint& ckpt);

struct TrainOptions {
  // When set, loss.csv and checkpoints are written here.
  std::optional<std::filesystem::path> out_dir;
  StftConfig stft;
  F0Config f0;
  // Called after every update with the completed step count.
  std::function<void(int64_t, const ProsodyModel&, const LossLogRow&)> on_step;
};

struct TrainResult {
  std::vector<LossLogRow> log;
  std::vector<std::filesystem::path> checkpoints;
  int64_t best_step = 0;  // lowest logged total
};

// Teacher-forced training of `model` on `data`. Throws kNumericalFailure on
// a non-finite loss, naming the step.
TrainResult Train(ProsodyModel& model, const TrainingSet& data,
                  const TrainConfig& cfg, const TrainOptions& opts = {});

// Fills vocabulary, speaker and channel counts from the training set.
ModelConfig ConfigureModel(ModelConfig base, const TrainingSet& data,
                           const StftConfig& stft = {});

// Mean teacher-forced mel RMSE (pre-net output) in evaluation mode.
double TeacherForcedRmse(const ProsodyModel& model, const TrainingSet& data);

// Mean-pooled prosody embedding of one training example.
RowVector PooledProsody(const ProsodyModel& model, const TrainingExample& ex);

// Leave-one-out accuracy of an L2-regularized multinomial logistic
// regression predicting labels from standardized features.
double LeaveOneOutProbeAccuracy(const Matrix& features,
                                const std::vector<int>& labels, int n_classes);

double SpeakerProbeAccuracy(const ProsodyModel& model, const TrainingSet& data);

}  // namespace prosodykit

#endif  // PROSODYKIT_TRAINING_H_
