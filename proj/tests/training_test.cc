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

#include "prosodykit/training.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "prosodykit/error.h"
#include "prosodykit/sweep.h"
#include "tiny_corpus.h"

namespace prosodykit {
namespace {

using testing::TempDir;
using testing::TinyCorpus;
using testing::TinyModel;
using testing::TinyTrain;

TEST(LearningRateTest, HalvesPerInterval) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(LearningRate(0, cfg), 1e-3);
  EXPECT_DOUBLE_EQ(LearningRate(49999, cfg), 1e-3);
  EXPECT_DOUBLE_EQ(LearningRate(50000, cfg), 5e-4);
  EXPECT_DOUBLE_EQ(LearningRate(100000, cfg), 2.5e-4);
  EXPECT_THROW(LearningRate(-1, cfg), Error);
}

TEST(LearningRateTest, NonIncreasingWithExactHalving) {
  TrainConfig cfg;
  cfg.decay_steps = 7;
  for (int s = 1; s < 100; ++s) {
    const double prev = LearningRate(s - 1, cfg);
    const double cur = LearningRate(s, cfg);
    EXPECT_LE(cur, prev);
    if (s % 7 == 0) {
      EXPECT_EQ(cur, prev / 2);
    } else {
      EXPECT_EQ(cur, prev);
    }
  }
}

TEST(TrainConfigTest, RejectsInvalid) {
  TrainConfig c;
  c.initial_lr = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.lambda = -0.1;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(ClipGradNormTest, NeverIncreasesNorm) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double scale : {0.01, 0.5, 3.0, 40.0}) {
    ad::ParameterSet p;
    auto& a = p.Add("a", Matrix::Zero(3, 4));
    auto& b = p.Add("b", Matrix::Zero(2, 2));
    a.grad = Matrix::NullaryExpr(3, 4, [&] { return scale * n(rng); });
    b.grad = Matrix::NullaryExpr(2, 2, [&] { return scale * n(rng); });
    const double before = GlobalGradNorm(p);
    ClipGradNorm(p, 1.0);
    const double after = GlobalGradNorm(p);
    EXPECT_LE(after, before + 1e-12);
    EXPECT_LE(after, 1.0 + 1e-12);
    if (before <= 1.0) EXPECT_DOUBLE_EQ(after, before);
  }
}

TEST(TrainingSetTest, BuildsVocabularyAndSpeakers) {
  const auto& t = TinyCorpus::Get();
  EXPECT_EQ(t.data.examples.size(), 4U);
  EXPECT_EQ(t.data.speakers.size(), 2U);
  EXPECT_EQ(t.data.speaker_stats.size(), 2U);
  for (const auto& ex : t.data.examples) {
    EXPECT_EQ(static_cast<size_t>(ex.mel.rows()), ex.f0.f0.size());
    EXPECT_EQ(ex.text.ids.back(), kEosId);
  }
  EXPECT_THROW(t.data.SpeakerIndex("nobody"), Error);
}

TEST(TrainTest, LambdaZeroLogsFiniteCeOutsideTotal) {
  const auto& t = TinyCorpus::Get();
  ProsodyModel model(TinyModel(Variant::kHard, t.data));
  TrainConfig tc = TinyTrain(3);
  const TrainResult r = Train(model, t.data, tc);
  ASSERT_EQ(r.log.size(), 3U);
  for (const auto& row : r.log) {
    EXPECT_TRUE(std::isfinite(row.ce));
    EXPECT_GT(row.ce, 0.0);
    EXPECT_NEAR(row.total, row.rmse + row.bce, 1e-12 * row.total);
    EXPECT_TRUE(std::isfinite(row.total));
  }
}

TEST(TrainTest, IdenticalSeedsGiveIdenticalLogs) {
  const auto& t = TinyCorpus::Get();
  std::string logs[2];
  for (auto& s : logs) {
    ProsodyModel model(TinyModel(Variant::kHard, t.data));
    TrainConfig tc = TinyTrain(4);
    tc.lambda = 0.2;
    std::ostringstream out;
    WriteLossLog(out, Train(model, t.data, tc).log);
    s = out.str();
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(logs[0].substr(0, logs[0].find('\n')), "step,lr,total,rmse,bce,ce");
}

TEST(TrainTest, WritesCheckpointsAndLog) {
  const auto& t = TinyCorpus::Get();
  TempDir dir("train");
  ProsodyModel model(TinyModel(Variant::kSoft, t.data));
  TrainConfig tc = TinyTrain(4);
  tc.checkpoint_interval = 2;
  TrainOptions opts;
  opts.out_dir = dir.path();
  const TrainResult r = Train(model, t.data, tc, opts);
  EXPECT_EQ(r.checkpoints.size(), 2U);
  for (const auto& p : r.checkpoints) EXPECT_TRUE(std::filesystem::exists(p));
  EXPECT_TRUE(std::filesystem::exists(dir / "loss.csv"));
  const Checkpoint last = LoadCheckpoint(r.checkpoints.back());
  EXPECT_EQ(last.step, 4);
}

TEST(TrainTest, RejectsEmptyCorpus) {
  const auto& t = TinyCorpus::Get();
  TrainingSet empty = t.data;
  empty.examples.clear();
  ProsodyModel model(TinyModel(Variant::kHard, t.data));
  EXPECT_THROW(Train(model, empty, TinyTrain(1)), Error);
}

TEST(TrainTest, NonFiniteLossNamesStep) {
  const auto& t = TinyCorpus::Get();
  TrainingSet bad = t.data;
  bad.examples[1].mel(0, 0) = std::nan("");
  ProsodyModel model(TinyModel(Variant::kHard, t.data));
  TrainConfig tc = TinyTrain(3);
  tc.batch_size = 1;
  try {
    Train(model, bad, tc);
    FAIL() << "expected a numerical failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalFailure);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(CheckpointTest, RoundTripReproducesOutputsBitwise) {
  const auto& t = TinyCorpus::Get();
  TempDir dir("ckpt");
  for (Variant v : {Variant::kGst, Variant::kHard, Variant::kSoft}) {
    ProsodyModel model(TinyModel(v, t.data));
    Train(model, t.data, TinyTrain(2));
    Checkpoint c;
    c.model = model.config();
    c.vocabulary = t.data.vocab.symbols();
    c.speakers = t.data.speakers;
    c.speaker_stats = t.data.speaker_stats;
    c.step = 2;
    c.params = model.params();
    const auto path = dir / (VariantName(v) + ".pkm");
    SaveCheckpoint(path, c);
    const Checkpoint back = LoadCheckpoint(path);
    EXPECT_EQ(back.step, 2);
    EXPECT_EQ(back.vocabulary, c.vocabulary);
    EXPECT_EQ(back.speakers, c.speakers);
    const ProsodyModel restored = ModelFromCheckpoint(back);
    const auto& ex = t.data.examples[0];
    const ModelOutput a = DecodeTeacherForced(model, ex.text, {&ex.mel, &ex.f0}, ex.speaker, ex.mel,
                                              v == Variant::kHard ? &ex.f0 : nullptr);
    const ModelOutput b = DecodeTeacherForced(restored, ex.text, {&ex.mel, &ex.f0}, ex.speaker, ex.mel,
                                              v == Variant::kHard ? &ex.f0 : nullptr);
    EXPECT_EQ(a.mel_post, b.mel_post);
    EXPECT_EQ(a.gate, b.gate);
  }
}

TEST(CheckpointTest, RejectsCorruptFiles) {
  TempDir dir("badckpt");
  {
    std::ofstream(dir / "junk.pkm") << "not a checkpoint";
  }
  EXPECT_THROW(LoadCheckpoint(dir / "junk.pkm"), Error);
  EXPECT_THROW(LoadCheckpoint(dir / "absent.pkm"), Error);
}

TEST(ProbeTest, SeparableFeaturesAreClassified) {
  Matrix x(8, 2);
  std::vector<int> y;
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = (i < 4 ? -1.0 : 1.0) + 0.01 * i;
    x(i, 1) = 0.3 * (i % 3);
    y.push_back(i < 4 ? 0 : 1);
  }
  EXPECT_DOUBLE_EQ(LeaveOneOutProbeAccuracy(x, y, 2), 1.0);
  EXPECT_THROW(LeaveOneOutProbeAccuracy(x.topRows(1), {0}, 2), Error);
}

TEST(SweepTest, SingleLambdaGivesOneRow) {
  const auto& t = TinyCorpus::Get();
  SweepConfig cfg;
  cfg.lambdas = {0.0};
  cfg.model = TinyModel(Variant::kHard, t.data);
  cfg.train = TinyTrain(2);
  cfg.synthesis.griffin_lim_iterations = 4;
  TempDir dir("sweep");
  const auto rows = LambdaSweep(t.data, {t.data.examples[0]}, cfg, dir / "sweep.csv");
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_TRUE(rows[0].complete);
  std::ifstream in(dir / "sweep.csv");
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "lambda,gpe,vde,ffe,mcd_db,probe_accuracy");
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, 1);
}

TEST(SweepTest, ReportSortsAndFlagsIncompleteRows) {
  SweepRow a{2.0, 0.1, 0.2, 0.3, 4.0, 0.5, true, ""};
  SweepRow b{0.0, 0, 0, 0, 0, 0, false, "non-finite loss at step 3"};
  std::ostringstream out;
  WriteSweepReport(out, {a, b});
  EXPECT_EQ(out.str(),
            "lambda,gpe,vde,ffe,mcd_db,probe_accuracy\n"
            "0,nan,nan,nan,nan,nan\n"
            "2,0.1,0.2,0.3,4,0.5\n"
            "# incomplete: lambda=0: non-finite loss at step 3\n");
}

TEST(SweepTest, RejectsEmptyLambdaList) {
  const auto& t = TinyCorpus::Get();
  SweepConfig cfg;
  cfg.lambdas.clear();
  EXPECT_THROW(LambdaSweep(t.data, t.data.examples, cfg), Error);
}

}  // namespace
}  // namespace prosodykit
