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

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <cmath>
#include <random>

#include "prosodykit/error.h"
#include "prosodykit/model.h"
#include "prosodykit/pitch.h"
#include "test_util.h"

namespace prosodykit {
namespace {

using testing::MakeContour;

ModelConfig SmallConfig(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.vocab_size = 8;
  c.n_speakers = 4;
  c.mel_channels = 6;
  c.excitation_stft.mel_channels = 6;
  c.embed_dim = 8;
  c.encoder_lstm_dim = 4;
  c.speaker_dim = 3;
  c.prenet_dim = 8;
  c.decoder_dim = 12;
  c.attention_dim = 6;
  c.location_kernel = 3;
  c.postnet_channels = 6;
  c.ref_conv_channels = 5;
  c.ref_rnn_dim = 6;
  c.n_tokens = 4;
  c.token_dim = 6;
  c.n_heads = 2;
  c.prosody_conv_channels = 5;
  c.prosody_dim = 4;
  c.classifier_hidden = 5;
  c.seed = 7;
  return c;
}

Matrix RandomMel(int frames, int channels, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(-2.0, 1.0);
  Matrix m(frames, channels);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

PitchContour Ramp(int frames, double start = 120.0) {
  std::vector<double> f0;
  for (int t = 0; t < frames; ++t) f0.push_back(t % 5 == 4 ? 0.0 : start + 3.0 * t);
  PitchContour c = MakeContour(f0);
  return c;
}

// Fixture data for one teacher-forced call.
struct Inputs {
  PhonemeSequence text{{2, 3, 4, 5, kEosId}};
  Matrix mel = RandomMel(8, 6, 3);
  PitchContour f0 = Ramp(8);
  ProsodyReference Ref() const { return {&mel, &f0}; }
};

void ExpectRowStochastic(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    EXPECT_NEAR(m.row(r).sum(), 1.0, 1e-6);
    EXPECT_GE(m.row(r).minCoeff(), 0.0);
  }
}

void RandomizeClassifier(ProsodyModel& model, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  for (const char* name : {"classifier.out.w", "classifier.out.b"}) {
    Matrix& v = model.params().Get(name).value;
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
  }
}

TEST(VariantTest, NamesRoundTrip) {
  for (Variant v : {Variant::kGst, Variant::kHard, Variant::kSoft}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_THROW(ParseVariant("pitch"), Error);
}

TEST(VocabularyTest, EncodeAppendsEos) {
  Vocabulary vocab;
  vocab.Add("p1");
  vocab.Add("p2");
  const PhonemeSequence s = vocab.Encode("p1 p2  p1");
  EXPECT_EQ(s.ids, (std::vector<int>{2, 3, 2, kEosId}));
  EXPECT_THROW(vocab.Encode("p1 p9"), Error);
  EXPECT_THROW(vocab.Encode("   "), Error);
}

TEST(EncodeTextTest, LengthOneShape) {
  const ProsodyModel model(SmallConfig(Variant::kHard));
  ad::Tape tape(false);
  const ad::Var enc = model.EncodeText(tape, PhonemeSequence{{3}});
  EXPECT_EQ(enc.rows(), 1);
  EXPECT_EQ(enc.cols(), model.config().encoder_dim());
}

TEST(EncodeTextTest, DeterministicAndRejectsOutOfVocabulary) {
  const ProsodyModel model(SmallConfig(Variant::kHard));
  ad::Tape a(false), b(false);
  const PhonemeSequence text{{2, 3, 4, kEosId}};
  EXPECT_EQ(model.EncodeText(a, text).value(), model.EncodeText(b, text).value());
  ad::Tape c(false);
  try {
    model.EncodeText(c, PhonemeSequence{{2, 8}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfVocabulary);
  }
}

TEST(EncodeTextTest, PaddingIsMaskedOutOfAttention) {
  for (Variant v : {Variant::kGst, Variant::kHard, Variant::kSoft}) {
    const ProsodyModel model(SmallConfig(v));
    Inputs in;
    PhonemeSequence padded = in.text;
    padded.ids.push_back(kPadId);
    padded.ids.push_back(kPadId);
    const PitchContour* f0 = v == Variant::kHard ? &in.f0 : nullptr;
    const ModelOutput plain =
        DecodeTeacherForced(model, in.text, in.Ref(), 1, in.mel, f0);
    const ModelOutput pad =
        DecodeTeacherForced(model, padded, in.Ref(), 1, in.mel, f0);
    const int n = static_cast<int>(in.text.ids.size());
    ASSERT_EQ(pad.text_attention.cols(), n + 2);
    EXPECT_EQ(pad.text_attention.rightCols(2).maxCoeff(), 0.0);
    EXPECT_LT((pad.text_attention.leftCols(n) - plain.text_attention).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LT((pad.mel_post - plain.mel_post).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(GstStyleTest, WeightsAreDistributions) {
  const ProsodyModel model(SmallConfig(Variant::kGst));
  ad::Tape tape(false);
  const StyleGraph s = model.GstStyle(tape, RandomMel(12, 6, 5));
  EXPECT_EQ(s.weights.rows(), 2);
  EXPECT_EQ(s.weights.cols(), 4);
  ExpectRowStochastic(s.weights);
}

TEST(GstStyleTest, EmbeddingLiesInValueSpan) {
  const ProsodyModel model(SmallConfig(Variant::kGst));
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    ad::Tape tape(false);
    const StyleGraph s = model.GstStyle(tape, RandomMel(9, 6, seed));
    // Least squares: basis^T x = embedding^T.
    const Matrix a = s.value_basis.transpose();
    const Vector e = s.embedding.value().row(0).transpose();
    const Vector x = a.colPivHouseholderQr().solve(e);
    EXPECT_LT((a * x - e).norm(), 1e-5);
  }
}

TEST(GstStyleTest, SameContentSameEmbeddingAndEmptyRejected) {
  const ProsodyModel model(SmallConfig(Variant::kGst));
  const Matrix m1 = RandomMel(10, 6, 11);
  const Matrix m2 = m1;
  EXPECT_EQ(ProsodyEmbedding(model, {&m1, nullptr}),
            ProsodyEmbedding(model, {&m2, nullptr}));
  const Matrix empty(0, 6);
  ad::Tape tape(false);
  EXPECT_THROW(model.GstStyle(tape, empty), Error);
}

TEST(PitchProsodyTest, OneVectorPerFrame) {
  const ProsodyModel model(SmallConfig(Variant::kSoft));
  const PitchContour c = Ramp(10);
  const Matrix r = ProsodyEmbedding(model, {nullptr, &c});
  EXPECT_EQ(r.rows(), 10);
  EXPECT_EQ(r.cols(), model.config().prosody_embedding_dim());
}

TEST(PitchProsodyTest, UnitScaleIsIdentity) {
  const ProsodyModel model(SmallConfig(Variant::kSoft));
  const PitchContour c = Ramp(10);
  const PitchContour s = ScalePitch(c, 1.0);
  EXPECT_EQ(ProsodyEmbedding(model, {nullptr, &c}),
            ProsodyEmbedding(model, {nullptr, &s}));
}

TEST(PitchProsodyTest, AllUnvoicedIsFinite) {
  const ProsodyModel model(SmallConfig(Variant::kSoft));
  const PitchContour c = MakeContour(std::vector<double>(7, 0.0));
  const Matrix r = ProsodyEmbedding(model, {nullptr, &c});
  EXPECT_EQ(r.rows(), 7);
  EXPECT_TRUE(r.allFinite());
  const PitchContour empty;
  EXPECT_THROW(ProsodyEmbedding(model, {nullptr, &empty}), Error);
}

TEST(ClassifierTest, ZeroInitGivesUniformLogits) {
  for (int n : {2, 4, 5}) {
    ModelConfig cfg = SmallConfig(Variant::kHard);
    cfg.n_speakers = n;
    const ProsodyModel model(cfg);
    Inputs in;
    const ModelOutput out =
        DecodeTeacherForced(model, in.text, in.Ref(), 0, in.mel, &in.f0);
    ASSERT_EQ(out.speaker_logits.size(), n);
    for (int target = 0; target < n; ++target) {
      const LossValues l = ComputeLoss(out, in.mel, GateTargets(8).transpose(), target, 1.0);
      EXPECT_NEAR(l.ce, std::log(n), 1e-12);
    }
  }
}

TEST(DecodeTest, TeacherForcedShapesAndStochasticity) {
  for (Variant v : {Variant::kGst, Variant::kHard, Variant::kSoft}) {
    const ProsodyModel model(SmallConfig(v));
    Inputs in;
    const ModelOutput out = DecodeTeacherForced(
        model, in.text, in.Ref(), 2, in.mel, v == Variant::kHard ? &in.f0 : nullptr);
    EXPECT_EQ(out.num_frames(), 8);
    EXPECT_EQ(out.mel_post.rows(), 8);
    EXPECT_EQ(out.text_attention.rows(), 8);
    EXPECT_EQ(out.text_attention.cols(), 5);
    ExpectRowStochastic(out.text_attention);
    EXPECT_GT(out.gate.minCoeff(), 0.0);
    EXPECT_LT(out.gate.maxCoeff(), 1.0);
    EXPECT_EQ(out.prosody_attention.has_value(), v == Variant::kSoft);
    if (out.prosody_attention) {
      EXPECT_EQ(out.prosody_attention->rows(), 8);
      EXPECT_EQ(out.prosody_attention->cols(), 8);
      ExpectRowStochastic(*out.prosody_attention);
    }
    EXPECT_EQ(out.token_weights.has_value(), v == Variant::kGst);
    if (out.token_weights) ExpectRowStochastic(*out.token_weights);
  }
}

TEST(DecodeTest, EvaluationModeIsBitwiseDeterministic) {
  for (Variant v : {Variant::kGst, Variant::kHard, Variant::kSoft}) {
    const ProsodyModel model(SmallConfig(v));
    Inputs in;
    const PitchContour* f0 = v == Variant::kHard ? &in.f0 : nullptr;
    const ModelOutput a = DecodeTeacherForced(model, in.text, in.Ref(), 1, in.mel, f0);
    const ModelOutput b = DecodeTeacherForced(model, in.text, in.Ref(), 1, in.mel, f0);
    EXPECT_EQ(a.mel_pre, b.mel_pre);
    EXPECT_EQ(a.mel_post, b.mel_post);
    EXPECT_EQ(a.gate, b.gate);
    EXPECT_EQ(a.text_attention, b.text_attention);
    EXPECT_EQ(a.speaker_logits, b.speaker_logits);
  }
}

TEST(DecodeTest, HardRequiresMatchingF0) {
  const ProsodyModel model(SmallConfig(Variant::kHard));
  Inputs in;
  EXPECT_THROW(DecodeTeacherForced(model, in.text, in.Ref(), 0, in.mel, nullptr), Error);
  const PitchContour shorter = Ramp(7);
  try {
    DecodeTeacherForced(model, in.text, in.Ref(), 0, in.mel, &shorter);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(DecodeTest, GstAndSoftRejectDecoderF0) {
  for (Variant v : {Variant::kGst, Variant::kSoft}) {
    const ProsodyModel model(SmallConfig(v));
    Inputs in;
    EXPECT_THROW(DecodeTeacherForced(model, in.text, in.Ref(), 0, in.mel, &in.f0), Error);
  }
}

TEST(DecodeTest, HardF0ChangesOutput) {
  const ProsodyModel model(SmallConfig(Variant::kHard));
  Inputs in;
  const PitchContour zero = MakeContour(std::vector<double>(8, 0.0));
  const ModelOutput a = DecodeTeacherForced(model, in.text, in.Ref(), 0, in.mel, &in.f0);
  const ModelOutput b = DecodeTeacherForced(model, in.text, in.Ref(), 0, in.mel, &zero);
  EXPECT_GT((a.mel_post - b.mel_post).cwiseAbs().mean(), 0.0);
}

TEST(DecodeTest, FreeRunningStepCounts) {
  Inputs in;
  {
    const ProsodyModel model(SmallConfig(Variant::kHard));
    ad::Tape tape(false);
    const PitchContour f0 = Ramp(13);
    DecodeRequest req;
    req.text = &in.text;
    req.f0 = &f0;
    const ForwardGraph g = model.Forward(tape, req, in.Ref());
    EXPECT_EQ(g.mel_pre.rows(), 13);
  }
  {
    const ProsodyModel model(SmallConfig(Variant::kSoft));
    ad::Tape tape(false);
    DecodeRequest req;
    req.text = &in.text;
    const ForwardGraph g = model.Forward(tape, req, in.Ref());
    EXPECT_GE(g.mel_pre.rows(), 1);
    EXPECT_LE(g.mel_pre.rows(), 10 * 5);
    ExpectRowStochastic(g.text_attention);
  }
}

TEST(ComputeLossTest, PerfectPredictionClosedForm) {
  const double eps = kGateEpsilon;
  ModelOutput out;
  out.mel_pre = RandomMel(3, 4, 1);
  RowVector gate(3);
  gate << 0.0, 0.0, 1.0;
  out.gate = gate;
  out.speaker_logits = RowVector::Constant(4, 0.3);
  const LossValues l = ComputeLoss(out, out.mel_pre, gate, 2, 1.0);
  EXPECT_EQ(l.rmse, 0.0);
  EXPECT_NEAR(l.bce, -std::log(1.0 - eps), 1e-12);
  EXPECT_NEAR(l.ce, std::log(4.0), 1e-12);
  EXPECT_NEAR(l.ce, 1.3863, 1e-4);
}

TEST(ComputeLossTest, HandComputedToyExample) {
  ModelOutput out;
  out.mel_pre = Matrix::Ones(2, 2);
  out.gate = RowVector::Constant(2, 0.5);
  out.speaker_logits = RowVector::Zero(4);
  RowVector target_gate(2);
  target_gate << 0.0, 1.0;
  const LossValues l = ComputeLoss(out, Matrix::Zero(2, 2), target_gate, 0, 1.0);
  EXPECT_NEAR(l.rmse, 1.0, 1e-12);
  EXPECT_NEAR(l.bce, std::log(2.0), 1e-12);
  EXPECT_NEAR(l.bce, 0.6931, 1e-4);
  EXPECT_NEAR(l.total, 1.0 + 0.6931 + 1.3863, 1e-4);
  EXPECT_NEAR(l.total, 1.0 + std::log(2.0) + std::log(4.0), 1e-6);
}

TEST(ComputeLossTest, LambdaZeroDropsCeAndNegativeRejected) {
  ModelOutput out;
  out.mel_pre = Matrix::Ones(2, 2);
  out.mel_post = Matrix::Constant(2, 2, 0.5);
  out.gate = RowVector::Constant(2, 0.3);
  out.speaker_logits = RowVector::LinSpaced(3, -1.0, 1.0);
  const RowVector tg = GateTargets(2).transpose();
  const LossValues l = ComputeLoss(out, Matrix::Zero(2, 2), tg, 1, 0.0);
  EXPECT_EQ(l.total, l.rmse + l.bce);
  EXPECT_TRUE(std::isfinite(l.ce));
  EXPECT_GT(l.ce, 0.0);
  EXPECT_NEAR(l.rmse, 1.5, 1e-12);  // pre + post
  EXPECT_THROW(ComputeLoss(out, Matrix::Zero(2, 2), tg, 1, -0.1), Error);
}

// Gradient of the loss with respect to the prosody embedding r.
Matrix ProsodyGrad(const ProsodyModel& model, const Inputs& in, double lambda,
                   bool rmse_only) {
  ad::Tape tape;
  DecodeRequest req;
  req.text = &in.text;
  req.speaker = 1;
  req.target_mel = &in.mel;
  req.f0 = model.config().variant == Variant::kHard ? &in.f0 : nullptr;
  const ForwardGraph g = model.Forward(tape, req, in.Ref());
  const LossGraph loss = BuildLoss(g, in.mel, GateTargets(8), 1, lambda);
  tape.Backward(rmse_only ? ad::Add(loss.rmse, loss.bce) : loss.total);
  return g.prosody.grad();
}

TEST(GradientReversalTest, OnlyCePathFlipsSign) {
  for (Variant v : {Variant::kHard, Variant::kSoft}) {
    ModelConfig cfg = SmallConfig(v);
    ProsodyModel with(cfg);
    cfg.use_grl = false;
    ProsodyModel without(cfg);
    RandomizeClassifier(with, 3);
    RandomizeClassifier(without, 3);
    Inputs in;
    const Matrix recon_with = ProsodyGrad(with, in, 1.0, true);
    const Matrix recon_without = ProsodyGrad(without, in, 1.0, true);
    EXPECT_LT((recon_with - recon_without).cwiseAbs().maxCoeff(), 1e-14);
    const Matrix ce_with = ProsodyGrad(with, in, 1.0, false) - recon_with;
    const Matrix ce_without = ProsodyGrad(without, in, 1.0, false) - recon_without;
    EXPECT_GT(ce_with.norm(), 1e-8);
    EXPECT_LT((ce_with + ce_without).norm(), 1e-10 * (1.0 + ce_with.norm()));
  }
}

// Summed gradient over prosody-encoder parameters.
Matrix EncoderGrads(ProsodyModel& model, const Inputs& in, double lambda) {
  model.params().ZeroGrad();
  ad::Tape tape;
  DecodeRequest req;
  req.text = &in.text;
  req.speaker = 2;
  req.target_mel = &in.mel;
  req.f0 = &in.f0;
  const ForwardGraph g = model.Forward(tape, req, in.Ref());
  tape.Backward(BuildLoss(g, in.mel, GateTargets(8), 2, lambda).total);
  std::vector<double> flat;
  for (const auto& [name, p] : model.params().items()) {
    if (name.rfind("pitch.", 0) != 0) continue;
    flat.insert(flat.end(), p.grad.data(), p.grad.data() + p.grad.size());
  }
  return Eigen::Map<Matrix>(flat.data(), static_cast<Eigen::Index>(flat.size()), 1);
}

TEST(GradientReversalTest, CeContributionIsLinearInLambda) {
  ProsodyModel model(SmallConfig(Variant::kHard));
  RandomizeClassifier(model, 9);
  Inputs in;
  const Matrix g0 = EncoderGrads(model, in, 0.0);
  const Matrix g2 = EncoderGrads(model, in, 2.0);
  const Matrix gs = EncoderGrads(model, in, 0.02);
  const Matrix big = g2 - g0;
  const Matrix small = 100.0 * (gs - g0);
  ASSERT_GT(big.norm(), 1e-8);
  EXPECT_LT((big - small).norm() / big.norm(), 1e-5);
}

double TotalLoss(ProsodyModel& model, const Inputs& in, bool backward) {
  ad::Tape tape(backward);
  DecodeRequest req;
  req.text = &in.text;
  req.speaker = 3;
  req.target_mel = &in.mel;
  req.f0 = model.config().variant == Variant::kHard ? &in.f0 : nullptr;
  const ForwardGraph g = model.Forward(tape, req, in.Ref());
  const LossGraph loss = BuildLoss(g, in.mel, GateTargets(8), 3, 0.5);
  if (backward) tape.Backward(loss.total);
  return loss.total.value()(0, 0);
}

TEST(ModelGradientTest, MatchesFiniteDifferences) {
  for (Variant v : {Variant::kGst, Variant::kHard, Variant::kSoft}) {
    // Reversal makes the analytic gradient differ from the loss slope.
    ModelConfig cfg = SmallConfig(v);
    cfg.use_grl = false;
    ProsodyModel model(cfg);
    std::mt19937_64 noise(4);
    std::normal_distribution<double> g(0.0, 0.05);
    for (auto& [name, p] : model.params().items()) {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += g(noise);
    }
    Inputs in;
    model.params().ZeroGrad();
    TotalLoss(model, in, true);
    std::mt19937_64 rng(17);
    for (auto& [name, p] : model.params().items()) {
      std::uniform_int_distribution<Eigen::Index> pick(0, p.value.size() - 1);
      const Eigen::Index i = pick(rng);
      const double orig = p.value.data()[i];
      const double h = 1e-5;
      p.value.data()[i] = orig + h;
      const double up = TotalLoss(model, in, false);
      p.value.data()[i] = orig - h;
      const double down = TotalLoss(model, in, false);
      p.value.data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad.data()[i];
      EXPECT_NEAR(analytic, numeric, 1e-6 + 1e-4 * std::abs(numeric))
          << VariantName(v) << " " << name;
    }
  }
}

}  // namespace
}  // namespace prosodykit
