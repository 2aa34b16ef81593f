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

#include "prosodykit/model.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "prosodykit/error.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"

namespace prosodykit {
namespace {

using ad::Var;

Matrix GlorotUniform(std::mt19937_64& rng, int fan_in, int fan_out) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix Normal(std::mt19937_64& rng, int rows, int cols, double stddev) {
  std::normal_distribution<double> g(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Matrix Zeros(int rows, int cols) { return Matrix::Zero(rows, cols); }

Matrix LstmBias(int hidden) {
  Matrix b = Matrix::Zero(1, 4 * hidden);
  b.middleCols(hidden, hidden).setOnes();  // forget gate
  return b;
}

Var Concat(std::initializer_list<Var> parts) {
  const std::vector<Var> v(parts);
  return ad::ConcatCols(v);
}

// Inverted dropout with a mask drawn from rng.
Var Dropout(ad::Tape& tape, Var x, double p, std::mt19937_64* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(*rng) ? 1.0 / (1.0 - p) : 0.0;
  }
  return ad::Mul(x, tape.Constant(std::move(mask)));
}

// Location-sensitive additive attention over `memory`.
struct AttentionState {
  Var prev;  // [1 x N]
  Var cum;   // [1 x N]
};

}  // namespace

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kGst: return "gst";
    case Variant::kHard: return "hard";
    case Variant::kSoft: return "soft";
  }
  return "unknown";
}

Variant ParseVariant(const std::string& name) {
  if (name == "gst") return Variant::kGst;
  if (name == "hard") return Variant::kHard;
  if (name == "soft") return Variant::kSoft;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown variant '" + name + "' (expected gst, hard or soft)");
}

void ModelConfig::Validate() const {
  const bool ok =
      vocab_size >= 3 && n_speakers >= 1 && mel_channels >= 1 &&
      embed_dim >= 1 && encoder_conv_layers >= 0 && encoder_kernel % 2 == 1 &&
      encoder_lstm_dim >= 1 && speaker_dim >= 1 && prenet_dim >= 1 &&
      prenet_dropout >= 0.0 && prenet_dropout < 1.0 && decoder_dim >= 1 &&
      attention_dim >= 1 && location_kernel % 2 == 1 &&
      postnet_channels >= 1 && postnet_kernel % 2 == 1 &&
      ref_conv_channels >= 1 && ref_rnn_dim >= 1 && n_tokens >= 1 &&
      n_heads >= 1 && token_dim % n_heads == 0 && prosody_conv_channels >= 1 &&
      prosody_kernel % 2 == 1 && prosody_dim >= 1 && classifier_hidden >= 1 &&
      lambda >= 0.0 && f0_ref_hz > 0.0 && gate_threshold > 0.0 &&
      gate_threshold < 1.0 && max_decoder_steps_per_symbol >= 1 && min_decoder_steps_per_symbol >= 0 &&
      min_decoder_steps_per_symbol <= max_decoder_steps_per_symbol &&
      (!f0_excitation || excitation_stft.mel_channels == mel_channels);
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "invalid model configuration");
}

ProsodyModel::ProsodyModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  std::mt19937_64 rng(cfg_.seed);
  auto& p = params_;
  const int e = cfg_.embed_dim;
  const int c = cfg_.mel_channels;
  const int h = cfg_.decoder_dim;
  const int a = cfg_.attention_dim;
  const int enc = cfg_.encoder_dim();
  const int eh = cfg_.encoder_lstm_dim;

  p.Add("encoder.embedding", Normal(rng, cfg_.vocab_size, e, 0.3));
  for (int i = 0; i < cfg_.encoder_conv_layers; ++i) {
    const std::string n = "encoder.conv" + std::to_string(i);
    p.Add(n + ".w", GlorotUniform(rng, cfg_.encoder_kernel * e, e));
    p.Add(n + ".b", Zeros(1, e));
  }
  for (const char* dir : {"encoder.fwd", "encoder.bwd"}) {
    p.Add(std::string(dir) + ".wx", GlorotUniform(rng, e, 4 * eh));
    p.Add(std::string(dir) + ".wh", GlorotUniform(rng, eh, 4 * eh));
    p.Add(std::string(dir) + ".b", LstmBias(eh));
  }
  p.Add("speaker.table", Normal(rng, cfg_.n_speakers, cfg_.speaker_dim, 0.3));

  int cond_dim = cfg_.speaker_dim;
  if (cfg_.variant == Variant::kGst) {
    const int r = cfg_.ref_conv_channels;
    const int rr = cfg_.ref_rnn_dim;
    p.Add("gst.ref_conv0.w", GlorotUniform(rng, 3 * c, r));
    p.Add("gst.ref_conv0.b", Zeros(1, r));
    p.Add("gst.ref_conv1.w", GlorotUniform(rng, 3 * r, r));
    p.Add("gst.ref_conv1.b", Zeros(1, r));
    p.Add("gst.ref_rnn.wx", GlorotUniform(rng, r, 4 * rr));
    p.Add("gst.ref_rnn.wh", GlorotUniform(rng, rr, 4 * rr));
    p.Add("gst.ref_rnn.b", LstmBias(rr));
    p.Add("gst.tokens", Normal(rng, cfg_.n_tokens, cfg_.token_dim, 0.5));
    const int dk = cfg_.token_dim / cfg_.n_heads;
    for (int hd = 0; hd < cfg_.n_heads; ++hd) {
      const std::string n = "gst.head" + std::to_string(hd);
      p.Add(n + ".q", GlorotUniform(rng, rr, dk));
      p.Add(n + ".k", GlorotUniform(rng, cfg_.token_dim, dk));
      p.Add(n + ".v", GlorotUniform(rng, cfg_.token_dim, dk));
    }
    cond_dim += cfg_.token_dim;
  } else {
    const int pc = cfg_.prosody_conv_channels;
    const int in = 2 + (uses_excitation() ? c : 0);
    p.Add("pitch.conv0.w", GlorotUniform(rng, cfg_.prosody_kernel * in, pc));
    p.Add("pitch.conv0.b", Zeros(1, pc));
    p.Add("pitch.conv1.w", GlorotUniform(rng, cfg_.prosody_kernel * pc, pc));
    p.Add("pitch.conv1.b", Zeros(1, pc));
    p.Add("pitch.proj.w", GlorotUniform(rng, pc, cfg_.prosody_dim));
    p.Add("pitch.proj.b", Zeros(1, cfg_.prosody_dim));
    if (cfg_.variant == Variant::kSoft) {
      p.Add("pattn.query", GlorotUniform(rng, h, a));
      p.Add("pattn.memory", GlorotUniform(rng, cfg_.prosody_embedding_dim(), a));
      p.Add("pattn.location", GlorotUniform(rng, cfg_.location_kernel * 2, a));
      p.Add("pattn.v", GlorotUniform(rng, a, 1));
    }
    cond_dim += cfg_.prosody_embedding_dim();
  }

  p.Add("decoder.prenet0.w", GlorotUniform(rng, c, cfg_.prenet_dim));
  p.Add("decoder.prenet0.b", Zeros(1, cfg_.prenet_dim));
  p.Add("decoder.prenet1.w", GlorotUniform(rng, cfg_.prenet_dim, cfg_.prenet_dim));
  p.Add("decoder.prenet1.b", Zeros(1, cfg_.prenet_dim));
  const int rnn_in = cfg_.prenet_dim + enc + cond_dim;
  p.Add("decoder.rnn.wx", GlorotUniform(rng, rnn_in, 4 * h));
  p.Add("decoder.rnn.wh", GlorotUniform(rng, h, 4 * h));
  p.Add("decoder.rnn.b", LstmBias(h));
  p.Add("attn.query", GlorotUniform(rng, h, a));
  p.Add("attn.memory", GlorotUniform(rng, enc, a));
  p.Add("attn.location", GlorotUniform(rng, cfg_.location_kernel * 2, a));
  p.Add("attn.v", GlorotUniform(rng, a, 1));
  const int proj_in =
      h + enc + (cfg_.variant != Variant::kGst ? cfg_.prosody_embedding_dim() : 0);
  p.Add("decoder.mel.w", GlorotUniform(rng, proj_in, c));
  p.Add("decoder.mel.b", Zeros(1, c));
  p.Add("decoder.gate.w", GlorotUniform(rng, proj_in, 1));
  p.Add("decoder.gate.b", Zeros(1, 1));
  const int pc = cfg_.postnet_channels;
  p.Add("postnet.conv0.w", GlorotUniform(rng, cfg_.postnet_kernel * c, pc));
  p.Add("postnet.conv0.b", Zeros(1, pc));
  p.Add("postnet.conv1.w", GlorotUniform(rng, cfg_.postnet_kernel * pc, c));
  p.Add("postnet.conv1.b", Zeros(1, c));

  const int d = cfg_.prosody_embedding_dim();
  p.Add("classifier.hidden.w", GlorotUniform(rng, d, cfg_.classifier_hidden));
  p.Add("classifier.hidden.b", Zeros(1, cfg_.classifier_hidden));
  p.Add("classifier.out.w", Zeros(cfg_.classifier_hidden, cfg_.n_speakers));
  p.Add("classifier.out.b", Zeros(1, cfg_.n_speakers));
}

Var ProsodyModel::P(ad::Tape& tape, const std::string& name) const {
  return tape.Param(params_.Get(name));
}

Var ProsodyModel::Lstm(ad::Tape& tape, Var inputs, const std::string& prefix,
                       bool reverse, int length) const {
  const Var wh = P(tape, prefix + ".wh");
  const int hidden = static_cast<int>(wh.rows());
  const Var projected =
      ad::Affine(inputs, P(tape, prefix + ".wx"), P(tape, prefix + ".b"));
  Var h = tape.Constant(Matrix::Zero(1, hidden));
  Var c = tape.Constant(Matrix::Zero(1, hidden));
  std::vector<Var> outputs(static_cast<size_t>(length));
  for (int k = 0; k < length; ++k) {
    const int t = reverse ? length - 1 - k : k;
    const Var gates = ad::Add(ad::SliceRows(projected, t, 1), ad::MatMul(h, wh));
    const Var hc = ad::LstmCell(gates, c);
    h = ad::SliceCols(hc, 0, hidden);
    c = ad::SliceCols(hc, hidden, hidden);
    outputs[static_cast<size_t>(t)] = h;
  }
  return ad::ConcatRows(outputs);
}

Var ProsodyModel::EncodeText(ad::Tape& tape, const PhonemeSequence& text) const {
  const int n = static_cast<int>(text.ids.size());
  const int valid = text.valid_length();
  if (valid == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty phoneme sequence");
  }
  for (int i = 0; i < n; ++i) {
    const int id = text.ids[static_cast<size_t>(i)];
    if (id < 0 || id >= cfg_.vocab_size) {
      throw Error(ErrorCode::kOutOfVocabulary,
                  "phoneme id " + std::to_string(id) + " outside vocabulary");
    }
    if (i >= valid && id != kPadId) {
      throw Error(ErrorCode::kInvalidArgument, "padding must be trailing");
    }
  }
  const std::vector<int> ids(text.ids.begin(), text.ids.begin() + valid);
  Var x = ad::Gather(P(tape, "encoder.embedding"), ids);
  for (int i = 0; i < cfg_.encoder_conv_layers; ++i) {
    const std::string name = "encoder.conv" + std::to_string(i);
    x = ad::Relu(ad::Conv1d(x, P(tape, name + ".w"), P(tape, name + ".b"),
                            cfg_.encoder_kernel));
  }
  const Var fwd = Lstm(tape, x, "encoder.fwd", false, valid);
  const Var bwd = Lstm(tape, x, "encoder.bwd", true, valid);
  Var out = Concat({fwd, bwd});
  if (valid < n) {
    const std::array<Var, 2> parts{
        out, tape.Constant(Matrix::Zero(n - valid, cfg_.encoder_dim()))};
    out = ad::ConcatRows(parts);
  }
  return out;
}

StyleGraph ProsodyModel::GstStyle(ad::Tape& tape, const Matrix& ref_mel) const {
  if (cfg_.variant != Variant::kGst) {
    throw Error(ErrorCode::kPrecondition, "only the gst variant has style tokens");
  }
  if (ref_mel.rows() == 0 || ref_mel.cols() != cfg_.mel_channels) {
    throw Error(ErrorCode::kInvalidArgument, "empty or malformed reference mel");
  }
  // Scalar standardization over the whole reference.
  const double mean = ref_mel.mean();
  const double sd = std::sqrt((ref_mel.array() - mean).square().mean());
  Var x = tape.Constant((ref_mel.array() - mean) / (sd + 1e-5));
  x = ad::Tanh(ad::Conv1d(x, P(tape, "gst.ref_conv0.w"), P(tape, "gst.ref_conv0.b"), 3));
  x = ad::Tanh(ad::Conv1d(x, P(tape, "gst.ref_conv1.w"), P(tape, "gst.ref_conv1.b"), 3));
  const int frames = static_cast<int>(ref_mel.rows());
  const Var states = Lstm(tape, x, "gst.ref_rnn", false, frames);
  // Mean over time; the last state alone mostly sees trailing silence.
  const Var query = ad::MeanRows(states);

  const Var keys_in = ad::Tanh(P(tape, "gst.tokens"));
  const int dk = cfg_.token_dim / cfg_.n_heads;
  StyleGraph out;
  out.weights.resize(cfg_.n_heads, cfg_.n_tokens);
  out.value_basis = Matrix::Zero(cfg_.n_heads * cfg_.n_tokens, cfg_.token_dim);
  std::vector<Var> heads;
  for (int hd = 0; hd < cfg_.n_heads; ++hd) {
    const std::string n = "gst.head" + std::to_string(hd);
    const Var q = ad::MatMul(query, P(tape, n + ".q"));
    const Var k = ad::MatMul(keys_in, P(tape, n + ".k"));
    const Var v = ad::MatMul(keys_in, P(tape, n + ".v"));
    const Var scores =
        ad::Scale(ad::MatMul(q, ad::Transpose(k)), 1.0 / std::sqrt(dk));
    const Var w = ad::SoftmaxRows(scores);
    out.weights.row(hd) = w.value();
    out.value_basis.block(hd * cfg_.n_tokens, hd * dk, cfg_.n_tokens, dk) =
        v.value();
    heads.push_back(ad::MatMul(w, v));
  }
  out.embedding = ad::ConcatCols(heads);
  return out;
}

Matrix ProsodyModel::F0Features(const PitchContour& contour) const {
  Matrix f(contour.size(), 2);
  for (int t = 0; t < contour.size(); ++t) {
    const bool v = contour.voiced[static_cast<size_t>(t)];
    f(t, 0) = NormalizeF0(contour.f0[static_cast<size_t>(t)], v, cfg_.f0_ref_hz);
    f(t, 1) = v ? 1.0 : 0.0;
  }
  return f;
}

Var ProsodyModel::PitchProsody(ad::Tape& tape, const PitchContour& contour) const {
  if (cfg_.variant == Variant::kGst) {
    throw Error(ErrorCode::kPrecondition, "gst variant has no pitch encoder");
  }
  if (contour.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty reference contour");
  }
  Matrix features = F0Features(contour);
  Matrix exc;
  if (uses_excitation()) {
    exc = HarmonicExcitation(contour, cfg_.excitation_stft);
    Matrix both(features.rows(), features.cols() + exc.cols());
    both << features, exc;
    features = std::move(both);
  }
  Var x = tape.Constant(std::move(features));
  x = ad::Relu(ad::Conv1d(x, P(tape, "pitch.conv0.w"), P(tape, "pitch.conv0.b"),
                          cfg_.prosody_kernel));
  x = ad::Relu(ad::Conv1d(x, P(tape, "pitch.conv1.w"), P(tape, "pitch.conv1.b"),
                          cfg_.prosody_kernel));
  const Var learned =
      ad::Tanh(ad::Affine(x, P(tape, "pitch.proj.w"), P(tape, "pitch.proj.b")));
  if (!uses_excitation()) return learned;
  return Concat({learned, tape.Constant(std::move(exc))});
}

Var ProsodyModel::EncodeProsody(ad::Tape& tape, const ProsodyReference& ref,
                                std::optional<Matrix>* token_weights) const {
  if (cfg_.variant != Variant::kGst) {
    if (ref.contour == nullptr) {
      throw Error(ErrorCode::kPrecondition,
                  VariantName(cfg_.variant) + " variant needs a reference contour");
    }
    return PitchProsody(tape, *ref.contour);
  }
  if (ref.mel == nullptr) {
    throw Error(ErrorCode::kPrecondition, "reference mel required");
  }
  StyleGraph style = GstStyle(tape, *ref.mel);
  if (token_weights != nullptr) *token_weights = style.weights;
  return style.embedding;
}

Var ProsodyModel::ClassifySpeaker(ad::Tape& tape, Var prosody) const {
  Var pooled = ad::MeanRows(prosody);
  if (cfg_.use_grl) pooled = ad::GradientReversal(pooled);
  const Var hidden = ad::Tanh(ad::Affine(pooled, P(tape, "classifier.hidden.w"),
                                         P(tape, "classifier.hidden.b")));
  return ad::Affine(hidden, P(tape, "classifier.out.w"), P(tape, "classifier.out.b"));
}

ForwardGraph ProsodyModel::Decode(ad::Tape& tape, const DecodeRequest& req,
                                  Var prosody) const {
  if (req.text == nullptr) throw Error(ErrorCode::kPrecondition, "missing text");
  if (req.speaker < 0 || req.speaker >= cfg_.n_speakers) {
    throw Error(ErrorCode::kInvalidArgument,
                "speaker " + std::to_string(req.speaker) + " out of range");
  }
  const bool hard = cfg_.variant == Variant::kHard;
  const bool soft = cfg_.variant == Variant::kSoft;
  const bool teacher = req.target_mel != nullptr;
  if (teacher && (req.target_mel->rows() == 0 ||
                  req.target_mel->cols() != cfg_.mel_channels)) {
    throw Error(ErrorCode::kInvalidArgument, "malformed target mel");
  }
  if (hard) {
    if (req.f0 == nullptr) {
      throw Error(ErrorCode::kPrecondition, "hard variant needs a reference F0");
    }
    if (teacher && req.f0->size() != req.target_mel->rows()) {
      throw Error(ErrorCode::kLengthMismatch,
                  "reference F0 length differs from target frame count");
    }
    if (req.f0->size() == 0) {
      throw Error(ErrorCode::kInvalidArgument, "empty reference F0");
    }
  } else if (req.f0 != nullptr) {
    throw Error(ErrorCode::kPrecondition,
                VariantName(cfg_.variant) + " variant takes no decoder F0");
  }

  const Var memory = EncodeText(tape, *req.text);
  const int n = static_cast<int>(memory.rows());
  std::vector<bool> mask(static_cast<size_t>(n), false);
  const int valid = req.text->valid_length();
  std::fill(mask.begin(), mask.begin() + valid, true);

  int steps = 0;
  if (teacher) {
    steps = static_cast<int>(req.target_mel->rows());
  } else if (hard) {
    steps = req.f0->size();
  } else {
    steps = req.max_steps > 0 ? req.max_steps
                              : cfg_.max_decoder_steps_per_symbol * valid;
  }

  const int c = cfg_.mel_channels;
  const int h = cfg_.decoder_dim;
  const Var processed = ad::MatMul(memory, P(tape, "attn.memory"));
  const Var w_query = P(tape, "attn.query");
  const Var w_loc = P(tape, "attn.location");
  const Var w_v = P(tape, "attn.v");
  Var p_processed, pw_query, pw_loc, pw_v;
  std::vector<bool> p_mask;
  const int l = static_cast<int>(prosody.rows());
  if (soft) {
    p_processed = ad::MatMul(prosody, P(tape, "pattn.memory"));
    pw_query = P(tape, "pattn.query");
    pw_loc = P(tape, "pattn.location");
    pw_v = P(tape, "pattn.v");
    p_mask.assign(static_cast<size_t>(l), true);
  }
  const Var pre0w = P(tape, "decoder.prenet0.w"), pre0b = P(tape, "decoder.prenet0.b");
  const Var pre1w = P(tape, "decoder.prenet1.w"), pre1b = P(tape, "decoder.prenet1.b");
  const Var rnn_wx = P(tape, "decoder.rnn.wx"), rnn_wh = P(tape, "decoder.rnn.wh");
  const Var rnn_b = P(tape, "decoder.rnn.b");
  const Var mel_w = P(tape, "decoder.mel.w"), mel_b = P(tape, "decoder.mel.b");
  const Var gate_w = P(tape, "decoder.gate.w"), gate_b = P(tape, "decoder.gate.b");
  const std::array<int, 1> spk{req.speaker};
  const Var speaker = ad::Gather(P(tape, "speaker.table"), spk);
  if (hard && l != req.f0->size()) {
    throw Error(ErrorCode::kLengthMismatch, "pitch encoding length differs from the F0 length");
  }

  auto attend = [&](Var query_h, Var processed_mem, Var mem, Var wq, Var wl,
                    Var v, AttentionState& st, const std::vector<bool>& m) {
    const std::array<Var, 2> loc_in{ad::Transpose(st.prev), ad::Transpose(st.cum)};
    const Var loc = ad::Conv1dNoBias(ad::ConcatCols(loc_in), wl, cfg_.location_kernel);
    const Var energy = ad::MatMul(
        ad::Tanh(ad::Add(ad::AddRow(processed_mem, ad::MatMul(query_h, wq)), loc)), v);
    const Var weights = ad::SoftmaxRows(ad::Transpose(energy), &m);
    st.prev = weights;
    st.cum = ad::Add(st.cum, weights);
    return ad::MatMul(weights, mem);
  };

  auto first_weights = [&](int len, const std::vector<bool>& m) {
    Matrix w = Matrix::Zero(1, len);
    (void)m;
    w(0, 0) = 1.0;
    return AttentionState{tape.Constant(w), tape.Constant(Matrix::Zero(1, len))};
  };

  Var hstate = tape.Constant(Matrix::Zero(1, h));
  Var cstate = tape.Constant(Matrix::Zero(1, h));
  Var context = tape.Constant(Matrix::Zero(1, cfg_.encoder_dim()));
  Var p_context;
  AttentionState text_att = first_weights(n, mask);
  AttentionState pros_att;
  if (soft) {
    p_context = tape.Constant(Matrix::Zero(1, cfg_.prosody_embedding_dim()));
    pros_att = first_weights(l, p_mask);
  }
  Var prev_frame = tape.Constant(Matrix::Zero(1, c));

  ForwardGraph out;
  std::vector<Var> mel_rows, gate_rows;
  Matrix text_attention(steps, n);
  Matrix prosody_attention;
  if (soft) prosody_attention.resize(steps, l);
  int produced = 0;
  for (int t = 0; t < steps; ++t) {
    Var pre = ad::Relu(ad::Affine(prev_frame, pre0w, pre0b));
    pre = Dropout(tape, pre, cfg_.prenet_dropout, req.dropout_rng);
    pre = ad::Relu(ad::Affine(pre, pre1w, pre1b));
    pre = Dropout(tape, pre, cfg_.prenet_dropout, req.dropout_rng);

    // Hard: the frame-t pitch encoding; soft: the prosody context; gst:
    // the broadcast style.
    const Var cond = hard ? ad::SliceRows(prosody, t, 1) : soft ? p_context : prosody;
    const std::array<Var, 4> in_parts{pre, context, speaker, cond};
    std::vector<Var> in(in_parts.begin(), in_parts.end());
    const Var x = ad::ConcatCols(in);
    const Var gates =
        ad::AddRow(ad::Add(ad::MatMul(x, rnn_wx), ad::MatMul(hstate, rnn_wh)), rnn_b);
    const Var hc = ad::LstmCell(gates, cstate);
    hstate = ad::SliceCols(hc, 0, h);
    cstate = ad::SliceCols(hc, h, h);

    context = attend(hstate, processed, memory, w_query, w_loc, w_v, text_att, mask);
    text_attention.row(t) = text_att.prev.value();
    Var proj_in;
    if (soft) {
      p_context = attend(hstate, p_processed, prosody, pw_query, pw_loc, pw_v,
                         pros_att, p_mask);
      prosody_attention.row(t) = pros_att.prev.value();
      out.prosody_attention_steps.push_back(pros_att.prev);
      proj_in = Concat({hstate, context, p_context});
    } else if (hard) {
      proj_in = Concat({hstate, context, cond});
    } else {
      proj_in = Concat({hstate, context});
    }
    const Var frame = ad::Affine(proj_in, mel_w, mel_b);
    const Var gate = ad::Sigmoid(ad::Affine(proj_in, gate_w, gate_b));
    mel_rows.push_back(frame);
    gate_rows.push_back(gate);
    ++produced;
    if (teacher) {
      prev_frame = tape.Constant(req.target_mel->row(t));
    } else {
      prev_frame = frame;
      if (!hard && produced >= cfg_.min_decoder_steps_per_symbol * valid &&
          gate.value()(0, 0) >= cfg_.gate_threshold) {
        break;
      }
    }
  }

  out.mel_pre = ad::ConcatRows(mel_rows);
  out.gate = ad::ConcatRows(gate_rows);
  out.text_attention = text_attention.topRows(produced);
  if (soft) out.prosody_attention = prosody_attention.topRows(produced);
  Var post = ad::Tanh(ad::Conv1d(out.mel_pre, P(tape, "postnet.conv0.w"),
                                 P(tape, "postnet.conv0.b"), cfg_.postnet_kernel));
  post = ad::Conv1d(post, P(tape, "postnet.conv1.w"), P(tape, "postnet.conv1.b"),
                    cfg_.postnet_kernel);
  out.mel_post = ad::Add(out.mel_pre, post);
  out.prosody = prosody;
  return out;
}

ForwardGraph ProsodyModel::Forward(ad::Tape& tape, const DecodeRequest& req,
                                   const ProsodyReference& ref) const {
  std::optional<Matrix> token_weights;
  // Hard: r always encodes the conditioning contour.
  ProsodyReference use = ref;
  if (cfg_.variant == Variant::kHard && req.f0 != nullptr) use.contour = req.f0;
  const Var prosody = EncodeProsody(tape, use, &token_weights);
  ForwardGraph out = Decode(tape, req, prosody);
  out.token_weights = std::move(token_weights);
  out.speaker_logits = ClassifySpeaker(tape, prosody);
  return out;
}

Var DiagonalAttentionPenalty(ad::Tape& tape, const std::vector<Var>& steps,
                             double width) {
  if (steps.empty()) throw Error(ErrorCode::kInvalidArgument, "no attention steps");
  if (!(width > 0.0)) throw Error(ErrorCode::kInvalidArgument, "width must be > 0");
  const auto t_len = static_cast<double>(steps.size());
  const auto l_len = static_cast<double>(steps[0].cols());
  std::vector<Var> terms;
  for (size_t t = 0; t < steps.size(); ++t) {
    Matrix w(1, steps[t].cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double d = static_cast<double>(j) / l_len - static_cast<double>(t) / t_len;
      w(0, j) = 1.0 - std::exp(-d * d / (2.0 * width * width));
    }
    terms.push_back(ad::Mul(steps[t], tape.Constant(std::move(w))));
  }
  return ad::Scale(ad::SumAll(ad::ConcatRows(terms)), 1.0 / t_len);
}

Matrix GateTargets(int frames) {
  Matrix g = Matrix::Zero(frames, 1);
  if (frames > 0) g(frames - 1, 0) = 1.0;
  return g;
}

LossGraph BuildLoss(const ForwardGraph& out, const Matrix& target_mel,
                    const Matrix& target_gate, int speaker, double lambda) {
  if (lambda < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  }
  LossGraph loss;
  loss.rmse = ad::RmseLoss(out.mel_pre, target_mel);
  if (out.mel_post.valid()) {
    loss.rmse = ad::Add(loss.rmse, ad::RmseLoss(out.mel_post, target_mel));
  }
  loss.bce = ad::BceLoss(out.gate, target_gate, kGateEpsilon);
  loss.ce = ad::CrossEntropyLoss(out.speaker_logits, speaker);
  loss.total = ad::Add(loss.rmse, loss.bce);
  if (lambda > 0.0) loss.total = ad::Add(loss.total, ad::Scale(loss.ce, lambda));
  return loss;
}

LossValues ComputeLoss(const ModelOutput& out, const Matrix& target_mel,
                       const RowVector& target_gate, int speaker,
                       double lambda) {
  if (lambda < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  }
  ad::Tape tape(false);
  ForwardGraph g;
  g.mel_pre = tape.Constant(out.mel_pre);
  if (out.mel_post.size() > 0) g.mel_post = tape.Constant(out.mel_post);
  g.gate = tape.Constant(out.gate.transpose());
  g.speaker_logits = tape.Constant(out.speaker_logits);
  const LossGraph l =
      BuildLoss(g, target_mel, target_gate.transpose(), speaker, lambda);
  return {l.total.value()(0, 0), l.rmse.value()(0, 0), l.bce.value()(0, 0),
          l.ce.value()(0, 0)};
}

ModelOutput ToModelOutput(const ForwardGraph& graph) {
  ModelOutput out;
  out.mel_pre = graph.mel_pre.value();
  if (graph.mel_post.valid()) out.mel_post = graph.mel_post.value();
  out.gate = graph.gate.value().col(0).transpose();
  out.text_attention = graph.text_attention;
  out.prosody_attention = graph.prosody_attention;
  out.prosody_embedding = graph.prosody.value();
  if (graph.speaker_logits.valid()) out.speaker_logits = graph.speaker_logits.value();
  out.token_weights = graph.token_weights;
  return out;
}

ModelOutput DecodeTeacherForced(const ProsodyModel& model,
                                const PhonemeSequence& text,
                                const ProsodyReference& ref, int speaker,
                                const Matrix& target_mel,
                                const PitchContour* ref_f0) {
  ad::Tape tape(false);
  DecodeRequest req;
  req.text = &text;
  req.speaker = speaker;
  req.target_mel = &target_mel;
  req.f0 = ref_f0;
  return ToModelOutput(model.Forward(tape, req, ref));
}

Matrix ProsodyEmbedding(const ProsodyModel& model, const ProsodyReference& ref,
                        std::optional<Matrix>* token_weights) {
  ad::Tape tape(false);
  return model.EncodeProsody(tape, ref, token_weights).value();
}

}  // namespace prosodykit
