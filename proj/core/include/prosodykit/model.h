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

#ifndef PROSODYKIT_MODEL_H_
#define PROSODYKIT_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "prosodykit/autodiff.h"
#include "prosodykit/signal_types.h"
#include "prosodykit/vocabulary.h"

namespace prosodykit {

// gst: global style tokens from the reference mel.
// hard: per-frame pitch encoding of the conditioning contour; decoder step t
//       reads frame t.
// soft: per-frame prosody embeddings computed from the reference pitch
//       contour only, read by a second decoder attention.
enum class Variant { kGst, kHard, kSoft };

std::string VariantName(Variant v);
Variant ParseVariant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kHard;
  int vocab_size = 2;
  int n_speakers = 1;
  int mel_channels = 80;

  int embed_dim = 64;
  int encoder_conv_layers = 2;
  int encoder_kernel = 5;
  int encoder_lstm_dim = 32;  // per direction
  int speaker_dim = 16;

  int prenet_dim = 64;
  double prenet_dropout = 0.5;
  int decoder_dim = 128;
  int attention_dim = 64;
  int location_kernel = 15;
  int postnet_channels = 64;
  int postnet_kernel = 5;

  // Reference encoder and style tokens (gst).
  int ref_conv_channels = 64;
  int ref_rnn_dim = 64;
  int n_tokens = 10;
  int token_dim = 32;
  int n_heads = 2;

  // Frame-level pitch encoder (hard, soft).
  int prosody_conv_channels = 32;
  int prosody_kernel = 5;
  int prosody_dim = 32;

  int classifier_hidden = 32;
  // Weight of the adversarial speaker term.
  double lambda = 0.0;
  // When false the speaker classifier sees the prosody embedding without
  // gradient reversal.
  bool use_grl = true;

  // Normalized F0 fed to the models: log(f0 / f0_ref_hz) on voiced frames.
  double f0_ref_hz = 200.0;
  // Also use HarmonicExcitation of the F0: it is an extra pitch encoder
  // input and is appended to each row of the pitch encoding.
  bool f0_excitation = true;
  // Analysis settings for the excitation features.
  StftConfig excitation_stft;
  double gate_threshold = 0.5;
  // Free-running soft/gst decoding ignores the gate before
  // min_decoder_steps_per_symbol * text length steps.
  int min_decoder_steps_per_symbol = 1;
  int max_decoder_steps_per_symbol = 10;
  uint64_t seed = 1;

  int encoder_dim() const { return 2 * encoder_lstm_dim; }
  // Width of one prosody embedding vector.
  int prosody_embedding_dim() const {
    if (variant == Variant::kGst) return token_dim;
    return prosody_dim + (f0_excitation ? mel_channels : 0);
  }
  void Validate() const;
};

// Everything produced by one decoder pass, as plain values.
struct ModelOutput {
  Matrix mel_pre;    // [T x C]
  Matrix mel_post;   // [T x C], empty when not produced
  RowVector gate;    // [T], probabilities
  Matrix text_attention;                    // [T x N]
  std::optional<Matrix> prosody_attention;  // [T x L], soft only
  Matrix prosody_embedding;                 // [L x D]
  RowVector speaker_logits;                 // [n_speakers]
  std::optional<Matrix> token_weights;      // [heads x n_tokens], gst only

  int num_frames() const { return static_cast<int>(mel_pre.rows()); }
};

struct LossValues {
  double total = 0.0;
  double rmse = 0.0;
  double bce = 0.0;
  double ce = 0.0;
};

inline constexpr double kGateEpsilon = 1e-7;

// Graph handles for one forward pass.
struct ForwardGraph {
  ad::Var mel_pre;
  ad::Var mel_post;
  ad::Var gate;  // [T x 1]
  ad::Var prosody;
  ad::Var speaker_logits;
  Matrix text_attention;
  std::optional<Matrix> prosody_attention;
  std::optional<Matrix> token_weights;
  // Soft only: per-step prosody attention rows, each [1 x L].
  std::vector<ad::Var> prosody_attention_steps;
};

// Penalty on attention mass away from the diagonal, for aligned reference
// and target: mean of A[t][j] * (1 - exp(-(j/L - t/T)^2 / (2 width^2))).
ad::Var DiagonalAttentionPenalty(ad::Tape& tape,
                                 const std::vector<ad::Var>& steps,
                                 double width);

struct LossGraph {
  ad::Var total;
  ad::Var rmse;
  ad::Var bce;
  ad::Var ce;
};

struct StyleGraph {
  ad::Var embedding;  // [1 x token_dim]
  Matrix weights;     // [heads x n_tokens]
  Matrix value_basis; // rows span the reachable outputs
};

// Reference material for the prosody path.
struct ProsodyReference {
  const Matrix* mel = nullptr;             // gst
  const PitchContour* contour = nullptr;   // hard, soft
};

struct DecodeRequest {
  const PhonemeSequence* text = nullptr;
  int speaker = 0;
  // Teacher forcing target; when null the decoder runs on its own output.
  const Matrix* target_mel = nullptr;
  // Hard variant: per-frame conditioning F0. In free-running mode its
  // length fixes the number of decoder steps.
  const PitchContour* f0 = nullptr;
  // Training-mode prenet dropout; null means evaluation mode.
  std::mt19937_64* dropout_rng = nullptr;
  // Upper bound for free-running soft/gst decoding; 0 selects
  // max_decoder_steps_per_symbol * text length.
  int max_steps = 0;
};

class ProsodyModel {
 public:
  explicit ProsodyModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  // [N x encoder_dim]; padding rows are zero.
  ad::Var EncodeText(ad::Tape& tape, const PhonemeSequence& text) const;
  StyleGraph GstStyle(ad::Tape& tape, const Matrix& ref_mel) const;
  // [L x prosody_embedding_dim], one row per reference frame: learned
  // features, followed by the excitation frames when enabled.
  ad::Var PitchProsody(ad::Tape& tape, const PitchContour& contour) const;
  // Dispatches on the variant.
  ad::Var EncodeProsody(ad::Tape& tape, const ProsodyReference& ref,
                        std::optional<Matrix>* token_weights) const;
  // Mean-pools r over its rows, applies gradient reversal (if enabled) and
  // returns [1 x n_speakers] logits.
  ad::Var ClassifySpeaker(ad::Tape& tape, ad::Var prosody) const;

  ForwardGraph Decode(ad::Tape& tape, const DecodeRequest& req,
                      ad::Var prosody) const;
  // Full pass: prosody encoding, decoding and speaker classification.
  ForwardGraph Forward(ad::Tape& tape, const DecodeRequest& req,
                       const ProsodyReference& ref) const;

  Matrix F0Features(const PitchContour& contour) const;
  bool uses_excitation() const {
    return cfg_.variant != Variant::kGst && cfg_.f0_excitation;
  }

 private:
  ad::Var P(ad::Tape& tape, const std::string& name) const;
  ad::Var Lstm(ad::Tape& tape, ad::Var inputs, const std::string& prefix,
               bool reverse, int length) const;

  ModelConfig cfg_;
  // Mutable so that const forward passes can register parameter leaves.
  mutable ad::ParameterSet params_;
};

// Builds the loss graph: RMSE on the pre- and post-refinement mel
// predictions (summed), gate BCE and lambda-weighted speaker CE.
LossGraph BuildLoss(const ForwardGraph& out, const Matrix& target_mel,
                    const Matrix& target_gate, int speaker, double lambda);

// Gate targets: 0 on all frames but the last.
Matrix GateTargets(int frames);

// Value-level loss. mel_post is skipped when empty. Throws on lambda < 0.
LossValues ComputeLoss(const ModelOutput& out, const Matrix& target_mel,
                       const RowVector& target_gate, int speaker,
                       double lambda);

ModelOutput ToModelOutput(const ForwardGraph& graph);

// Evaluation-mode teacher-forced pass. Hard requires ref_f0 with one value
// per target frame; gst and soft reject ref_f0.
ModelOutput DecodeTeacherForced(const ProsodyModel& model,
                                const PhonemeSequence& text,
                                const ProsodyReference& ref, int speaker,
                                const Matrix& target_mel,
                                const PitchContour* ref_f0);

// Value-level prosody embedding (evaluation mode).
Matrix ProsodyEmbedding(const ProsodyModel& model, const ProsodyReference& ref,
                        std::optional<Matrix>* token_weights = nullptr);

}  // namespace prosodykit

#endif  // PROSODYKIT_MODEL_H_
