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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "prosodykit/error.h"

namespace prosodykit {
namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::Validate() const {
  if (!(initial_lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "initial_lr must be > 0");
  if (decay_steps < 1) throw Error(ErrorCode::kInvalidArgument, "decay_steps must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (max_steps < 0) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 0");
  if (lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (guided_attention_weight < 0.0 || !(guided_attention_width > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid guided attention settings");
  }
  if (checkpoint_interval < 0) {
    throw Error(ErrorCode::kInvalidArgument, "checkpoint_interval must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Adam constants");
  }
}

double LearningRate(int64_t step, const TrainConfig& cfg) {
  if (step < 0) throw Error(ErrorCode::kInvalidArgument, "step must be >= 0");
  return std::ldexp(cfg.initial_lr, -static_cast<int>(step / cfg.decay_steps));
}

int TrainingSet::SpeakerIndex(const std::string& name) const {
  const auto it = std::lower_bound(speakers.begin(), speakers.end(), name);
  if (it == speakers.end() || *it != name) {
    throw Error(ErrorCode::kInvalidArgument, "unknown speaker '" + name + "'");
  }
  return static_cast<int>(it - speakers.begin());
}

TrainingSet BuildTrainingSet(const std::vector<UtteranceRecord>& records,
                             const fs::path& feature_dir, const StftConfig& stft) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  TrainingSet set;
  std::set<std::string> symbols, speakers;
  for (const auto& r : records) {
    for (const auto& s : SplitPhonemes(r.phonemes)) symbols.insert(s);
    speakers.insert(r.speaker);
  }
  for (const auto& s : symbols) set.vocab.Add(s);
  set.speakers.assign(speakers.begin(), speakers.end());
  set.examples = BuildExamples(set, records, feature_dir, stft);
  const fs::path stats = feature_dir / "speaker_stats.csv";
  if (fs::exists(stats)) set.speaker_stats = ReadSpeakerStats(stats);
  return set;
}

std::vector<TrainingExample> BuildExamples(const TrainingSet& like,
                                           const std::vector<UtteranceRecord>& records,
                                           const fs::path& feature_dir,
                                           const StftConfig& stft) {
  std::vector<TrainingExample> out;
  for (const auto& r : records) {
    UtteranceFeatures f = LoadFeatures(feature_dir, r, stft);
    TrainingExample ex;
    ex.utt_id = f.utt_id;
    ex.text = like.vocab.Encode(r.phonemes);
    ex.speaker = like.SpeakerIndex(r.speaker);
    ex.mel = std::move(f.mel);
    ex.f0 = std::move(f.f0);
    out.push_back(std::move(ex));
  }
  return out;
}

void WriteLossLog(std::ostream& out, const std::vector<LossLogRow>& rows) {
  out << "step,lr,total,rmse,bce,ce\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.step << ',' << r.lr << ',' << r.total << ',' << r.rmse << ',' << r.bce
        << ',' << r.ce << '\n';
  }
}

void AdamOptimizer::Step(ad::ParameterSet& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params.items()) {
    if (p.grad.size() == 0) continue;
    auto [mit, m_new] = m_.try_emplace(name, Matrix::Zero(p.value.rows(), p.value.cols()));
    auto [vit, v_new] = v_.try_emplace(name, Matrix::Zero(p.value.rows(), p.value.cols()));
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * p.grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.adam_eps);
  }
}

double GlobalGradNorm(const ad::ParameterSet& params) {
  double sq = 0.0;
  for (const auto& [name, p] : params.items()) {
    if (p.grad.size() > 0) sq += p.grad.squaredNorm();
  }
  return std::sqrt(sq);
}

double ClipGradNorm(ad::ParameterSet& params, double max_norm) {
  const double norm = GlobalGradNorm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, p] : params.items()) {
      if (p.grad.size() > 0) p.grad *= s;
    }
  }
  return norm;
}

namespace {

constexpr std::array<char, 8> kMagic{'P', 'K', 'C', 'K', 'P', 'T', '\0', '\n'};
constexpr uint32_t kCheckpointVersion = 1;

json StftToJson(const StftConfig& s) {
  return {{"sample_rate", s.sample_rate},   {"window_length", s.window_length},
          {"hop_length", s.hop_length},     {"mel_channels", s.mel_channels},
          {"fmin", s.fmin},                 {"fmax", s.fmax},
          {"energy_floor", s.energy_floor}};
}

StftConfig StftFromJson(const json& j) {
  StftConfig s;
  j.at("sample_rate").get_to(s.sample_rate);
  j.at("window_length").get_to(s.window_length);
  j.at("hop_length").get_to(s.hop_length);
  j.at("mel_channels").get_to(s.mel_channels);
  j.at("fmin").get_to(s.fmin);
  j.at("fmax").get_to(s.fmax);
  j.at("energy_floor").get_to(s.energy_floor);
  return s;
}

json ModelToJson(const ModelConfig& c) {
  return json{{"variant", VariantName(c.variant)},
              {"vocab_size", c.vocab_size},
              {"n_speakers", c.n_speakers},
              {"mel_channels", c.mel_channels},
              {"embed_dim", c.embed_dim},
              {"encoder_conv_layers", c.encoder_conv_layers},
              {"encoder_kernel", c.encoder_kernel},
              {"encoder_lstm_dim", c.encoder_lstm_dim},
              {"speaker_dim", c.speaker_dim},
              {"prenet_dim", c.prenet_dim},
              {"prenet_dropout", c.prenet_dropout},
              {"decoder_dim", c.decoder_dim},
              {"attention_dim", c.attention_dim},
              {"location_kernel", c.location_kernel},
              {"postnet_channels", c.postnet_channels},
              {"postnet_kernel", c.postnet_kernel},
              {"ref_conv_channels", c.ref_conv_channels},
              {"ref_rnn_dim", c.ref_rnn_dim},
              {"n_tokens", c.n_tokens},
              {"token_dim", c.token_dim},
              {"n_heads", c.n_heads},
              {"prosody_conv_channels", c.prosody_conv_channels},
              {"prosody_kernel", c.prosody_kernel},
              {"prosody_dim", c.prosody_dim},
              {"classifier_hidden", c.classifier_hidden},
              {"lambda", c.lambda},
              {"use_grl", c.use_grl},
              {"f0_ref_hz", c.f0_ref_hz},
              {"f0_excitation", c.f0_excitation},
              {"excitation_stft", StftToJson(c.excitation_stft)},
              {"gate_threshold", c.gate_threshold},
              {"min_decoder_steps_per_symbol", c.min_decoder_steps_per_symbol},
              {"max_decoder_steps_per_symbol", c.max_decoder_steps_per_symbol},
              {"seed", c.seed}};
}

ModelConfig ModelFromJson(const json& j) {
  ModelConfig c;
  c.variant = ParseVariant(j.at("variant").get<std::string>());
#define PK_GET(field) j.at(#field).get_to(c.field)
  PK_GET(vocab_size);
  PK_GET(n_speakers);
  PK_GET(mel_channels);
  PK_GET(embed_dim);
  PK_GET(encoder_conv_layers);
  PK_GET(encoder_kernel);
  PK_GET(encoder_lstm_dim);
  PK_GET(speaker_dim);
  PK_GET(prenet_dim);
  PK_GET(prenet_dropout);
  PK_GET(decoder_dim);
  PK_GET(attention_dim);
  PK_GET(location_kernel);
  PK_GET(postnet_channels);
  PK_GET(postnet_kernel);
  PK_GET(ref_conv_channels);
  PK_GET(ref_rnn_dim);
  PK_GET(n_tokens);
  PK_GET(token_dim);
  PK_GET(n_heads);
  PK_GET(prosody_conv_channels);
  PK_GET(prosody_kernel);
  PK_GET(prosody_dim);
  PK_GET(classifier_hidden);
  PK_GET(lambda);
  PK_GET(use_grl);
  PK_GET(f0_ref_hz);
  PK_GET(f0_excitation);
  c.excitation_stft = StftFromJson(j.at("excitation_stft"));
  PK_GET(gate_threshold);
  PK_GET(min_decoder_steps_per_symbol);
  PK_GET(max_decoder_steps_per_symbol);
  PK_GET(seed);
#undef PK_GET
  return c;
}

void PutBytes(std::ostream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void PutLe(std::ostream& out, T v) {
  std::array<unsigned char, sizeof(T)> b{};
  for (size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  PutBytes(out, b.data(), b.size());
}

template <typename T>
T GetLe(std::istream& in) {
  std::array<unsigned char, sizeof(T)> b{};
  in.read(reinterpret_cast<char*>(b.data()), sizeof(T));
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void SaveCheckpoint(const fs::path& path, const Checkpoint& ckpt) {
  json header;
  header["model"] = ModelToJson(ckpt.model);
  header["stft"] = StftToJson(ckpt.stft);
  header["f0"] = {{"sample_rate", ckpt.f0.sample_rate},
                  {"window_length", ckpt.f0.window_length},
                  {"hop_length", ckpt.f0.hop_length},
                  {"fmin_search", ckpt.f0.fmin_search},
                  {"fmax_search", ckpt.f0.fmax_search},
                  {"voicing_threshold", ckpt.f0.voicing_threshold},
                  {"silence_rms", ckpt.f0.silence_rms}};
  header["vocabulary"] = ckpt.vocabulary;
  header["speakers"] = ckpt.speakers;
  json stats = json::object();
  for (const auto& [id, s] : ckpt.speaker_stats) {
    stats[id] = {{"log_f0_mean", s.log_f0_mean},
                 {"log_f0_std", s.log_f0_std},
                 {"n_voiced_frames", s.n_voiced_frames}};
  }
  header["speaker_stats"] = stats;
  header["step"] = ckpt.step;
  json shapes = json::array();
  for (const auto& [name, p] : ckpt.params.items()) {
    shapes.push_back({{"name", name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  header["params"] = shapes;
  const std::string text = header.dump();

  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + tmp.string());
    PutBytes(out, kMagic.data(), kMagic.size());
    PutLe<uint32_t>(out, kCheckpointVersion);
    PutLe<uint64_t>(out, text.size());
    PutBytes(out, text.data(), text.size());
    for (const auto& [name, p] : ckpt.params.items()) {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        uint64_t bits = 0;
        std::memcpy(&bits, p.value.data() + i, sizeof(bits));
        PutLe<uint64_t>(out, bits);
      }
    }
    if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot rename to " + path.string());
}

Checkpoint LoadCheckpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw Error(ErrorCode::kMalformedInput, "not a checkpoint: " + path.string());
  }
  const auto version = GetLe<uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kMalformedInput,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = GetLe<uint64_t>(in);
  if (!in || len > (1ull << 30)) {
    throw Error(ErrorCode::kMalformedInput, "corrupt checkpoint header");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.model = ModelFromJson(header.at("model"));
    ckpt.stft = StftFromJson(header.at("stft"));
    const json& f = header.at("f0");
    f.at("sample_rate").get_to(ckpt.f0.sample_rate);
    f.at("window_length").get_to(ckpt.f0.window_length);
    f.at("hop_length").get_to(ckpt.f0.hop_length);
    f.at("fmin_search").get_to(ckpt.f0.fmin_search);
    f.at("fmax_search").get_to(ckpt.f0.fmax_search);
    f.at("voicing_threshold").get_to(ckpt.f0.voicing_threshold);
    f.at("silence_rms").get_to(ckpt.f0.silence_rms);
    header.at("vocabulary").get_to(ckpt.vocabulary);
    header.at("speakers").get_to(ckpt.speakers);
    for (const auto& [id, v] : header.at("speaker_stats").items()) {
      ckpt.speaker_stats[id] = {v.at("log_f0_mean").get<double>(),
                                v.at("log_f0_std").get<double>(),
                                v.at("n_voiced_frames").get<int64_t>()};
    }
    header.at("step").get_to(ckpt.step);
    for (const auto& shape : header.at("params")) {
      const auto rows = shape.at("rows").get<Eigen::Index>();
      const auto cols = shape.at("cols").get<Eigen::Index>();
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const auto bits = GetLe<uint64_t>(in);
        std::memcpy(m.data() + i, &bits, sizeof(bits));
      }
      ckpt.params.Add(shape.at("name").get<std::string>(), std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput,
                "bad checkpoint header in " + path.string() + ": " + e.what());
  }
  if (!in) throw Error(ErrorCode::kMalformedInput, "truncated checkpoint " + path.string());
  return ckpt;
}

ProsodyModel ModelFromCheckpoint(const Checkpoint& ckpt) {
  ProsodyModel model(ckpt.model);
  auto& dst = model.params().items();
  if (dst.size() != ckpt.params.items().size()) {
    throw Error(ErrorCode::kMalformedInput, "checkpoint parameter set mismatch");
  }
  for (const auto& [name, p] : ckpt.params.items()) {
    const auto it = dst.find(name);
    if (it == dst.end() || it->second.value.rows() != p.value.rows() ||
        it->second.value.cols() != p.value.cols()) {
      throw Error(ErrorCode::kMalformedInput, "checkpoint parameter mismatch: " + name);
    }
    it->second.value = p.value;
  }
  return model;
}

ModelConfig ConfigureModel(ModelConfig base, const TrainingSet& data,
                           const StftConfig& stft) {
  base.vocab_size = data.vocab.size();
  base.n_speakers = static_cast<int>(data.speakers.size());
  base.mel_channels = data.examples.empty()
                          ? stft.mel_channels
                          : static_cast<int>(data.examples[0].mel.cols());
  base.excitation_stft = stft;
  return base;
}

namespace {

ProsodyReference SelfReference(const TrainingExample& ex) { return {&ex.mel, &ex.f0}; }

DecodeRequest TeacherRequest(const ProsodyModel& model, const TrainingExample& ex) {
  DecodeRequest req;
  req.text = &ex.text;
  req.speaker = ex.speaker;
  req.target_mel = &ex.mel;
  req.f0 = model.config().variant == Variant::kHard ? &ex.f0 : nullptr;
  return req;
}

}  // namespace

TrainResult Train(ProsodyModel& model, const TrainingSet& data, const TrainConfig& cfg,
                  const TrainOptions& opts) {
  cfg.Validate();
  if (data.examples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  for (const auto& ex : data.examples) {
    if (ex.mel.cols() != model.config().mel_channels || ex.f0.size() != ex.mel.rows()) {
      throw Error(ErrorCode::kLengthMismatch, "unaligned features for " + ex.utt_id);
    }
  }
  if (opts.out_dir) fs::create_directories(*opts.out_dir);

  std::mt19937_64 order_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();

  AdamOptimizer adam(cfg);
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  const auto checkpoint = [&](int64_t step) {
    if (!opts.out_dir) return;
    Checkpoint ckpt;
    ckpt.model = model.config();
    ckpt.stft = opts.stft;
    ckpt.f0 = opts.f0;
    ckpt.vocabulary = data.vocab.symbols();
    ckpt.speakers = data.speakers;
    ckpt.speaker_stats = data.speaker_stats;
    ckpt.step = step;
    ckpt.params = model.params();
    std::ostringstream name;
    name << "ckpt_" << std::setw(7) << std::setfill('0') << step << ".pkm";
    const fs::path p = *opts.out_dir / name.str();
    SaveCheckpoint(p, ckpt);
    result.checkpoints.push_back(p);
  };

  for (int64_t step = 0; step < cfg.max_steps; ++step) {
    model.params().ZeroGrad();
    LossLogRow row;
    row.step = step + 1;
    row.lr = LearningRate(step, cfg);
    const int b = cfg.batch_size;
    for (int k = 0; k < b; ++k) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const TrainingExample& ex = data.examples[order[cursor++]];
      ad::Tape tape;
      DecodeRequest req = TeacherRequest(model, ex);
      req.dropout_rng = &dropout_rng;
      const ForwardGraph g = model.Forward(tape, req, SelfReference(ex));
      const LossGraph loss =
          BuildLoss(g, ex.mel, GateTargets(static_cast<int>(ex.mel.rows())), ex.speaker,
                    cfg.lambda);
      const double total = loss.total.value()(0, 0);
      if (!std::isfinite(total)) {
        throw Error(ErrorCode::kNumericalFailure,
                    "non-finite loss at step " + std::to_string(step + 1) + " (" +
                        ex.utt_id + ")");
      }
      ad::Var objective = loss.total;
      if (!g.prosody_attention_steps.empty() && cfg.guided_attention_weight > 0.0) {
        objective = ad::Add(
            objective,
            ad::Scale(DiagonalAttentionPenalty(tape, g.prosody_attention_steps,
                                               cfg.guided_attention_width),
                      cfg.guided_attention_weight));
      }
      tape.Backward(ad::Scale(objective, 1.0 / b));
      row.total += total / b;
      row.rmse += loss.rmse.value()(0, 0) / b;
      row.bce += loss.bce.value()(0, 0) / b;
      row.ce += loss.ce.value()(0, 0) / b;
    }
    ClipGradNorm(model.params(), cfg.clip_norm);
    adam.Step(model.params(), row.lr);
    result.log.push_back(row);
    if (row.total < best) {
      best = row.total;
      result.best_step = row.step;
    }
    if (opts.on_step) opts.on_step(row.step, model, row);
    if (cfg.checkpoint_interval > 0 && row.step % cfg.checkpoint_interval == 0 &&
        row.step != cfg.max_steps) {
      checkpoint(row.step);
    }
  }
  checkpoint(cfg.max_steps);
  if (opts.out_dir) {
    std::ofstream log(*opts.out_dir / "loss.csv", std::ios::trunc);
    WriteLossLog(log, result.log);
  }
  return result;
}

double TeacherForcedRmse(const ProsodyModel& model, const TrainingSet& data) {
  double sum = 0.0;
  for (const auto& ex : data.examples) {
    ad::Tape tape(false);
    const ForwardGraph g = model.Forward(tape, TeacherRequest(model, ex), SelfReference(ex));
    sum += std::sqrt((g.mel_pre.value() - ex.mel).squaredNorm() /
                     static_cast<double>(ex.mel.size()));
  }
  return sum / static_cast<double>(data.examples.size());
}

RowVector PooledProsody(const ProsodyModel& model, const TrainingExample& ex) {
  const Matrix r = ProsodyEmbedding(model, SelfReference(ex));
  return r.colwise().mean();
}

namespace {

struct Logistic {
  Matrix w;
  RowVector b;
};

Logistic FitLogistic(const Matrix& x, const std::vector<int>& y, int k) {
  const double l2 = 1e-3;
  const double lr = 0.5;
  Logistic m{Matrix::Zero(x.cols(), k), RowVector::Zero(k)};
  const auto n = static_cast<double>(x.rows());
  for (int it = 0; it < 500; ++it) {
    Matrix logits = (x * m.w).rowwise() + m.b;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double mx = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - mx).exp();
      logits.row(i) /= logits.row(i).sum();
      logits(i, y[static_cast<size_t>(i)]) -= 1.0;
    }
    m.w -= lr * (x.transpose() * logits / n + l2 * m.w);
    m.b -= lr * logits.colwise().sum() / n;
  }
  return m;
}

}  // namespace

double LeaveOneOutProbeAccuracy(const Matrix& features, const std::vector<int>& labels,
                                int n_classes) {
  const auto n = features.rows();
  if (n < 2 || static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument, "probe needs >= 2 labelled rows");
  }
  int correct = 0;
  for (Eigen::Index hold = 0; hold < n; ++hold) {
    Matrix train(n - 1, features.cols());
    std::vector<int> y;
    for (Eigen::Index i = 0, j = 0; i < n; ++i) {
      if (i == hold) continue;
      train.row(j++) = features.row(i);
      y.push_back(labels[static_cast<size_t>(i)]);
    }
    const RowVector mean = train.colwise().mean();
    RowVector sd = ((train.rowwise() - mean).array().square().colwise().sum() /
                    static_cast<double>(train.rows()))
                       .sqrt();
    sd = sd.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
    const Matrix z = (train.rowwise() - mean).array().rowwise() / sd.array();
    const Logistic m = FitLogistic(z, y, n_classes);
    const RowVector q = (features.row(hold) - mean).array() / sd.array();
    const RowVector logits = q * m.w + m.b;
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    correct += static_cast<int>(best) == labels[static_cast<size_t>(hold)];
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double SpeakerProbeAccuracy(const ProsodyModel& model, const TrainingSet& data) {
  Matrix x(static_cast<Eigen::Index>(data.examples.size()),
           model.config().prosody_embedding_dim());
  std::vector<int> y;
  for (size_t i = 0; i < data.examples.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = PooledProsody(model, data.examples[i]);
    y.push_back(data.examples[i].speaker);
  }
  return LeaveOneOutProbeAccuracy(x, y, static_cast<int>(data.speakers.size()));
}

}  // namespace prosodykit
