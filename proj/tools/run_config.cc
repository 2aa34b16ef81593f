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

#include "run_config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "prosodykit/error.h"

namespace prosodykit::cli {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("invalid value '" + value + "' for " + key);
  }
  return out;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::pair<std::string, std::string>> ParseKeyValues(const std::string& text,
                                                                const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(n) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(origin + ":" + std::to_string(n) + ": empty key");
    out.emplace_back(key, Trim(line.substr(eq + 1)));
  }
  return out;
}

void RunConfig::Bind(const std::string& key, int& v) {
  fields_[key] = {[&v, key](const std::string& s) { v = ParseNumber<int>(key, s); },
                  [&v] { return std::to_string(v); }};
}

void RunConfig::Bind(const std::string& key, uint64_t& v) {
  fields_[key] = {[&v, key](const std::string& s) { v = ParseNumber<uint64_t>(key, s); },
                  [&v] { return std::to_string(v); }};
}

void RunConfig::Bind(const std::string& key, double& v) {
  fields_[key] = {[&v, key](const std::string& s) { v = ParseNumber<double>(key, s); },
                  [&v] { return FormatDouble(v); }};
}

void RunConfig::Bind(const std::string& key, bool& v) {
  fields_[key] = {[&v, key](const std::string& s) {
                    if (s == "true" || s == "1") {
                      v = true;
                    } else if (s == "false" || s == "0") {
                      v = false;
                    } else {
                      throw UsageError("invalid value '" + s + "' for " + key);
                    }
                  },
                  [&v] { return std::string(v ? "true" : "false"); }};
}

void RunConfig::Bind(const std::string& key, std::string& v) {
  fields_[key] = {[&v](const std::string& s) { v = s; }, [&v] { return v; }};
}

void RunConfig::BindPath(const std::string& key) { Bind(key, s_.paths[key]); }

RunConfig::RunConfig() {
  Bind("stft.sample_rate", s_.stft.sample_rate);
  Bind("stft.window_length", s_.stft.window_length);
  Bind("stft.hop_length", s_.stft.hop_length);
  Bind("stft.mel_channels", s_.stft.mel_channels);
  Bind("stft.fmin", s_.stft.fmin);
  Bind("stft.fmax", s_.stft.fmax);
  Bind("stft.energy_floor", s_.stft.energy_floor);

  Bind("f0.fmin_search", s_.f0.fmin_search);
  Bind("f0.fmax_search", s_.f0.fmax_search);
  Bind("f0.voicing_threshold", s_.f0.voicing_threshold);
  Bind("f0.silence_rms", s_.f0.silence_rms);

  auto& m = s_.model;
  fields_["model.variant"] = {[&m](const std::string& s) {
                                try {
                                  m.variant = ParseVariant(s);
                                } catch (const Error&) {
                                  throw UsageError("unknown variant '" + s +
                                                   "' (expected gst, hard or soft)");
                                }
                              },
                              [&m] { return VariantName(m.variant); }};
  Bind("model.embed_dim", m.embed_dim);
  Bind("model.encoder_conv_layers", m.encoder_conv_layers);
  Bind("model.encoder_kernel", m.encoder_kernel);
  Bind("model.encoder_lstm_dim", m.encoder_lstm_dim);
  Bind("model.speaker_dim", m.speaker_dim);
  Bind("model.prenet_dim", m.prenet_dim);
  Bind("model.prenet_dropout", m.prenet_dropout);
  Bind("model.decoder_dim", m.decoder_dim);
  Bind("model.attention_dim", m.attention_dim);
  Bind("model.location_kernel", m.location_kernel);
  Bind("model.postnet_channels", m.postnet_channels);
  Bind("model.postnet_kernel", m.postnet_kernel);
  Bind("model.ref_conv_channels", m.ref_conv_channels);
  Bind("model.ref_rnn_dim", m.ref_rnn_dim);
  Bind("model.n_tokens", m.n_tokens);
  Bind("model.token_dim", m.token_dim);
  Bind("model.n_heads", m.n_heads);
  Bind("model.prosody_conv_channels", m.prosody_conv_channels);
  Bind("model.prosody_kernel", m.prosody_kernel);
  Bind("model.prosody_dim", m.prosody_dim);
  Bind("model.classifier_hidden", m.classifier_hidden);
  Bind("model.use_grl", m.use_grl);
  Bind("model.f0_ref_hz", m.f0_ref_hz);
  Bind("model.f0_excitation", m.f0_excitation);
  Bind("model.gate_threshold", m.gate_threshold);
  Bind("model.min_decoder_steps_per_symbol", m.min_decoder_steps_per_symbol);
  Bind("model.max_decoder_steps_per_symbol", m.max_decoder_steps_per_symbol);

  auto& t = s_.train;
  Bind("lambda", t.lambda);
  Bind("seed", t.seed);
  Bind("train.lr", t.initial_lr);
  Bind("train.decay_steps", t.decay_steps);
  Bind("train.batch_size", t.batch_size);
  Bind("train.max_steps", t.max_steps);
  Bind("train.checkpoint_interval", t.checkpoint_interval);
  Bind("train.clip_norm", t.clip_norm);
  Bind("train.guided_attention_weight", t.guided_attention_weight);
  Bind("train.guided_attention_width", t.guided_attention_width);
  Bind("train.beta1", t.beta1);
  Bind("train.beta2", t.beta2);
  Bind("train.adam_eps", t.adam_eps);

  Bind("synth.griffin_lim_iterations", s_.synthesis.griffin_lim_iterations);
  Bind("synth.griffin_lim_seed", s_.synthesis.griffin_lim_seed);
  Bind("eval.n_cepstra", s_.eval.n_cepstra);
  Bind("eval.gpe_threshold", s_.eval.gpe_threshold);

  fields_["sweep.lambdas"] = {
      [this](const std::string& s) {
        std::vector<double> v;
        for (const auto& item : SplitList(s)) v.push_back(ParseNumber<double>("sweep.lambdas", item));
        if (v.empty()) throw UsageError("sweep.lambdas must not be empty");
        s_.sweep_lambdas = v;
      },
      [this] {
        std::string out;
        for (double l : s_.sweep_lambdas) out += (out.empty() ? "" : ",") + FormatDouble(l);
        return out;
      }};
  fields_["sweep.seeds"] = {
      [this](const std::string& s) {
        std::vector<uint64_t> v;
        for (const auto& item : SplitList(s)) v.push_back(ParseNumber<uint64_t>("sweep.seeds", item));
        if (v.empty()) throw UsageError("sweep.seeds must not be empty");
        s_.sweep_seeds = v;
      },
      [this] {
        std::string out;
        for (auto seed : s_.sweep_seeds) out += (out.empty() ? "" : ",") + std::to_string(seed);
        return out;
      }};

  for (const char* key : {"data.manifest", "data.features", "data.eval_manifest", "data.synthetic",
                          "transfer.checkpoint", "transfer.ref", "transfer.contour",
                          "eval.ref_dir", "eval.est_dir"}) {
    BindPath(key);
  }
  Bind("transfer.text", s_.text);
  Bind("transfer.speaker", s_.speaker);
  Bind("transfer.pitch_scale", s_.pitch_scale);
  Bind("transfer.fit_speaker", s_.fit_speaker);
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  const auto it = fields_.find(key);
  if (it == fields_.end()) throw UsageError("unknown configuration key '" + key + "'");
  it->second.set(value);
}

std::string RunConfig::Get(const std::string& key) const {
  const auto it = fields_.find(key);
  if (it == fields_.end()) throw UsageError("unknown configuration key '" + key + "'");
  return it->second.get();
}

std::vector<std::string> RunConfig::Keys() const {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields_) out.push_back(k);
  return out;
}

void RunConfig::LoadText(const std::string& text, const std::string& origin) {
  for (const auto& [k, v] : ParseKeyValues(text, origin)) {
    try {
      Set(k, v);
    } catch (const UsageError& e) {
      throw UsageError(origin + ": " + e.what());
    }
  }
}

void RunConfig::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  LoadText(buf.str(), path.string());
}

void RunConfig::Write(std::ostream& out) const {
  for (const auto& [k, f] : fields_) out << k << " = " << f.get() << '\n';
}

const Settings& RunConfig::settings() {
  s_.f0.sample_rate = s_.stft.sample_rate;
  s_.f0.window_length = s_.stft.window_length;
  s_.f0.hop_length = s_.stft.hop_length;
  s_.model.lambda = s_.train.lambda;
  s_.model.seed = s_.train.seed;
  s_.synthesis.stft = s_.stft;
  s_.synthesis.f0 = s_.f0;
  s_.eval.stft = s_.stft;
  s_.eval.f0 = s_.f0;
  return s_;
}

}  // namespace prosodykit::cli
