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

#include "prosodykit/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "prosodykit/audio_io.h"
#include "prosodykit/error.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"

namespace prosodykit {
namespace fs = std::filesystem;

std::string UtteranceRecord::id() const { return audio_path.stem().string(); }

std::vector<std::string> Manifest::Speakers() const {
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.speaker);
  return {names.begin(), names.end()};
}

namespace {

std::vector<std::string> SplitPipes(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '|')) out.push_back(field);
  if (!line.empty() && line.back() == '|') out.emplace_back();
  return out;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Manifest ParseManifest(std::istream& in, const fs::path& base_dir) {
  Manifest m;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || Trim(line)[0] == '#') continue;
    const std::vector<std::string> fields = SplitPipes(line);
    const auto malformed = [&](const std::string& why) {
      return Error(ErrorCode::kMalformedInput,
                   "manifest line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() < 3 || fields.size() > 4) {
      throw malformed("expected 3 or 4 '|'-separated fields, got " +
                      std::to_string(fields.size()));
    }
    UtteranceRecord r;
    const std::string path = Trim(fields[0]);
    r.phonemes = Trim(fields[1]);
    r.speaker = Trim(fields[2]);
    if (fields.size() == 4) r.style = Trim(fields[3]);
    if (path.empty()) throw malformed("empty audio path");
    if (r.phonemes.empty()) throw malformed("empty phoneme string");
    if (r.speaker.empty()) throw malformed("empty speaker id");
    r.audio_path = path;
    if (r.audio_path.is_relative() && !base_dir.empty()) {
      r.audio_path = base_dir / r.audio_path;
    }
    if (!ids.insert(r.id()).second) {
      throw Error(ErrorCode::kDuplicateId, "manifest line " +
                                               std::to_string(line_no) +
                                               ": duplicate utterance id '" +
                                               r.id() + "'");
    }
    if (!fs::exists(r.audio_path)) {
      m.missing_audio.push_back({r.id(), "missing audio " + r.audio_path.string()});
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest LoadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open manifest " + path.string());
  return ParseManifest(in, path.parent_path());
}

void WriteManifest(std::ostream& out, const std::vector<UtteranceRecord>& records) {
  for (const auto& r : records) {
    out << r.audio_path.generic_string() << '|' << r.phonemes << '|' << r.speaker;
    if (!r.style.empty()) out << '|' << r.style;
    out << '\n';
  }
}

void WriteManifest(const fs::path& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  WriteManifest(out, records);
}

std::string ContourFamilyName(ContourFamily f) {
  switch (f) {
    case ContourFamily::kFlat: return "flat";
    case ContourFamily::kRising: return "rising";
    case ContourFamily::kFalling: return "falling";
    case ContourFamily::kPeakMid: return "peak_mid";
  }
  return "unknown";
}

ContourFamily ParseContourFamily(const std::string& name) {
  for (ContourFamily f : {ContourFamily::kFlat, ContourFamily::kRising,
                          ContourFamily::kFalling, ContourFamily::kPeakMid}) {
    if (ContourFamilyName(f) == name) return f;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown contour family '" + name + "'");
}

double ContourShape(ContourFamily f, double x) {
  x = std::clamp(x, 0.0, 1.0);
  switch (f) {
    case ContourFamily::kFlat: return 0.5;
    case ContourFamily::kRising: return x;
    case ContourFamily::kFalling: return 1.0 - x;
    case ContourFamily::kPeakMid: return std::sin(std::numbers::pi * x);
  }
  return 0.5;
}

std::vector<std::pair<double, double>> SyntheticCorpusSpec::DefaultRanges(int n) {
  std::vector<std::pair<double, double>> out;
  double lo = 100.0;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(lo, lo * 1.4);
    lo *= 1.4;
  }
  return out;
}

std::pair<double, double> SyntheticCorpusSpec::range(int speaker) const {
  if (f0_ranges.empty()) return DefaultRanges(n_speakers)[static_cast<size_t>(speaker)];
  return f0_ranges[static_cast<size_t>(speaker)];
}

void SyntheticCorpusSpec::Validate() const {
  const auto bad = [](const std::string& why) {
    return Error(ErrorCode::kInvalidArgument, "synthetic corpus: " + why);
  };
  if (n_speakers < 1) throw bad("n_speakers must be >= 1");
  if (utterances_per_speaker < 1) throw bad("utterances_per_speaker must be >= 1");
  if (vocab_size < 1) throw bad("vocab_size must be >= 1");
  if (min_symbols < 1 || max_symbols < min_symbols) throw bad("bad symbol count range");
  if (families.empty()) throw bad("no contour families");
  if (silence_seconds < 0.0) throw bad("negative silence");
  if (sample_rate < 8000) throw bad("sample_rate too low");
  if (!f0_ranges.empty() && static_cast<int>(f0_ranges.size()) != n_speakers) {
    throw bad("need one F0 range per speaker");
  }
  std::vector<std::pair<double, double>> r;
  for (int s = 0; s < n_speakers; ++s) r.push_back(range(s));
  for (const auto& [lo, hi] : r) {
    if (!(lo > 0.0 && hi > lo && hi < 0.45 * sample_rate)) throw bad("invalid F0 range");
  }
  std::sort(r.begin(), r.end());
  for (size_t i = 1; i < r.size(); ++i) {
    if (r[i].first < r[i - 1].second) throw bad("F0 ranges overlap");
  }
  if (excluded_family &&
      std::find(families.begin(), families.end(), *excluded_family) == families.end()) {
    throw bad("excluded family is not generated");
  }
}

std::string SyntheticSymbol(int i) { return "p" + std::to_string(i); }

double SyntheticSymbolDuration(int i) { return 0.06 + 0.02 * (i % 4); }

namespace {

// Harmonic amplitudes for symbol i: a formant bump over a 1/k tilt.
std::vector<double> Timbre(int symbol, double f0, int sample_rate) {
  const double formant = 400.0 + 350.0 * symbol;
  const double bw = 300.0;
  const int n = std::max(1, static_cast<int>(0.45 * sample_rate / f0));
  std::vector<double> amp(static_cast<size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double d = (k * f0 - formant) / bw;
    amp[static_cast<size_t>(k - 1)] = std::exp(-0.5 * d * d) + 0.3 / k;
  }
  return amp;
}

}  // namespace

Waveform RenderUtterance(const std::vector<int>& symbols, ContourFamily family,
                         double lo, double hi, double silence_seconds,
                         int sample_rate) {
  Waveform w;
  w.sample_rate = sample_rate;
  const auto silence = static_cast<size_t>(std::lround(silence_seconds * sample_rate));
  std::vector<size_t> bounds{0};
  for (int s : symbols) {
    bounds.push_back(bounds.back() +
                     static_cast<size_t>(std::lround(SyntheticSymbolDuration(s) * sample_rate)));
  }
  const size_t voiced = bounds.back();
  w.samples.assign(2 * silence + voiced, 0.0);
  const size_t fade = static_cast<size_t>(0.01 * sample_rate);
  double phase = 0.0;
  size_t seg = 0;
  for (size_t i = 0; i < voiced; ++i) {
    while (i >= bounds[seg + 1]) ++seg;
    const double x = voiced > 1 ? static_cast<double>(i) / (voiced - 1) : 0.0;
    const double f0 = lo + (hi - lo) * (0.1 + 0.8 * ContourShape(family, x));
    phase += 2.0 * std::numbers::pi * f0 / sample_rate;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    const auto cur = Timbre(symbols[seg], f0, sample_rate);
    std::vector<double> amp = cur;
    const size_t into = i - bounds[seg];
    if (seg > 0 && into < fade) {
      const auto prev = Timbre(symbols[seg - 1], f0, sample_rate);
      const double a = static_cast<double>(into) / fade;
      for (size_t k = 0; k < amp.size(); ++k) amp[k] = a * cur[k] + (1 - a) * prev[k];
    }
    double v = 0.0;
    for (size_t k = 0; k < amp.size(); ++k) {
      v += amp[k] * std::sin(static_cast<double>(k + 1) * phase);
    }
    const double env = std::min({1.0, static_cast<double>(i) / fade,
                                 static_cast<double>(voiced - i) / fade});
    w.samples[silence + i] = env * v;
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : w.samples) v *= 0.5 / peak;
  }
  return w;
}

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec,
                                        const fs::path& out_dir) {
  spec.Validate();
  std::error_code ec;
  fs::create_directories(out_dir / "wavs", ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure,
                "cannot create " + (out_dir / "wavs").string() + ": " + ec.message());
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> count(spec.min_symbols, spec.max_symbols);
  std::uniform_int_distribution<int> symbol(0, spec.vocab_size - 1);
  SyntheticCorpus corpus;
  const int nf = static_cast<int>(spec.families.size());
  for (int s = 0; s < spec.n_speakers; ++s) {
    const auto [lo, hi] = spec.range(s);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      const ContourFamily family = spec.families[static_cast<size_t>((u + s) % nf)];
      std::vector<int> symbols(static_cast<size_t>(count(rng)));
      for (int& x : symbols) x = symbol(rng);
      std::ostringstream name;
      name << "spk" << s << '_' << std::setw(3) << std::setfill('0') << u << ".wav";
      const fs::path rel = fs::path("wavs") / name.str();
      WriteWaveform(out_dir / rel,
                    RenderUtterance(symbols, family, lo, hi, spec.silence_seconds,
                                    spec.sample_rate),
                    WavEncoding::kPcm16);
      UtteranceRecord r;
      r.audio_path = rel;
      for (size_t i = 0; i < symbols.size(); ++i) {
        r.phonemes += (i ? " " : "") + SyntheticSymbol(symbols[i]);
      }
      r.speaker = "spk" + std::to_string(s);
      r.style = ContourFamilyName(family);
      if (spec.excluded_family && family == *spec.excluded_family) {
        corpus.heldout.push_back(std::move(r));
      } else {
        corpus.records.push_back(std::move(r));
      }
    }
  }
  corpus.manifest = out_dir / "manifest.txt";
  WriteManifest(corpus.manifest, corpus.records);
  if (spec.excluded_family) {
    corpus.heldout_manifest = out_dir / "heldout.txt";
    WriteManifest(*corpus.heldout_manifest, corpus.heldout);
  }
  for (auto* list : {&corpus.records, &corpus.heldout}) {
    for (auto& r : *list) r.audio_path = out_dir / r.audio_path;
  }
  return corpus;
}

namespace {

uint64_t Fnv1a(const std::string& bytes, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string Fingerprint(const fs::path& audio, const PrepareOptions& o) {
  std::ifstream in(audio, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + audio.string());
  std::ostringstream content;
  content << in.rdbuf();
  std::ostringstream cfg;
  cfg << std::setprecision(17) << o.stft.sample_rate << ' ' << o.stft.window_length
      << ' ' << o.stft.hop_length << ' ' << o.stft.mel_channels << ' ' << o.stft.fmin
      << ' ' << o.stft.fmax << ' ' << o.stft.energy_floor << ' ' << o.f0.window_length
      << ' ' << o.f0.fmin_search << ' ' << o.f0.fmax_search << ' '
      << o.f0.voicing_threshold << ' ' << o.f0.silence_rms;
  std::ostringstream key;
  key << std::hex << std::setw(16) << std::setfill('0')
      << Fnv1a(cfg.str(), Fnv1a(content.str()));
  return key.str();
}

std::string ReadSmallFile(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

}  // namespace

UtteranceFeatures LoadFeatures(const fs::path& feature_dir,
                               const UtteranceRecord& record,
                               const StftConfig& stft) {
  UtteranceFeatures f;
  f.utt_id = record.id();
  f.speaker = record.speaker;
  f.mel = ReadMelBinary(feature_dir / (f.utt_id + ".mel"));
  f.f0 = ReadContourCsv(feature_dir / (f.utt_id + ".f0.csv"), stft.hop_length,
                        stft.sample_rate);
  if (f.f0.size() != f.mel.rows()) {
    throw Error(ErrorCode::kLengthMismatch,
                "cached F0 and mel differ in length for " + f.utt_id);
  }
  return f;
}

PrepareReport PrepareFeatures(const std::vector<UtteranceRecord>& records,
                              const PrepareOptions& opts, const fs::path& out_dir) {
  opts.stft.Validate();
  opts.f0.Validate();
  if (opts.f0.sample_rate != opts.stft.sample_rate ||
      opts.f0.hop_length != opts.stft.hop_length) {
    throw Error(ErrorCode::kInvalidArgument,
                "F0 and STFT configurations must share sample rate and hop");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir.string());

  PrepareReport report;
  std::map<std::string, PitchContour> pooled;
  for (const auto& r : records) pooled[r.speaker];
  for (const auto& r : records) {
    const std::string id = r.id();
    const fs::path mel_path = out_dir / (id + ".mel");
    const fs::path f0_path = out_dir / (id + ".f0.csv");
    const fs::path key_path = out_dir / (id + ".key");
    PitchContour f0;
    try {
      const std::string key = Fingerprint(r.audio_path, opts);
      if (fs::exists(key_path) && fs::exists(mel_path) && fs::exists(f0_path) &&
          ReadSmallFile(key_path) == key) {
        f0 = LoadFeatures(out_dir, r, opts.stft).f0;
        ++report.cached;
      } else {
        const Waveform wave = LoadWaveform(r.audio_path, opts.stft.sample_rate);
        const MelSpectrogram mel = ComputeMelSpectrogram(wave, opts.stft);
        f0 = ExtractF0(wave, opts.f0);
        if (f0.size() != mel.num_frames()) {
          throw Error(ErrorCode::kLengthMismatch, "F0/mel frame mismatch for " + id);
        }
        WriteMelBinary(mel_path, mel.frames);
        WriteContourCsv(f0_path, f0);
        std::ofstream(key_path, std::ios::trunc) << key << '\n';
        ++report.computed;
      }
    } catch (const Error& e) {
      if (opts.fail_fast) throw;
      report.skipped.push_back({id, e.what()});
      continue;
    }
    PitchContour& all = pooled[r.speaker];
    all.f0.insert(all.f0.end(), f0.f0.begin(), f0.f0.end());
    all.voiced.insert(all.voiced.end(), f0.voiced.begin(), f0.voiced.end());
  }
  for (const auto& [speaker, contour] : pooled) {
    report.speaker_stats[speaker] = ComputeVocalRangeStats(contour);
  }
  WriteSpeakerStats(out_dir / "speaker_stats.csv", report.speaker_stats);
  return report;
}

void WriteSpeakerStats(const fs::path& path,
                       const std::map<std::string, VocalRangeStats>& stats) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << "speaker_id,log_f0_mean,log_f0_std,n_voiced_frames\n" << std::setprecision(17);
  for (const auto& [speaker, s] : stats) {
    out << speaker << ',' << s.log_f0_mean << ',' << s.log_f0_std << ','
        << s.n_voiced_frames << '\n';
  }
}

std::map<std::string, VocalRangeStats> ReadSpeakerStats(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "speaker_id,log_f0_mean,log_f0_std,n_voiced_frames") {
    throw Error(ErrorCode::kMalformedInput, "bad speaker stats header in " + path.string());
  }
  std::map<std::string, VocalRangeStats> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, mean, sd, n;
    if (!std::getline(row, id, ',') || !std::getline(row, mean, ',') ||
        !std::getline(row, sd, ',') || !std::getline(row, n)) {
      throw Error(ErrorCode::kMalformedInput,
                  "bad speaker stats row at line " + std::to_string(line_no));
    }
    try {
      out[id] = {std::stod(mean), std::stod(sd), std::stoll(n)};
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedInput,
                  "bad speaker stats row at line " + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace prosodykit
