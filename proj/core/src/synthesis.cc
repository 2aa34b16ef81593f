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

#include "prosodykit/synthesis.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prosodykit/audio_io.h"
#include "prosodykit/error.h"
#include "prosodykit/pitch.h"
#include "prosodykit/spectral.h"

namespace prosodykit {
namespace fs = std::filesystem;
using nlohmann::json;

PitchTransform PitchTransform::Scale(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::kInvalidArgument, "pitch scale must be > 0");
  }
  PitchTransform t;
  t.kind = Kind::kScale;
  t.factor = factor;
  return t;
}

PitchTransform PitchTransform::Replace(PitchContour contour) {
  PitchTransform t;
  t.kind = Kind::kReplace;
  t.replacement = std::move(contour);
  return t;
}

PitchTransform PitchTransform::Fit(const PitchContour& reference,
                                   const VocalRangeStats& target,
                                   std::string target_speaker, bool match_std) {
  PitchTransform t;
  t.kind = Kind::kFit;
  t.source = ComputeVocalRangeStats(reference);
  t.target = target;
  t.target_speaker = std::move(target_speaker);
  t.match_std = match_std;
  return t;
}

std::string PitchTransformKindName(PitchTransform::Kind kind) {
  switch (kind) {
    case PitchTransform::Kind::kNone: return "none";
    case PitchTransform::Kind::kScale: return "scale";
    case PitchTransform::Kind::kFit: return "fit";
    case PitchTransform::Kind::kReplace: return "replace";
  }
  return "unknown";
}

PitchContour ApplyTransform(const PitchContour& raw, const PitchTransform& t) {
  switch (t.kind) {
    case PitchTransform::Kind::kNone: return raw;
    case PitchTransform::Kind::kScale: return ScalePitch(raw, t.factor);
    case PitchTransform::Kind::kFit:
      return FitVocalRange(raw, t.source, t.target, t.match_std);
    case PitchTransform::Kind::kReplace: {
      PitchContour c = t.replacement;
      c.hop_length = raw.hop_length;
      c.sample_rate = raw.sample_rate;
      return c;
    }
  }
  return raw;
}

namespace {

json StatsJson(const VocalRangeStats& s) {
  return {{"log_f0_mean", s.log_f0_mean},
          {"log_f0_std", s.log_f0_std},
          {"n_voiced_frames", s.n_voiced_frames}};
}

VocalRangeStats StatsFromJson(const json& j) {
  return {j.at("log_f0_mean").get<double>(), j.at("log_f0_std").get<double>(),
          j.at("n_voiced_frames").get<int64_t>()};
}

}  // namespace

std::string TransformToJson(const PitchTransform& t) {
  json j;
  j["kind"] = PitchTransformKindName(t.kind);
  switch (t.kind) {
    case PitchTransform::Kind::kNone: break;
    case PitchTransform::Kind::kScale: j["factor"] = t.factor; break;
    case PitchTransform::Kind::kFit:
      j["source"] = StatsJson(t.source);
      j["target"] = StatsJson(t.target);
      j["target_speaker"] = t.target_speaker;
      j["match_std"] = t.match_std;
      break;
    case PitchTransform::Kind::kReplace: {
      j["f0_hz"] = t.replacement.f0;
      std::vector<int> voiced(t.replacement.voiced.begin(), t.replacement.voiced.end());
      j["voiced"] = voiced;
      break;
    }
  }
  return j.dump(2) + "\n";
}

PitchTransform TransformFromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    PitchTransform t;
    if (kind == "none") return t;
    if (kind == "scale") return PitchTransform::Scale(j.at("factor").get<double>());
    if (kind == "fit") {
      t.kind = PitchTransform::Kind::kFit;
      t.source = StatsFromJson(j.at("source"));
      t.target = StatsFromJson(j.at("target"));
      t.target_speaker = j.at("target_speaker").get<std::string>();
      t.match_std = j.at("match_std").get<bool>();
      return t;
    }
    if (kind == "replace") {
      t.kind = PitchTransform::Kind::kReplace;
      t.replacement.f0 = j.at("f0_hz").get<std::vector<double>>();
      for (int v : j.at("voiced").get<std::vector<int>>()) t.replacement.voiced.push_back(v != 0);
      if (t.replacement.f0.size() != t.replacement.voiced.size()) {
        throw Error(ErrorCode::kMalformedInput, "replacement arrays differ in length");
      }
      return t;
    }
    throw Error(ErrorCode::kMalformedInput, "unknown transform kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("bad transform record: ") + e.what());
  }
}

void WriteTransform(const fs::path& path, const PitchTransform& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << TransformToJson(t);
}

PitchTransform ReadTransform(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return TransformFromJson(s.str());
}

Synthesizer::Synthesizer(const ProsodyModel& model, Vocabulary vocab,
                         SynthesisOptions opts)
    : model_(model), vocab_(std::move(vocab)), opts_(std::move(opts)) {
  opts_.stft.Validate();
  opts_.f0.Validate();
  if (opts_.stft.mel_channels != model_.config().mel_channels) {
    throw Error(ErrorCode::kInvalidArgument, "model and STFT mel channels differ");
  }
}

void Synthesizer::Render(TransferResult& result) const {
  MelSpectrogram mel;
  mel.frames = result.mel;
  mel.hop_length = opts_.stft.hop_length;
  mel.sample_rate = opts_.stft.sample_rate;
  result.waveform = ReconstructWaveform(mel, opts_.stft, opts_.griffin_lim_iterations,
                                        opts_.griffin_lim_seed);
  result.output_f0 = ExtractF0(result.waveform, opts_.f0);
}

namespace {

void CheckSpeaker(const ProsodyModel& model, int speaker) {
  if (speaker < 0 || speaker >= model.config().n_speakers) {
    throw Error(ErrorCode::kInvalidArgument,
                "target speaker " + std::to_string(speaker) + " out of range");
  }
}

void FillFromGraph(TransferResult& r, const ForwardGraph& g) {
  r.mel = g.mel_post.value();
  r.text_attention = g.text_attention;
  r.prosody_attention = g.prosody_attention;
  r.token_weights = g.token_weights;
  r.prosody_embedding = g.prosody.value();
}

}  // namespace

TransferResult Synthesizer::TransferHard(const PhonemeSequence& text, int speaker,
                                         const Matrix& ref_mel,
                                         const PitchContour& ref_f0,
                                         const PitchTransform& transform) const {
  if (model_.config().variant != Variant::kHard) {
    throw Error(ErrorCode::kPrecondition, "hard transfer needs a hard model");
  }
  CheckSpeaker(model_, speaker);
  if (ref_f0.size() < kMinReferenceFrames || ref_mel.rows() < kMinReferenceFrames) {
    throw Error(ErrorCode::kSignalTooShort,
                "reference shorter than " + std::to_string(kMinReferenceFrames) + " frames");
  }
  if (transform.kind == PitchTransform::Kind::kReplace &&
      transform.replacement.size() != ref_f0.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "replacement contour has " + std::to_string(transform.replacement.size()) +
                    " frames, reference has " + std::to_string(ref_f0.size()));
  }
  TransferResult r;
  r.reference_f0 = ref_f0;
  r.transform = transform;
  r.conditioning = ApplyTransform(ref_f0, transform);
  ad::Tape tape(false);
  DecodeRequest req;
  req.text = &text;
  req.speaker = speaker;
  req.f0 = &r.conditioning;
  FillFromGraph(r, model_.Forward(tape, req, {&ref_mel, nullptr}));
  Render(r);
  return r;
}

TransferResult Synthesizer::TransferSoft(const PhonemeSequence& text, int speaker,
                                         const PitchContour& ref_f0,
                                         const PitchTransform& transform) const {
  if (model_.config().variant != Variant::kSoft) {
    throw Error(ErrorCode::kPrecondition, "soft transfer needs a soft model");
  }
  CheckSpeaker(model_, speaker);
  if (ref_f0.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty reference contour");
  }
  TransferResult r;
  r.reference_f0 = ref_f0;
  r.transform = transform;
  r.conditioning = ApplyTransform(ref_f0, transform);
  if (r.conditioning.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty conditioning contour");
  }
  ad::Tape tape(false);
  DecodeRequest req;
  req.text = &text;
  req.speaker = speaker;
  FillFromGraph(r, model_.Forward(tape, req, {nullptr, &r.conditioning}));
  Render(r);
  return r;
}

TransferResult Synthesizer::TransferGst(const PhonemeSequence& text, int speaker,
                                        const Matrix& ref_mel) const {
  if (model_.config().variant != Variant::kGst) {
    throw Error(ErrorCode::kPrecondition, "gst transfer needs a gst model");
  }
  CheckSpeaker(model_, speaker);
  if (ref_mel.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "empty reference");
  TransferResult r;
  ad::Tape tape(false);
  DecodeRequest req;
  req.text = &text;
  req.speaker = speaker;
  FillFromGraph(r, model_.Forward(tape, req, {&ref_mel, nullptr}));
  Render(r);
  return r;
}

TransferResult Synthesizer::Transfer(const TransferRequest& req) const {
  const PhonemeSequence text = vocab_.Encode(req.text);
  if (req.reference.samples.empty()) {
    throw Error(ErrorCode::kEmptyAudio, "empty reference audio");
  }
  Waveform ref = req.reference;
  if (ref.sample_rate != opts_.stft.sample_rate) {
    ref.samples = Resample(ref.samples, ref.sample_rate, opts_.stft.sample_rate);
    ref.sample_rate = opts_.stft.sample_rate;
  }
  const Variant v = model_.config().variant;
  if (v == Variant::kGst) {
    if (req.transform.kind != PitchTransform::Kind::kNone) {
      throw Error(ErrorCode::kPrecondition, "gst variant does not accept pitch transforms");
    }
    return TransferGst(text, req.target_speaker, ComputeMelSpectrogram(ref, opts_.stft).frames);
  }
  const PitchContour f0 = ExtractF0(ref, opts_.f0);
  if (v == Variant::kSoft) return TransferSoft(text, req.target_speaker, f0, req.transform);
  return TransferHard(text, req.target_speaker, ComputeMelSpectrogram(ref, opts_.stft).frames,
                      f0, req.transform);
}

void WriteMatrixCsv(const fs::path& path, const Matrix& m, const std::string& row_label) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << row_label;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << ",w" << c;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << m(r, c);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

void WriteBundle(const fs::path& dir, const TransferResult& r) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string());
  WriteWaveform(dir / "out.wav", r.waveform, WavEncoding::kFloat32);
  WriteMelBinary(dir / "mel.bin", r.mel);
  WriteContourCsv(dir / "f0.csv", r.output_f0);
  WriteMatrixCsv(dir / "attention.csv", r.text_attention);
  if (r.prosody_attention) WriteMatrixCsv(dir / "prosody_attention.csv", *r.prosody_attention);
  WriteTransform(dir / "transform.json", r.transform);
}

fs::path EmitPitchFigure(const std::vector<NamedContour>& series, const fs::path& svg_path) {
  if (series.empty()) throw Error(ErrorCode::kInvalidArgument, "no contours to plot");
  for (const auto& s : series) {
    if (s.name.empty() || s.name.find_first_of(",\n\"") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "invalid series name '" + s.name + "'");
    }
    if (s.contour.voiced.size() != s.contour.f0.size()) {
      throw Error(ErrorCode::kInvalidArgument, "malformed contour " + s.name);
    }
  }
  fs::path csv_path = svg_path;
  csv_path.replace_extension(".csv");
  {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw Error(ErrorCode::kIoFailure, "cannot write " + csv_path.string());
    csv << "series,frame,f0_hz,voiced\n" << std::setprecision(17);
    for (const auto& s : series) {
      for (int t = 0; t < s.contour.size(); ++t) {
        csv << s.name << ',' << t << ',' << s.contour.f0[static_cast<size_t>(t)] << ','
            << (s.contour.voiced[static_cast<size_t>(t)] ? 1 : 0) << '\n';
      }
    }
    if (!csv) throw Error(ErrorCode::kIoFailure, "write failed: " + csv_path.string());
  }

  const double width = 720, height = 360, left = 60, right = 120, top = 20, bottom = 40;
  int max_frames = 1;
  double f_max = 0.0;
  for (const auto& s : series) {
    max_frames = std::max(max_frames, s.contour.size());
    for (size_t t = 0; t < s.contour.f0.size(); ++t) {
      if (s.contour.voiced[t]) f_max = std::max(f_max, s.contour.f0[t]);
    }
  }
  f_max = f_max > 0.0 ? std::ceil(f_max * 1.1 / 50.0) * 50.0 : 500.0;
  const double pw = width - left - right, ph = height - top - bottom;
  const auto x_of = [&](int t) { return left + pw * t / std::max(1, max_frames - 1); };
  const auto y_of = [&](double f) { return top + ph * (1.0 - f / f_max); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ofstream svg(svg_path, std::ios::trunc);
  if (!svg) throw Error(ErrorCode::kIoFailure, "cannot write " + svg_path.string());
  svg << std::fixed << std::setprecision(2)
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double f = f_max * k / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y_of(f) + 4
        << "\" text-anchor=\"end\">" << static_cast<int>(f) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\">frame</text>\n"
      << "<text x=\"14\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 14 "
      << top + ph / 2 << ")\" text-anchor=\"middle\">F0 (Hz)</text>\n";
  for (size_t i = 0; i < series.size(); ++i) {
    const auto& c = series[i].contour;
    const char* color = kColors[i % 8];
    std::string points;
    const auto flush = [&] {
      if (!points.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
            << points << "\"/>\n";
      }
      points.clear();
    };
    for (int t = 0; t < c.size(); ++t) {
      if (!c.voiced[static_cast<size_t>(t)]) {
        flush();
        continue;
      }
      std::ostringstream p;
      p << std::fixed << std::setprecision(2) << x_of(t) << ',' << y_of(c.f0[static_cast<size_t>(t)])
        << ' ';
      points += p.str();
    }
    flush();
    const double ly = top + 14.0 * static_cast<double>(i + 1);
    svg << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + pw + 34 << "\" y=\"" << ly << "\">" << series[i].name
        << "</text>\n";
  }
  svg << "</svg>\n";
  if (!svg) throw Error(ErrorCode::kIoFailure, "write failed: " + svg_path.string());
  return csv_path;
}

std::vector<NamedContour> ReadPitchFigureCsv(const fs::path& path, int hop_length,
                                             int sample_rate) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "series,frame,f0_hz,voiced") {
    throw Error(ErrorCode::kMalformedInput, "bad figure CSV header in " + path.string());
  }
  std::vector<NamedContour> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string name, frame, f0, voiced;
    if (!std::getline(row, name, ',') || !std::getline(row, frame, ',') ||
        !std::getline(row, f0, ',') || !std::getline(row, voiced)) {
      throw Error(ErrorCode::kMalformedInput, "bad figure row at line " + std::to_string(line_no));
    }
    if (out.empty() || out.back().name != name) {
      out.push_back({name, {}});
      out.back().contour.hop_length = hop_length;
      out.back().contour.sample_rate = sample_rate;
    }
    PitchContour& c = out.back().contour;
    try {
      if (std::stoul(frame) != c.f0.size()) throw Error(ErrorCode::kMalformedInput, "");
      c.f0.push_back(std::stod(f0));
      c.voiced.push_back(voiced == "1");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedInput, "bad figure row at line " + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace prosodykit
