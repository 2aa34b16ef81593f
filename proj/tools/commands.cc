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

#include "commands.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "prosodykit/audio_io.h"
#include "prosodykit/error.h"
#include "prosodykit/pitch.h"
#include "prosodykit/sweep.h"
#include "prosodykit/synthesis.h"
#include "prosodykit/training.h"

namespace prosodykit::cli {

namespace fs = std::filesystem;

namespace {

std::string Timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return out.str();
}

const std::string& Require(const Settings& s, const std::string& key, const std::string& flag) {
  const std::string& v = s.paths.at(key);
  if (v.empty()) throw UsageError("missing " + flag);
  return v;
}

std::vector<UtteranceRecord> Usable(const Manifest& m) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : m.records) {
    const bool missing = std::any_of(m.missing_audio.begin(), m.missing_audio.end(),
                                     [&](const ManifestIssue& i) { return i.utt_id == r.id(); });
    if (missing) {
      std::cout << "skipped " << r.id() << ": missing audio " << r.audio_path.string() << '\n';
    } else {
      out.push_back(r);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kMalformedInput, "no usable utterances");
  return out;
}

// Uses data.features when given, otherwise prepares into <run>/features.
fs::path EnsureFeatures(const Settings& s, const fs::path& run,
                        const std::vector<UtteranceRecord>& records) {
  const std::string& given = s.paths.at("data.features");
  if (!given.empty()) return given;
  const fs::path dir = run / "features";
  PrepareOptions opts;
  opts.stft = s.stft;
  opts.f0 = s.f0;
  opts.fail_fast = true;
  const PrepareReport rep = PrepareFeatures(records, opts, dir);
  std::cout << "features: " << dir.string() << " (" << rep.computed << " computed)\n";
  return dir;
}

TrainingSet LoadTrainingSet(const Settings& s, const fs::path& run) {
  const Manifest m = LoadManifest(Require(s, "data.manifest", "--manifest"));
  const auto records = Usable(m);
  const fs::path feats = EnsureFeatures(s, run, records);
  return BuildTrainingSet(records, feats, s.stft);
}

ContourFamily FamilyOrUsage(const std::string& name) {
  try {
    return ParseContourFamily(name);
  } catch (const Error&) {
    throw UsageError("unknown contour family '" + name + "'");
  }
}

}  // namespace

fs::path OpenRunDirectory(const RunContext& ctx, RunConfig& cfg,
                          const std::vector<std::string>& extra_lines, bool reuse) {
  fs::path dir = ctx.out;
  if (dir.empty()) {
    const fs::path base = fs::path("runs") / (ctx.command + "-" + Timestamp());
    dir = base;
    for (int i = 2; fs::exists(dir); ++i) dir = base.string() + "-" + std::to_string(i);
  } else if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw UsageError(dir.string() + " exists and is not a directory");
  } else if (fs::exists(dir) && !fs::is_empty(dir) && !ctx.force && !reuse) {
    throw UsageError(dir.string() + " already exists; pass --force to overwrite");
  }
  fs::create_directories(dir);
  std::ofstream out(dir / "config.txt");
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + (dir / "config.txt").string());
  out << "# prosodykit " << ctx.command << '\n';
  out << "# " << ctx.command_line << '\n';
  for (const auto& line : extra_lines) out << "# " << line << '\n';
  cfg.Write(out);
  std::cout << "run directory: " << dir.string() << '\n';
  return dir;
}

SyntheticCorpusSpec ReadSyntheticSpec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read synthetic spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  SyntheticCorpusSpec spec;
  const auto num = [&](const std::string& k, const std::string& v) {
    try {
      size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw UsageError(path.string() + ": invalid value '" + v + "' for " + k);
    }
  };
  const auto list = [](const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  };
  for (const auto& [k, v] : ParseKeyValues(buf.str(), path.string())) {
    if (k == "n_speakers") {
      spec.n_speakers = static_cast<int>(num(k, v));
    } else if (k == "utterances_per_speaker") {
      spec.utterances_per_speaker = static_cast<int>(num(k, v));
    } else if (k == "vocab_size") {
      spec.vocab_size = static_cast<int>(num(k, v));
    } else if (k == "min_symbols") {
      spec.min_symbols = static_cast<int>(num(k, v));
    } else if (k == "max_symbols") {
      spec.max_symbols = static_cast<int>(num(k, v));
    } else if (k == "silence_seconds") {
      spec.silence_seconds = num(k, v);
    } else if (k == "sample_rate") {
      spec.sample_rate = static_cast<int>(num(k, v));
    } else if (k == "seed") {
      spec.seed = static_cast<uint64_t>(num(k, v));
    } else if (k == "families") {
      spec.families.clear();
      for (const auto& f : list(v)) spec.families.push_back(FamilyOrUsage(f));
    } else if (k == "excluded_family") {
      spec.excluded_family = FamilyOrUsage(v);
    } else if (k == "f0_ranges") {
      // lo-hi pairs, e.g. 100-140,150-200
      spec.f0_ranges.clear();
      for (const auto& r : list(v)) {
        const auto dash = r.find('-');
        if (dash == std::string::npos) throw UsageError(path.string() + ": bad range '" + r + "'");
        spec.f0_ranges.emplace_back(num(k, r.substr(0, dash)), num(k, r.substr(dash + 1)));
      }
    } else {
      throw UsageError(path.string() + ": unknown key '" + k + "'");
    }
  }
  spec.Validate();
  return spec;
}

int RunPrepare(const RunContext& ctx, RunConfig& cfg, bool fail_fast) {
  const Settings& s = cfg.settings();
  const std::string& synthetic = s.paths.at("data.synthetic");
  const std::string& manifest = s.paths.at("data.manifest");
  if (synthetic.empty() == manifest.empty()) {
    throw UsageError("pass exactly one of --manifest or --synthetic");
  }
  // The output is a feature cache: reusing it is the cache-hit path.
  const fs::path out = OpenRunDirectory(ctx, cfg, {}, true);
  std::vector<UtteranceRecord> records;
  if (!synthetic.empty()) {
    const SyntheticCorpus c = GenerateSyntheticCorpus(ReadSyntheticSpec(synthetic), out / "corpus");
    std::cout << "manifest: " << c.manifest.string() << '\n';
    if (c.heldout_manifest) std::cout << "heldout manifest: " << c.heldout_manifest->string() << '\n';
    records = c.records;
    records.insert(records.end(), c.heldout.begin(), c.heldout.end());
  } else {
    records = LoadManifest(manifest).records;
  }
  PrepareOptions opts;
  opts.stft = s.stft;
  opts.f0 = s.f0;
  opts.fail_fast = fail_fast;
  const PrepareReport rep = PrepareFeatures(records, opts, out);
  for (const auto& issue : rep.skipped) {
    std::cout << "skipped " << issue.utt_id << ": " << issue.message << '\n';
  }
  std::cout << "prepared " << rep.computed << " computed, " << rep.cached << " cached, "
            << rep.skipped.size() << " skipped\n";
  std::cout << "speaker stats: " << (out / "speaker_stats.csv").string() << '\n';
  if (rep.computed + rep.cached == 0) {
    throw Error(ErrorCode::kMalformedInput, "no utterance could be prepared");
  }
  return 0;
}

int RunTrain(const RunContext& ctx, RunConfig& cfg) {
  const Settings& s = cfg.settings();
  Require(s, "data.manifest", "--manifest");
  s.train.Validate();
  const fs::path run = OpenRunDirectory(ctx, cfg);
  const TrainingSet data = LoadTrainingSet(s, run);
  ProsodyModel model(ConfigureModel(s.model, data, s.stft));
  std::cout << "training " << VariantName(s.model.variant) << " on " << data.examples.size()
            << " utterances, " << data.speakers.size() << " speakers, "
            << model.params().NumScalars() << " parameters\n";
  TrainOptions opts;
  opts.out_dir = run;
  opts.stft = s.stft;
  opts.f0 = s.f0;
  const int every = std::max(1, s.train.max_steps / 20);
  opts.on_step = [&](int64_t step, const ProsodyModel&, const LossLogRow& row) {
    if (step % every != 0 && step != s.train.max_steps) return;
    std::cout << "step " << step << "/" << s.train.max_steps << " lr=" << row.lr
              << " total=" << row.total << " rmse=" << row.rmse << " bce=" << row.bce
              << " ce=" << row.ce << '\n';
  };
  const TrainResult r = Train(model, data, s.train, opts);
  std::cout << "loss log: " << (run / "loss.csv").string() << '\n';
  for (const auto& c : r.checkpoints) std::cout << "checkpoint: " << c.string() << '\n';
  return 0;
}

int RunTransfer(const RunContext& ctx, RunConfig& cfg) {
  const Settings& s = cfg.settings();
  const Checkpoint ckpt = LoadCheckpoint(Require(s, "transfer.checkpoint", "--checkpoint"));
  const Variant v = ckpt.model.variant;
  const std::string& ref_path = s.paths.at("transfer.ref");
  if (ref_path.empty()) {
    throw UsageError(VariantName(v) + " variant requires --ref" +
                     (v == Variant::kHard ? " (a reference recording of the same sentence)" : ""));
  }
  if (s.text.empty()) throw UsageError("missing --text");
  const std::string& contour = s.paths.at("transfer.contour");
  const int n_transforms =
      (s.pitch_scale != 0.0) + !s.fit_speaker.empty() + !contour.empty();
  if (n_transforms > 1) {
    throw UsageError("--pitch-scale, --fit-speaker and --contour are mutually exclusive");
  }
  const auto speaker_index = [&](const std::string& name) {
    const auto it = std::find(ckpt.speakers.begin(), ckpt.speakers.end(), name);
    if (it == ckpt.speakers.end()) {
      std::string known;
      for (const auto& k : ckpt.speakers) known += (known.empty() ? "" : ", ") + k;
      throw UsageError("unknown speaker '" + name + "' (known: " + known + ")");
    }
    return static_cast<int>(it - ckpt.speakers.begin());
  };

  SynthesisOptions so = s.synthesis;
  so.stft = ckpt.stft;
  so.f0 = ckpt.f0;
  TransferRequest req;
  req.text = s.text;
  req.reference = LoadWaveform(ref_path, ckpt.stft.sample_rate);
  req.target_speaker = s.speaker.empty() ? 0 : speaker_index(s.speaker);
  if (s.pitch_scale != 0.0) {
    req.transform = PitchTransform::Scale(s.pitch_scale);
  } else if (!s.fit_speaker.empty()) {
    speaker_index(s.fit_speaker);
    const auto it = ckpt.speaker_stats.find(s.fit_speaker);
    if (it == ckpt.speaker_stats.end() || !it->second.valid()) {
      throw Error(ErrorCode::kDegenerateStats, "no voiced statistics for " + s.fit_speaker);
    }
    req.transform = PitchTransform::Fit(ExtractF0(req.reference, ckpt.f0), it->second,
                                        s.fit_speaker);
  } else if (!contour.empty()) {
    req.transform = PitchTransform::Replace(
        ReadContourCsv(fs::path(contour), ckpt.stft.hop_length, ckpt.stft.sample_rate));
  }

  const fs::path run = OpenRunDirectory(ctx, cfg);
  const ProsodyModel model = ModelFromCheckpoint(ckpt);
  const Synthesizer synth(model, Vocabulary(ckpt.vocabulary), so);
  const TransferResult r = synth.Transfer(req);
  WriteBundle(run, r);
  std::cout << "frames: " << r.mel.rows() << ", median output F0: "
            << MedianVoicedF0(r.output_f0) << " Hz, median reference F0: "
            << MedianVoicedF0(r.reference_f0) << " Hz\n";
  return 0;
}

int RunEval(const RunContext& ctx, RunConfig& cfg) {
  const Settings& s = cfg.settings();
  const fs::path ref_dir = Require(s, "eval.ref_dir", "--ref-dir");
  const fs::path est_dir = Require(s, "eval.est_dir", "--est-dir");
  const auto scan = [](const fs::path& dir) {
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::kMissingFile, "no such directory " + dir.string());
    }
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") {
        out[e.path().stem().string()] = e.path();
      }
    }
    return out;
  };
  const auto refs = scan(ref_dir);
  const auto ests = scan(est_dir);
  std::string missing_est, missing_ref;
  for (const auto& [id, p] : refs) {
    if (!ests.count(id)) missing_est += (missing_est.empty() ? "" : ", ") + id;
  }
  for (const auto& [id, p] : ests) {
    if (!refs.count(id)) missing_ref += (missing_ref.empty() ? "" : ", ") + id;
  }
  if (!missing_est.empty() || !missing_ref.empty()) {
    std::string msg = "utterance sets differ";
    if (!missing_est.empty()) msg += "; missing from " + est_dir.string() + ": " + missing_est;
    if (!missing_ref.empty()) msg += "; missing from " + ref_dir.string() + ": " + missing_ref;
    throw Error(ErrorCode::kMalformedInput, msg);
  }
  if (refs.empty()) throw Error(ErrorCode::kMalformedInput, "no .wav files in " + ref_dir.string());

  const fs::path run = OpenRunDirectory(ctx, cfg);
  std::vector<NamedReport> rows;
  MetricReport mean;
  for (const auto& [id, p] : refs) {
    const MetricReport m = EvaluatePair(LoadWaveform(p, s.stft.sample_rate),
                                        LoadWaveform(ests.at(id), s.stft.sample_rate), s.eval);
    rows.push_back({id, m});
    mean.gpe += m.gpe / static_cast<double>(refs.size());
    mean.vde += m.vde / static_cast<double>(refs.size());
    mean.ffe += m.ffe / static_cast<double>(refs.size());
    mean.mcd_db += m.mcd_db / static_cast<double>(refs.size());
  }
  std::ofstream out(run / "metrics.csv");
  WriteReportCsv(out, rows);
  std::cout << "metrics: " << (run / "metrics.csv").string() << '\n';
  std::cout << "mean gpe=" << mean.gpe << " vde=" << mean.vde << " ffe=" << mean.ffe
            << " mcd_db=" << mean.mcd_db << '\n';
  return 0;
}

int RunSweep(const RunContext& ctx, RunConfig& cfg) {
  const Settings& s = cfg.settings();
  Require(s, "data.manifest", "--manifest");
  s.train.Validate();
  const fs::path run = OpenRunDirectory(ctx, cfg);
  const Manifest m = LoadManifest(s.paths.at("data.manifest"));
  auto records = Usable(m);
  std::vector<UtteranceRecord> eval_records;
  const std::string& eval_manifest = s.paths.at("data.eval_manifest");
  if (!eval_manifest.empty()) eval_records = Usable(LoadManifest(eval_manifest));
  std::vector<UtteranceRecord> all = records;
  all.insert(all.end(), eval_records.begin(), eval_records.end());
  const fs::path feats = EnsureFeatures(s, run, all);
  const TrainingSet data = BuildTrainingSet(records, feats, s.stft);
  const std::vector<TrainingExample> eval =
      eval_records.empty() ? data.examples : BuildExamples(data, eval_records, feats, s.stft);

  SweepConfig sc;
  sc.lambdas = s.sweep_lambdas;
  sc.seeds = s.sweep_seeds;
  sc.model = s.model;
  sc.train = s.train;
  sc.synthesis = s.synthesis;
  sc.eval = s.eval;
  const fs::path report = run / "sweep.csv";
  bool incomplete = false;
  LambdaSweep(data, eval, sc, report, [&](const SweepRow& row) {
    if (!row.complete) {
      incomplete = true;
      std::cout << "lambda " << FormatDouble(row.lambda) << ": incomplete (" << row.note << ")\n";
      return;
    }
    std::cout << "lambda " << FormatDouble(row.lambda) << ": gpe=" << row.gpe
              << " vde=" << row.vde << " ffe=" << row.ffe << " mcd_db=" << row.mcd_db
              << " probe_accuracy=" << row.probe_accuracy << '\n';
  });
  std::cout << "sweep report: " << report.string() << '\n';
  return incomplete ? 3 : 0;
}

int RunPlot(const RunContext& ctx, RunConfig& cfg, const std::vector<std::string>& series) {
  const Settings& s = cfg.settings();
  if (series.empty()) throw UsageError("pass at least one --series NAME=PATH");
  std::vector<NamedContour> contours;
  for (const auto& item : series) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw UsageError("--series expects NAME=PATH, got '" + item + "'");
    }
    const fs::path p = item.substr(eq + 1);
    PitchContour c = p.extension() == ".wav"
                         ? ExtractF0(LoadWaveform(p, s.stft.sample_rate), s.f0)
                         : ReadContourCsv(p, s.stft.hop_length, s.stft.sample_rate);
    contours.push_back({item.substr(0, eq), std::move(c)});
  }
  std::vector<std::string> lines;
  for (const auto& item : series) lines.push_back("series " + item);
  const fs::path run = OpenRunDirectory(ctx, cfg, lines);
  const fs::path csv = EmitPitchFigure(contours, run / "figure.svg");
  std::cout << "figure: " << (run / "figure.svg").string() << "\ndata: " << csv.string() << '\n';
  return 0;
}

}  // namespace prosodykit::cli
