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

#include "prosodykit/sweep.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "prosodykit/error.h"
#include "prosodykit/spectral.h"

namespace prosodykit {

namespace fs = std::filesystem;

MetricReport EvaluateSelfTransfer(const ProsodyModel& model,
                                  const std::vector<TrainingExample>& examples,
                                  const SynthesisOptions& synthesis,
                                  const EvalConfig& eval) {
  if (examples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no examples to evaluate");
  }
  // The vocabulary is only used for text input; examples are pre-encoded.
  const Synthesizer synth(model, Vocabulary{}, synthesis);
  MetricReport mean;
  for (const auto& ex : examples) {
    TransferResult r;
    switch (model.config().variant) {
      case Variant::kHard:
        r = synth.TransferHard(ex.text, ex.speaker, ex.mel, ex.f0, {});
        break;
      case Variant::kSoft:
        r = synth.TransferSoft(ex.text, ex.speaker, ex.f0, {});
        break;
      case Variant::kGst:
        r = synth.TransferGst(ex.text, ex.speaker, ex.mel);
        break;
    }
    MelSpectrogram ref_mel;
    ref_mel.frames = ex.mel;
    ref_mel.hop_length = synthesis.stft.hop_length;
    ref_mel.sample_rate = synthesis.stft.sample_rate;
    const MelSpectrogram est_mel = ComputeMelSpectrogram(r.waveform, eval.stft);
    const MetricReport m = EvaluateFeatures(ex.f0, ref_mel, r.output_f0, est_mel, eval);
    mean.gpe += m.gpe;
    mean.vde += m.vde;
    mean.ffe += m.ffe;
    mean.mcd_db += m.mcd_db;
    mean.n_frames += m.n_frames;
    mean.n_both_voiced += m.n_both_voiced;
    mean.n_voicing_errors += m.n_voicing_errors;
    mean.n_gross_errors += m.n_gross_errors;
  }
  const auto n = static_cast<double>(examples.size());
  mean.gpe /= n;
  mean.vde /= n;
  mean.ffe /= n;
  mean.mcd_db /= n;
  return mean;
}

std::vector<SweepRow> LambdaSweep(const TrainingSet& train_set,
                                  const std::vector<TrainingExample>& eval_set,
                                  const SweepConfig& cfg,
                                  const std::optional<fs::path>& report,
                                  const std::function<void(const SweepRow&)>& on_row) {
  if (cfg.lambdas.empty() || cfg.seeds.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sweep needs lambdas and seeds");
  }
  for (double l : cfg.lambdas) {
    if (!(l >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  }
  std::vector<double> lambdas = cfg.lambdas;
  std::sort(lambdas.begin(), lambdas.end());

  std::vector<SweepRow> rows;
  const auto flush = [&] {
    if (!report) return;
    const fs::path tmp = fs::path(*report).concat(".tmp");
    {
      std::ofstream out(tmp);
      if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + tmp.string());
      WriteSweepReport(out, rows);
    }
    fs::rename(tmp, *report);
  };

  for (double lambda : lambdas) {
    SweepRow row;
    row.lambda = lambda;
    row.gpe = row.vde = row.ffe = row.mcd_db = row.probe_accuracy = 0.0;
    try {
      for (uint64_t seed : cfg.seeds) {
        ModelConfig mc = cfg.model;
        mc.lambda = lambda;
        mc.seed = seed;
        mc = ConfigureModel(mc, train_set, cfg.synthesis.stft);
        ProsodyModel model(mc);
        TrainConfig tc = cfg.train;
        tc.lambda = lambda;
        tc.seed = seed;
        TrainOptions to;
        to.stft = cfg.synthesis.stft;
        to.f0 = cfg.synthesis.f0;
        Train(model, train_set, tc, to);
        const MetricReport m = EvaluateSelfTransfer(model, eval_set, cfg.synthesis, cfg.eval);
        row.gpe += m.gpe;
        row.vde += m.vde;
        row.ffe += m.ffe;
        row.mcd_db += m.mcd_db;
        row.probe_accuracy += SpeakerProbeAccuracy(model, train_set);
      }
      const auto n = static_cast<double>(cfg.seeds.size());
      row.gpe /= n;
      row.vde /= n;
      row.ffe /= n;
      row.mcd_db /= n;
      row.probe_accuracy /= n;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumericalFailure) throw;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.gpe = row.vde = row.ffe = row.mcd_db = row.probe_accuracy = nan;
      row.complete = false;
      row.note = e.what();
    }
    rows.push_back(row);
    if (on_row) on_row(row);
    flush();
  }
  return rows;
}

void WriteSweepReport(std::ostream& out, std::vector<SweepRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.lambda < b.lambda; });
  out << "lambda,gpe,vde,ffe,mcd_db,probe_accuracy\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    if (!r.complete) {
      out << r.lambda << ",nan,nan,nan,nan,nan\n";
      continue;
    }
    out << r.lambda << ',' << r.gpe << ',' << r.vde << ',' << r.ffe << ',' << r.mcd_db << ','
        << r.probe_accuracy << '\n';
  }
  for (const auto& r : rows) {
    if (!r.complete) out << "# incomplete: lambda=" << r.lambda << ": " << r.note << '\n';
  }
}

}  // namespace prosodykit
