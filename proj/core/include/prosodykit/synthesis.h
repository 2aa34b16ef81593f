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

#ifndef PROSODYKIT_SYNTHESIS_H_
#define PROSODYKIT_SYNTHESIS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prosodykit/model.h"
#include "prosodykit/signal_types.h"
#include "prosodykit/vocabulary.h"

namespace prosodykit {

struct PitchTransform {
  enum class Kind { kNone, kScale, kFit, kReplace };

  Kind kind = Kind::kNone;
  double factor = 1.0;         // kScale
  VocalRangeStats source;      // kFit
  VocalRangeStats target;      // kFit
  std::string target_speaker;  // kFit, informational
  bool match_std = true;       // kFit
  PitchContour replacement;    // kReplace

  static PitchTransform Scale(double factor);
  static PitchTransform Replace(PitchContour contour);
  // Source statistics are taken from `reference`.
  static PitchTransform Fit(const PitchContour& reference,
                            const VocalRangeStats& target,
                            std::string target_speaker, bool match_std = true);

  bool operator==(const PitchTransform&) const = default;
};

std::string PitchTransformKindName(PitchTransform::Kind kind);

// Applies the transform to the raw reference contour.
PitchContour ApplyTransform(const PitchContour& raw, const PitchTransform& t);

// JSON record of a transform; replacement contours are stored inline.
std::string TransformToJson(const PitchTransform& t);
PitchTransform TransformFromJson(const std::string& text);
void WriteTransform(const std::filesystem::path& path, const PitchTransform& t);
PitchTransform ReadTransform(const std::filesystem::path& path);

struct TransferRequest {
  std::string text;  // space-separated phonemes
  Waveform reference;
  int target_speaker = 0;
  PitchTransform transform;
};

struct TransferResult {
  Waveform waveform;
  Matrix mel;                 // [T x C], post-refinement prediction
  PitchContour output_f0;     // extracted from waveform, T frames
  PitchContour reference_f0;  // raw contour extracted from the reference
  PitchContour conditioning;  // contour fed to the model (hard, soft)
  Matrix text_attention;
  std::optional<Matrix> prosody_attention;
  std::optional<Matrix> token_weights;
  Matrix prosody_embedding;
  PitchTransform transform;
};

inline constexpr int kMinReferenceFrames = 5;

struct SynthesisOptions {
  StftConfig stft;
  F0Config f0;
  int griffin_lim_iterations = 60;
  uint64_t griffin_lim_seed = 0;
};

class Synthesizer {
 public:
  Synthesizer(const ProsodyModel& model, Vocabulary vocab,
              SynthesisOptions opts = {});

  const ProsodyModel& model() const { return model_; }
  const SynthesisOptions& options() const { return opts_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  // Dispatches on the model variant.
  TransferResult Transfer(const TransferRequest& req) const;

  // Hard: the (transformed) contour drives exactly one decoder step per
  // frame. Throws kSignalTooShort below kMinReferenceFrames.
  TransferResult TransferHard(const PhonemeSequence& text, int speaker,
                              const Matrix& ref_mel,
                              const PitchContour& ref_f0,
                              const PitchTransform& transform) const;
  // Soft: the (transformed) contour is encoded; decoding runs free until the
  // gate fires.
  TransferResult TransferSoft(const PhonemeSequence& text, int speaker,
                              const PitchContour& ref_f0,
                              const PitchTransform& transform) const;
  // GST: global style from the reference mel; transforms are rejected.
  TransferResult TransferGst(const PhonemeSequence& text, int speaker,
                             const Matrix& ref_mel) const;

  // Vocodes a predicted mel and extracts its contour.
  void Render(TransferResult& result) const;

 private:
  const ProsodyModel& model_;
  Vocabulary vocab_;
  SynthesisOptions opts_;
};

// out.wav, mel.bin, f0.csv, attention.csv, transform.json, plus
// prosody_attention.csv for the soft variant.
void WriteBundle(const std::filesystem::path& dir, const TransferResult& result);

void WriteMatrixCsv(const std::filesystem::path& path, const Matrix& m,
                    const std::string& row_label = "frame");

struct NamedContour {
  std::string name;
  PitchContour contour;
};

// Writes an SVG overlay at `svg_path` and the plotted series to the
// sibling `.csv` (`series,frame,f0_hz,voiced`). Returns the CSV path.
std::filesystem::path EmitPitchFigure(const std::vector<NamedContour>& series,
                                      const std::filesystem::path& svg_path);
std::vector<NamedContour> ReadPitchFigureCsv(const std::filesystem::path& path,
                                             int hop_length = 256,
                                             int sample_rate = kDefaultSampleRate);

}  // namespace prosodykit

#endif  // PROSODYKIT_SYNTHESIS_H_
