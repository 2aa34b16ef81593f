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

#ifndef PROSODYKIT_CORPUS_H_
#define PROSODYKIT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prosodykit/signal_types.h"

namespace prosodykit {

struct UtteranceRecord {
  std::filesystem::path audio_path;
  std::string phonemes;  // space-separated symbols
  std::string speaker;
  std::string style;     // optional tag, empty when absent

  // File stem of audio_path.
  std::string id() const;
  bool operator==(const UtteranceRecord&) const = default;
};

struct ManifestIssue {
  std::string utt_id;
  std::string message;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  // Records whose audio is absent; filled by LoadManifest.
  std::vector<ManifestIssue> missing_audio;

  // Sorted unique speaker names; the index is the model speaker id.
  std::vector<std::string> Speakers() const;
};

// Pipe-separated `path|phonemes|speaker[|style]`, one record per line.
// Relative audio paths resolve against the manifest directory. Blank lines
// and lines starting with '#' are skipped. Throws kMissingFile,
// kMalformedInput (naming the line) and kDuplicateId.
Manifest LoadManifest(const std::filesystem::path& path);
Manifest ParseManifest(std::istream& in,
                       const std::filesystem::path& base_dir = {});
void WriteManifest(std::ostream& out, const std::vector<UtteranceRecord>& records);
void WriteManifest(const std::filesystem::path& path,
                   const std::vector<UtteranceRecord>& records);

enum class ContourFamily { kFlat, kRising, kFalling, kPeakMid };

std::string ContourFamilyName(ContourFamily f);
ContourFamily ParseContourFamily(const std::string& name);

// Relative F0 position in [0, 1] at utterance position x in [0, 1].
double ContourShape(ContourFamily f, double x);

struct SyntheticCorpusSpec {
  int n_speakers = 4;
  // Per-speaker [low, high] F0 range in Hz. When empty, DefaultRanges() is
  // used.
  std::vector<std::pair<double, double>> f0_ranges;
  std::vector<ContourFamily> families = {ContourFamily::kFlat,
                                         ContourFamily::kRising,
                                         ContourFamily::kFalling,
                                         ContourFamily::kPeakMid};
  int utterances_per_speaker = 4;
  int vocab_size = 6;           // number of phoneme symbols
  int min_symbols = 4;
  int max_symbols = 6;
  double silence_seconds = 0.08;
  int sample_rate = kDefaultSampleRate;
  // Family whose utterances go to the held-out manifest instead.
  std::optional<ContourFamily> excluded_family;
  uint64_t seed = 1;

  // Ranges are adjacent geometric bands of ratio 1.4 starting at 100 Hz.
  static std::vector<std::pair<double, double>> DefaultRanges(int n);
  // Throws kInvalidArgument. Ranges must not overlap.
  void Validate() const;
  std::pair<double, double> range(int speaker) const;
};

// Symbol name for synthetic index i ("p<i>").
std::string SyntheticSymbol(int i);
// Segment duration in seconds for symbol i.
double SyntheticSymbolDuration(int i);

struct SyntheticCorpus {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> heldout_manifest;
  std::vector<UtteranceRecord> records;
  std::vector<UtteranceRecord> heldout;
};

// Writes WAVs under out_dir/wavs plus manifest.txt (and heldout.txt when a
// family is excluded). Deterministic given the spec.
SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec,
                                        const std::filesystem::path& out_dir);

// Renders one utterance: symbols are indices, f0 follows `family` over
// [lo, hi].
Waveform RenderUtterance(const std::vector<int>& symbols, ContourFamily family,
                         double lo, double hi, double silence_seconds,
                         int sample_rate);

struct PrepareOptions {
  StftConfig stft;
  F0Config f0;
  // When false unreadable audio is skipped and reported.
  bool fail_fast = false;
};

struct UtteranceFeatures {
  std::string utt_id;
  std::string speaker;
  Matrix mel;  // [T x C]
  PitchContour f0;
};

struct PrepareReport {
  int computed = 0;
  int cached = 0;
  std::vector<ManifestIssue> skipped;
  std::map<std::string, VocalRangeStats> speaker_stats;
};

// Caches `<utt>.mel`, `<utt>.f0.csv` and a `<utt>.key` fingerprint under
// out_dir and writes speaker_stats.csv. Entries whose fingerprint matches
// the audio content and configuration are not recomputed.
PrepareReport PrepareFeatures(const std::vector<UtteranceRecord>& records,
                              const PrepareOptions& opts,
                              const std::filesystem::path& out_dir);

// Reads a cached utterance; throws kMissingFile or kLengthMismatch.
UtteranceFeatures LoadFeatures(const std::filesystem::path& feature_dir,
                               const UtteranceRecord& record,
                               const StftConfig& stft = {});

void WriteSpeakerStats(const std::filesystem::path& path,
                       const std::map<std::string, VocalRangeStats>& stats);
std::map<std::string, VocalRangeStats> ReadSpeakerStats(
    const std::filesystem::path& path);

}  // namespace prosodykit

#endif  // PROSODYKIT_CORPUS_H_
