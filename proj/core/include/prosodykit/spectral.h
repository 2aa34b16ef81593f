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

#ifndef PROSODYKIT_SPECTRAL_H_
#define PROSODYKIT_SPECTRAL_H_

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "prosodykit/signal_types.h"

namespace prosodykit {

using ComplexMatrix = Eigen::MatrixXcd;

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Number of analysis frames for n samples under center padding of
// window_length / 2 on each side: 1 + floor(n / hop).
int NumFrames(int64_t num_samples, int window_length, int hop_length);

// Pads by `pad` samples on each side. Reflection is used when the signal is
// longer than `pad`; shorter signals are zero padded.
std::vector<double> CenterPad(std::span<const double> samples, int pad);

// Triangular filters, peak 1, [mel_channels x fft_bins].
Matrix MelFilterbank(const StftConfig& cfg);
std::vector<double> MelCenterFrequencies(const StftConfig& cfg);

// Periodic Hann analysis window.
std::vector<double> HannWindow(int length);

// Centered STFT, [T x fft_bins].
ComplexMatrix Stft(std::span<const double> samples, const StftConfig& cfg);

// Inverse of Stft by weighted overlap-add; returns (T - 1) * hop samples.
std::vector<double> Istft(const ComplexMatrix& spec, const StftConfig& cfg);

// Log-mel magnitude spectrogram. Throws kSignalTooShort on empty input.
MelSpectrogram ComputeMelSpectrogram(const Waveform& wave,
                                     const StftConfig& cfg);

// Iterative phase reconstruction from a log-mel spectrogram: the mel energies
// are mapped back to linear magnitudes with the filterbank pseudo-inverse and
// the phase is refined by alternating projections, starting from a random
// phase drawn from `seed`.
Waveform ReconstructWaveform(const MelSpectrogram& mel, const StftConfig& cfg,
                             int iterations, uint64_t seed = 0);

// Mean absolute log-mel difference over the common frames.
double MelReconstructionError(const MelSpectrogram& a, const MelSpectrogram& b);

// Log-mel pattern of a flat-envelope harmonic series at each voiced
// frame's F0, as seen through the analysis window and filterbank, centered
// to zero mean over channels. Unvoiced frames are zero rows. [T x C]
Matrix HarmonicExcitation(const PitchContour& contour, const StftConfig& cfg);

// Binary mel file: uint32 frame count and channel count (little endian)
// followed by row-major float32 values.
void WriteMelBinary(const std::filesystem::path& path, const Matrix& frames);
Matrix ReadMelBinary(const std::filesystem::path& path);

}  // namespace prosodykit

#endif  // PROSODYKIT_SPECTRAL_H_
