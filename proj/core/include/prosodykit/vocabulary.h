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

#ifndef PROSODYKIT_VOCABULARY_H_
#define PROSODYKIT_VOCABULARY_H_

#include <string>
#include <unordered_map>
#include <vector>

namespace prosodykit {

inline constexpr int kPadId = 0;
inline constexpr int kEosId = 1;

// Symbol indices over a fixed vocabulary. Trailing kPadId entries are
// padding and are masked out of attention.
struct PhonemeSequence {
  std::vector<int> ids;

  // Number of leading non-padding symbols.
  int valid_length() const;
};

class Vocabulary {
 public:
  // Starts with the reserved "<pad>" and "<eos>" symbols.
  Vocabulary();
  // `symbols` must begin with "<pad>", "<eos>".
  explicit Vocabulary(std::vector<std::string> symbols);

  int Add(const std::string& symbol);
  // Throws kOutOfVocabulary.
  int Id(const std::string& symbol) const;
  bool Contains(const std::string& symbol) const;
  // Space-separated symbols, with <eos> appended.
  PhonemeSequence Encode(const std::string& phonemes) const;

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> SplitPhonemes(const std::string& phonemes);

}  // namespace prosodykit

#endif  // PROSODYKIT_VOCABULARY_H_
