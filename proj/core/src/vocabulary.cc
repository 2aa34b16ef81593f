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

#include "prosodykit/vocabulary.h"

#include <sstream>

#include "prosodykit/error.h"

namespace prosodykit {

int PhonemeSequence::valid_length() const {
  int n = 0;
  while (n < static_cast<int>(ids.size()) && ids[static_cast<size_t>(n)] != kPadId) ++n;
  return n;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<pad>", "<eos>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> symbols) {
  if (symbols.size() < 2 || symbols[0] != "<pad>" || symbols[1] != "<eos>") {
    throw Error(ErrorCode::kInvalidArgument,
                "vocabulary must start with <pad>, <eos>");
  }
  for (const auto& s : symbols) Add(s);
}

int Vocabulary::Add(const std::string& symbol) {
  if (auto it = index_.find(symbol); it != index_.end()) return it->second;
  const int id = static_cast<int>(symbols_.size());
  symbols_.push_back(symbol);
  index_.emplace(symbol, id);
  return id;
}

int Vocabulary::Id(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) {
    throw Error(ErrorCode::kOutOfVocabulary, "unknown phoneme '" + symbol + "'");
  }
  return it->second;
}

bool Vocabulary::Contains(const std::string& symbol) const {
  return index_.contains(symbol);
}

PhonemeSequence Vocabulary::Encode(const std::string& phonemes) const {
  PhonemeSequence seq;
  for (const auto& p : SplitPhonemes(phonemes)) seq.ids.push_back(Id(p));
  if (seq.ids.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty phoneme sequence");
  }
  seq.ids.push_back(kEosId);
  return seq;
}

std::vector<std::string> SplitPhonemes(const std::string& phonemes) {
  std::istringstream in(phonemes);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace prosodykit
