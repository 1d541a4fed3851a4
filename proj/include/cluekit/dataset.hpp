// Copyright 2026 The cluekit Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cluekit {

enum class Label : std::uint8_t { kMismatch = 0, kMatch = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }

// One labeled text pair. Texts hold normalized UTF-8.
struct TextPair {
  std::size_t index = 0;
  std::string text_a;
  std::string text_b;
  Label label = Label::kMismatch;

  friend bool operator==(const TextPair&, const TextPair&) = default;
};

// An ordered corpus of pairs whose indices are 0..n-1 in order.
class Dataset {
 public:
  Dataset() = default;

  // Reassigns indices to positions.
  explicit Dataset(std::vector<TextPair> pairs, std::string source_name = {})
      : pairs_(std::move(pairs)), source_name_(std::move(source_name)) {
    for (std::size_t i = 0; i < pairs_.size(); ++i) pairs_[i].index = i;
  }

  const std::vector<TextPair>& pairs() const noexcept { return pairs_; }
  const TextPair& operator[](std::size_t i) const { return pairs_[i]; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  auto begin() const noexcept { return pairs_.begin(); }
  auto end() const noexcept { return pairs_.end(); }

  const std::string& source_name() const noexcept { return source_name_; }

  // Source name is metadata and does not take part in equality.
  friend bool operator==(const Dataset& a, const Dataset& b) { return a.pairs_ == b.pairs_; }

 private:
  std::vector<TextPair> pairs_;
  std::string source_name_;
};

}  // namespace cluekit
