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
#include <stdexcept>
#include <string>

namespace cluekit {

// Malformed input data. `line` is 1-based, 0 when not tied to a line.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " at line " + std::to_string(line) : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A configuration or policy value violates its invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation had nothing to work on (e.g. an empty training subset).
class EmptyResultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cluekit
