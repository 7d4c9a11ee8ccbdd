// Copyright 2026 The cpc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpc/error.hpp"

namespace cpc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Alphabet: return "alphabet";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::Model: return "model";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Mapping: return "mapping";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::EndOfStream: return "end of stream";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "i/o";
    case ErrorKind::Staleness: return "staleness";
    case ErrorKind::DegenerateScale: return "degenerate scale";
  }
  return "unknown";
}

namespace {
std::string describe(ErrorKind kind, const std::string& what, std::optional<std::uint64_t> position) {
  std::string s = std::string(to_string(kind)) + " error: " + what;
  if (position) s += " (at " + std::to_string(*position) + ")";
  return s;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& what, std::optional<std::uint64_t> position)
    : std::runtime_error(describe(kind, what, position)), kind_(kind), position_(position) {}

}  // namespace cpc
