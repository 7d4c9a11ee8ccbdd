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

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace cpc {

enum class ErrorKind {
  Alphabet,     // code index outside the model alphabet
  Capacity,     // more codes than the model can hold
  EmptyInput,   // nothing to normalize
  Model,        // model fails validation
  Precision,    // unsupported probability precision for a coder
  Contract,     // caller broke a precondition (payload width, value range, ...)
  Mapping,      // value or code has no mapping
  Usage,        // API misuse (flush twice, ...)
  Corruption,   // compressed data is inconsistent
  EndOfStream,  // decoder ran out of pairs
  Parse,        // malformed serialized data
  Io,           // sink/source failure
  Staleness,    // checkpoint taken from another stream
  DegenerateScale,
};

const char* to_string(ErrorKind kind);

// All library failures are reported with this exception. `position` is a byte
// offset or pair index depending on the error site; it is set whenever the
// failure can be located.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::uint64_t> position = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::uint64_t> position() const noexcept { return position_; }

 private:
  ErrorKind kind_;
  std::optional<std::uint64_t> position_;
};

}  // namespace cpc
