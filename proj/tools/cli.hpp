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
#include <ostream>
#include <string>
#include <vector>

#include "cpc/container.hpp"
#include "cpc/error.hpp"

namespace cpc::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kParseError = 2,
  kIoError = 3,
  kContractError = 4,
  kCorruptData = 5,
};

int exit_code(ErrorKind kind);

/// Runs one command line (argv[0] is the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct BenchResult {
  CoderKind coder = CoderKind::Rans16;
  std::uint64_t pairs = 0;
  std::uint64_t payload_bytes = 0;
  double encode_seconds = 0.0;
  double decode_seconds = 0.0;

  double encode_rate() const { return encode_seconds > 0 ? pairs / encode_seconds : 0.0; }
  double decode_rate() const { return decode_seconds > 0 ? pairs / decode_seconds : 0.0; }
};

/// Single-threaded encode and decode of `pairs` synthetic bf16-like pairs.
/// Throws Corruption if the decoded pairs differ from the input.
BenchResult bench_coder(CoderKind coder, std::uint64_t pairs, std::uint64_t seed = 1);

}  // namespace cpc::cli
