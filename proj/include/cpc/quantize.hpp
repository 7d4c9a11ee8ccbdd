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
#include <span>
#include <vector>

#include "cpc/coding_pair.hpp"
#include "cpc/model.hpp"

namespace cpc {

struct QuantConfig {
  unsigned magnitude_bits = 8;  // N_b, sign kept separately
  bool per_tensor = true;       // one scale per tensor; the only supported mode
};

struct Quantized {
  std::vector<std::int32_t> values;
  double max_abs = 0.0;
  unsigned magnitude_bits = 0;

  /// Value of one quantization step: max|W| / (2^N_b - 1).
  double step() const { return max_abs / static_cast<double>((std::uint32_t{1} << magnitude_bits) - 1); }
};

/// q = round((2^N_b - 1) / max|W| * W), ties away from zero.
Quantized quantize_linear(std::span<const float> weights, const QuantConfig& cfg);
std::vector<float> dequantize(std::span<const std::int32_t> q, double step);

enum class SizeEstimate { Ideal, Rans, Tans };

const char* to_string(SizeEstimate e);

struct QuantReport {
  std::uint64_t total_values = 0;
  double avg_bits_per_weight = 0.0;
  double avg_code_bits = 0.0;
  double avg_payload_bits = 0.0;
  double compressed_fraction = 0.0;  // percent of original_bits per value
};

/// Integers -> NZ-MSB pairs -> one model for the whole tensor -> size.
/// Ideal uses -log2 of the empirical code probabilities; the coders report
/// the flushed stream size.
QuantReport quant_report(std::span<const std::int32_t> q, SizeEstimate estimate, double original_bits = 16.0);

/// Size of `pairs` under `model`: ideal bits, or the flushed payload of the
/// chosen coder. The model must match the coder precision.
double coded_bits(const ProbabilityModel& model, std::span<const CodingPair> pairs, SizeEstimate estimate);

}  // namespace cpc
