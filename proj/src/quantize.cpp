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

#include "cpc/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "cpc/formats/integer.hpp"
#include "cpc/rans.hpp"
#include "cpc/tans.hpp"

namespace cpc {

Quantized quantize_linear(std::span<const float> weights, const QuantConfig& cfg) {
  if (cfg.magnitude_bits < 1 || cfg.magnitude_bits > 15)
    throw Error(ErrorKind::Contract, "magnitude bits must be 1..15");
  if (!cfg.per_tensor) throw Error(ErrorKind::Contract, "only per-tensor scales are supported");
  double max_abs = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) throw Error(ErrorKind::Contract, "non-finite weight", i);
    max_abs = std::max(max_abs, std::fabs(static_cast<double>(weights[i])));
  }
  if (max_abs == 0.0) throw Error(ErrorKind::DegenerateScale, "all weights are zero");

  Quantized out;
  out.max_abs = max_abs;
  out.magnitude_bits = cfg.magnitude_bits;
  const double levels = static_cast<double>((std::uint32_t{1} << cfg.magnitude_bits) - 1);
  const double scale = levels / max_abs;
  out.values.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    out.values[i] = static_cast<std::int32_t>(std::round(scale * static_cast<double>(weights[i])));
  return out;
}

std::vector<float> dequantize(std::span<const std::int32_t> q, double step) {
  std::vector<float> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = static_cast<float>(q[i] * step);
  return out;
}

const char* to_string(SizeEstimate e) {
  switch (e) {
    case SizeEstimate::Ideal: return "ideal";
    case SizeEstimate::Rans: return "rans";
    case SizeEstimate::Tans: return "tans";
  }
  return "unknown";
}

namespace {

template <typename Encoder>
double flushed_bits(const ProbabilityModel& model, std::span<const CodingPair> pairs) {
  Encoder enc(model);
  for (std::size_t i = pairs.size(); i-- > 0;) enc.encode(pairs[i]);
  const auto payload = enc.flush();
  return static_cast<double>(payload.words.size()) * 8.0 * sizeof(typename Encoder::Word);
}

}  // namespace

double coded_bits(const ProbabilityModel& model, std::span<const CodingPair> pairs, SizeEstimate estimate) {
  switch (estimate) {
    case SizeEstimate::Ideal: {
      const FrequencyTable freq = count_codes(pairs, model.size());
      std::vector<std::uint8_t> payload(model.size());
      for (std::size_t i = 0; i < model.size(); ++i) payload[i] = model[i].payload_bits;
      return entropy_bits(freq, payload).total;
    }
    case SizeEstimate::Rans: return flushed_bits<RansEncoder>(model, pairs);
    case SizeEstimate::Tans: return flushed_bits<TansEncoder>(model, pairs);
  }
  return 0.0;
}

QuantReport quant_report(std::span<const std::int32_t> q, SizeEstimate estimate, double original_bits) {
  QuantReport r;
  r.total_values = q.size();
  if (q.empty()) return r;

  std::vector<CodingPair> pairs(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) pairs[i] = int_to_pair(q[i]);

  const FrequencyTable freq = count_codes(pairs, kIntCodes);
  const auto key_to_code_map = key_to_code(freq);
  const unsigned precision = estimate == SizeEstimate::Tans ? 8 : 16;
  ProbabilityModel model = normalize_counts(freq, precision);
  for (std::uint32_t k = 0; k < kIntCodes; ++k) {
    const std::int32_t c = key_to_code_map[k];
    if (c < 0) continue;
    model.describe(static_cast<std::size_t>(c), static_cast<std::uint8_t>(k),
                   IntMagnitude{static_cast<std::int32_t>(k)});
  }
  double payload_total = 0.0;
  for (auto& p : pairs) {
    payload_total += p.payload_len;
    p.code = static_cast<std::uint32_t>(key_to_code_map[p.code]);
  }

  const double n = static_cast<double>(q.size());
  const double total = coded_bits(model, pairs, estimate);
  r.avg_bits_per_weight = total / n;
  r.avg_payload_bits = payload_total / n;
  r.avg_code_bits = r.avg_bits_per_weight - r.avg_payload_bits;
  r.compressed_fraction = 100.0 * r.avg_bits_per_weight / original_bits;
  return r;
}

}  // namespace cpc
