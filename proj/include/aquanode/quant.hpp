// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aquanode/device.hpp"
#include "aquanode/nn.hpp"

namespace aquanode::quant {

// Symmetric per-tensor int16: value ~= code * scale.
struct QuantTensor {
  std::vector<int> shape;
  std::vector<std::int16_t> data;
  float scale = 1.0f;
};

struct QuantizedModel {
  nn::ModelConfig config;
  QuantTensor conv_weights, conv_bias, dense_weights, dense_bias;

  nn::Model dequantize() const;
};

// scale = max|w| / 32767 per tensor, codes = round(w / scale).
// Round-trip error is bounded by scale/2 elementwise.
QuantizedModel quantize(const nn::Model& m);

// Runs the float engine on dequantized weights; int16 is a storage format
// here, not an arithmetic mode.
nn::InferenceResult forward_quantized(const QuantizedModel& m, const dsp::InputPlane& p);

struct FootprintReport {
  std::int64_t model_bytes = 0;
  std::int64_t working_buffer_bytes = 0;
  std::int64_t total_bytes = 0;
  std::int64_t limit_bytes = 0;
  bool fits = false;
};

// Static memory picture on the target: serialized weights plus the larger of
// the two live activation sets plus the raw ADC window.
FootprintReport footprint(const QuantizedModel& m, const device::DeviceProfile& profile);
FootprintReport footprint_float(const nn::Model& m, const device::DeviceProfile& profile);

// Same container format as the float path, flags bit0 set.
std::vector<std::uint8_t> save_quantized(const QuantizedModel& m);
QuantizedModel load_quantized(const std::vector<std::uint8_t>& bytes);
void save_quantized_file(const QuantizedModel& m, const std::string& path);
QuantizedModel load_quantized_file(const std::string& path);

// True when the serialized container carries int16 payloads.
bool is_quantized_container(const std::vector<std::uint8_t>& bytes);

}  // namespace aquanode::quant
