// SPDX-License-Identifier: Apache-2.0
#include "aquanode/quant.hpp"

#include <cmath>
#include <fstream>

#include "aquanode/errors.hpp"
#include "weights_io.hpp"

namespace aquanode::quant {

namespace {

QuantTensor quantize_tensor(const nn::Tensor& t) {
  QuantTensor q;
  q.shape = t.shape;
  q.data.resize(t.data.size());
  float peak = 0.0f;
  for (float v : t.data) peak = std::max(peak, std::fabs(v));
  // all-zero tensor keeps scale 1 so dequantization stays well-defined
  q.scale = peak > 0.0f ? peak / 32767.0f : 1.0f;
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    long code = std::lround(static_cast<double>(t.data[i]) / q.scale);
    if (code > 32767) code = 32767;
    if (code < -32767) code = -32767;
    q.data[i] = static_cast<std::int16_t>(code);
  }
  return q;
}

nn::Tensor dequantize_tensor(const QuantTensor& q) {
  nn::Tensor t;
  t.shape = q.shape;
  t.data.resize(q.data.size());
  for (std::size_t i = 0; i < q.data.size(); ++i)
    t.data[i] = static_cast<float>(q.data[i]) * q.scale;
  return t;
}

std::int64_t tensor_file_bytes(std::size_t count, bool quantized) {
  return quantized ? 4 + 2 * static_cast<std::int64_t>(count)
                   : 4 * static_cast<std::int64_t>(count);
}

FootprintReport footprint_common(const nn::ModelConfig& cfg,
                                 const device::DeviceProfile& profile,
                                 bool quantized) {
  cfg.validate();
  profile.validate();

  constexpr std::int64_t kHeader = 14;  // magic, version, flags, dims
  std::int64_t model = kHeader;
  const std::size_t counts[] = {
      static_cast<std::size_t>(cfg.num_filters) * 9,
      static_cast<std::size_t>(cfg.num_filters),
      static_cast<std::size_t>(cfg.flatten_len()) * cfg.num_classes,
      static_cast<std::size_t>(cfg.num_classes)};
  for (std::size_t c : counts) model += tensor_file_bytes(c, quantized);

  // Two live activation sets never overlap: (input, conv out) while the conv
  // runs, then (conv out, logits) while the dense layer runs. Activations are
  // float32 on the host engine; the raw ADC window is 16-bit words.
  const std::int64_t in_b = static_cast<std::int64_t>(cfg.n) * cfg.n * 4;
  const std::int64_t conv_b = cfg.flatten_len() * 4;
  const std::int64_t logit_b = static_cast<std::int64_t>(cfg.num_classes) * 4;
  const std::int64_t working =
      std::max(in_b + conv_b, conv_b + logit_b) +
      static_cast<std::int64_t>(profile.window_len) * 2;

  FootprintReport r;
  r.model_bytes = model;
  r.working_buffer_bytes = working;
  r.total_bytes = model + working;
  r.limit_bytes = profile.memory_limit_bytes;
  r.fits = r.total_bytes <= r.limit_bytes;
  return r;
}

}  // namespace

QuantizedModel quantize(const nn::Model& m) {
  m.config.validate();
  QuantizedModel q;
  q.config = m.config;
  q.conv_weights = quantize_tensor(m.conv_weights);
  q.conv_bias = quantize_tensor(m.conv_bias);
  q.dense_weights = quantize_tensor(m.dense_weights);
  q.dense_bias = quantize_tensor(m.dense_bias);
  return q;
}

nn::Model QuantizedModel::dequantize() const {
  nn::Model m;
  m.config = config;
  m.conv_weights = dequantize_tensor(conv_weights);
  m.conv_bias = dequantize_tensor(conv_bias);
  m.dense_weights = dequantize_tensor(dense_weights);
  m.dense_bias = dequantize_tensor(dense_bias);
  return m;
}

nn::InferenceResult forward_quantized(const QuantizedModel& m, const dsp::InputPlane& p) {
  return nn::forward(m.dequantize(), p);
}

FootprintReport footprint(const QuantizedModel& m, const device::DeviceProfile& profile) {
  return footprint_common(m.config, profile, true);
}

FootprintReport footprint_float(const nn::Model& m, const device::DeviceProfile& profile) {
  return footprint_common(m.config, profile, false);
}

std::vector<std::uint8_t> save_quantized(const QuantizedModel& m) {
  m.config.validate();
  std::vector<std::uint8_t> b;
  nn::detail_io::write_header(b, m.config, nn::kFlagQuantized);
  for (const QuantTensor* t :
       {&m.conv_weights, &m.conv_bias, &m.dense_weights, &m.dense_bias}) {
    nn::detail_io::put_f32(b, t->scale);
    for (std::int16_t v : t->data) nn::detail_io::put_i16(b, v);
  }
  return b;
}

QuantizedModel load_quantized(const std::vector<std::uint8_t>& bytes) {
  nn::detail_io::Reader r{bytes};
  std::uint16_t flags = 0;
  const nn::ModelConfig cfg = nn::detail_io::read_header(r, flags);
  if (!(flags & nn::kFlagQuantized))
    throw FormatError("weights: file holds float32 payloads, expected int16");

  QuantizedModel m;
  m.config = cfg;
  constexpr int K = nn::ModelConfig::kKernel;
  m.conv_weights.shape = {cfg.num_filters, K, K};
  m.conv_bias.shape = {cfg.num_filters};
  m.dense_weights.shape = {static_cast<int>(cfg.flatten_len()), cfg.num_classes};
  m.dense_bias.shape = {cfg.num_classes};

  const char* names[] = {"conv_weights", "conv_bias", "dense_weights", "dense_bias"};
  QuantTensor* tensors[] = {&m.conv_weights, &m.conv_bias, &m.dense_weights, &m.dense_bias};
  const std::size_t counts[] = {static_cast<std::size_t>(cfg.num_filters) * 9,
                                static_cast<std::size_t>(cfg.num_filters),
                                static_cast<std::size_t>(cfg.flatten_len()) * cfg.num_classes,
                                static_cast<std::size_t>(cfg.num_classes)};
  for (int t = 0; t < 4; ++t) {
    tensors[t]->scale = r.f32(names[t]);
    if (!(tensors[t]->scale > 0.0f) || !std::isfinite(tensors[t]->scale))
      throw FormatError(std::string("weights: bad scale for ") + names[t]);
    tensors[t]->data.resize(counts[t]);
    for (auto& v : tensors[t]->data) v = r.i16(names[t]);
  }
  if (r.pos != bytes.size()) throw FormatError("weights: trailing bytes after dense_bias");
  return m;
}

void save_quantized_file(const QuantizedModel& m, const std::string& path) {
  const auto bytes = save_quantized(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("weights: cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("weights: short write to '" + path + "'");
}

QuantizedModel load_quantized_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("weights: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return load_quantized(bytes);
}

bool is_quantized_container(const std::vector<std::uint8_t>& bytes) {
  nn::detail_io::Reader r{bytes};
  std::uint16_t flags = 0;
  nn::detail_io::read_header(r, flags);
  return (flags & nn::kFlagQuantized) != 0;
}

}  // namespace aquanode::quant
