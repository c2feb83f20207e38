// SPDX-License-Identifier: Apache-2.0
#include "aquanode/nn.hpp"

#include <cstring>
#include <fstream>

#include "weights_io.hpp"

namespace aquanode::nn {

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidInput("model config: " + m); };
  if (n < kKernel) fail("input side must be at least the kernel size");
  if (n > 4096) fail("input side out of range");
  if (num_classes < 2) fail("need at least two classes");
  if (num_classes > 4096) fail("class count out of range");
  if (num_filters < 1 || num_filters > 4096) fail("filter count out of range");
  if (conv_out() < 1) fail("conv output collapsed to nothing");
}

namespace detail_io {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

void put_f32(std::vector<std::uint8_t>& b, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  b.push_back(u & 0xff);
  b.push_back((u >> 8) & 0xff);
  b.push_back((u >> 16) & 0xff);
  b.push_back((u >> 24) & 0xff);
}

void put_i16(std::vector<std::uint8_t>& b, std::int16_t v) {
  put_u16(b, static_cast<std::uint16_t>(v));
}

void Reader::need(std::size_t n, const char* field) {
  if (pos + n > b.size())
    throw FormatError(std::string("weights: truncated at ") + field);
}

std::uint16_t Reader::u16(const char* field) {
  need(2, field);
  const std::uint16_t v = static_cast<std::uint16_t>(b[pos] | b[pos + 1] << 8);
  pos += 2;
  return v;
}

std::int16_t Reader::i16(const char* field) {
  return static_cast<std::int16_t>(u16(field));
}

float Reader::f32(const char* field) {
  need(4, field);
  const std::uint32_t u = std::uint32_t(b[pos]) | std::uint32_t(b[pos + 1]) << 8 |
                          std::uint32_t(b[pos + 2]) << 16 |
                          std::uint32_t(b[pos + 3]) << 24;
  pos += 4;
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

void write_header(std::vector<std::uint8_t>& b, const ModelConfig& cfg,
                  std::uint16_t flags) {
  b.insert(b.end(), {'A', 'Q', 'N', 'N'});
  put_u16(b, kWeightsVersion);
  put_u16(b, flags);
  put_u16(b, static_cast<std::uint16_t>(cfg.n));
  put_u16(b, static_cast<std::uint16_t>(cfg.num_classes));
  put_u16(b, static_cast<std::uint16_t>(cfg.num_filters));
}

ModelConfig read_header(Reader& r, std::uint16_t& flags) {
  r.need(4, "magic");
  if (std::memcmp(r.b.data(), "AQNN", 4) != 0)
    throw FormatError("weights: bad magic, not a model file");
  r.pos = 4;
  const std::uint16_t version = r.u16("version");
  if (version != kWeightsVersion)
    throw FormatError("weights: unsupported version " + std::to_string(version));
  flags = r.u16("flags");
  if (flags & ~kFlagQuantized)
    throw FormatError("weights: unknown flag bits " + std::to_string(flags));
  ModelConfig cfg;
  cfg.n = r.u16("n");
  cfg.num_classes = r.u16("num_classes");
  cfg.num_filters = r.u16("num_filters");
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("weights: ") + e.what());
  }
  return cfg;
}

}  // namespace detail_io

std::vector<std::uint8_t> save_model(const Model& m) {
  m.config.validate();
  std::vector<std::uint8_t> b;
  detail_io::write_header(b, m.config, 0);
  for (const Tensor* t : {&m.conv_weights, &m.conv_bias, &m.dense_weights, &m.dense_bias})
    for (float v : t->data) detail_io::put_f32(b, v);
  return b;
}

Model load_model(const std::vector<std::uint8_t>& bytes) {
  detail_io::Reader r{bytes};
  std::uint16_t flags = 0;
  const ModelConfig cfg = detail_io::read_header(r, flags);
  if (flags & kFlagQuantized)
    throw FormatError("weights: file holds int16 payloads, expected float32");

  Model m;
  m.config = cfg;
  constexpr int K = ModelConfig::kKernel;
  m.conv_weights = Tensor::zeros({cfg.num_filters, K, K});
  m.conv_bias = Tensor::zeros({cfg.num_filters});
  m.dense_weights = Tensor::zeros({static_cast<int>(cfg.flatten_len()), cfg.num_classes});
  m.dense_bias = Tensor::zeros({cfg.num_classes});

  const char* names[] = {"conv_weights", "conv_bias", "dense_weights", "dense_bias"};
  Tensor* tensors[] = {&m.conv_weights, &m.conv_bias, &m.dense_weights, &m.dense_bias};
  for (int t = 0; t < 4; ++t)
    for (auto& v : tensors[t]->data) v = r.f32(names[t]);
  if (r.pos != bytes.size()) throw FormatError("weights: trailing bytes after dense_bias");
  return m;
}

void save_model_file(const Model& m, const std::string& path) {
  const auto bytes = save_model(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("weights: cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("weights: short write to '" + path + "'");
}

Model load_model_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("weights: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return load_model(bytes);
}

}  // namespace aquanode::nn
