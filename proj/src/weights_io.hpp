// SPDX-License-Identifier: Apache-2.0
// Internal helpers shared by the float and int16 weights-file writers.
#pragma once

#include <cstdint>
#include <vector>

#include "aquanode/nn.hpp"

namespace aquanode::nn::detail_io {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v);
void put_f32(std::vector<std::uint8_t>& b, float v);
void put_i16(std::vector<std::uint8_t>& b, std::int16_t v);

struct Reader {
  const std::vector<std::uint8_t>& b;
  std::size_t pos = 0;

  void need(std::size_t n, const char* field);
  std::uint16_t u16(const char* field);
  std::int16_t i16(const char* field);
  float f32(const char* field);
};

// magic + version + flags + three dimensions
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 6;

void write_header(std::vector<std::uint8_t>& b, const ModelConfig& cfg, std::uint16_t flags);
ModelConfig read_header(Reader& r, std::uint16_t& flags);

}  // namespace aquanode::nn::detail_io
