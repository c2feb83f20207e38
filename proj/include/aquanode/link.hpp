// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aquanode/device.hpp"

namespace aquanode::link {

// One element per bit, values 0 or 1.
using BitStream = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kPreambleWord = 0xAA55;
inline constexpr int kPreambleBits = 16;
inline constexpr int kCrcBits = 8;
// receive() tolerates this many mid-frame coding-rule breaks before giving up
inline constexpr int kViolationBudget = 1;

BitStream bits_from_word(std::uint64_t word, int nbits);  // MSB first
std::uint64_t word_from_bits(const BitStream& bits);

// CRC-8, polynomial 0x07, init 0x00, no reflection, no final xor. The bit
// stream is processed MSB-first; a trailing partial byte is padded with
// zeros on the right.
std::uint8_t crc8(const BitStream& payload);

struct Packet {
  BitStream preamble;
  BitStream payload;
  std::uint8_t checksum = 0;

  BitStream wire_bits() const;  // preamble + payload + checksum bits
};

Packet frame(const BitStream& payload);

// Antenna switch state; high reflects the carrier.
enum class Level : std::uint8_t { low = 0, high = 1 };

struct LineSignal {
  std::vector<std::uint8_t> chips;  // 1 = reflective half-bit
  double chip_rate_hz = 0.0;
};

// FM0: the level always inverts at a bit boundary; a 0 inverts again
// mid-bit, a 1 holds. Two chips per bit.
LineSignal fm0_encode(const BitStream& bits, Level initial = Level::low,
                      double uplink_bps = 1000.0);

struct DecodeOutcome {
  BitStream bits;
  // chip indices where the boundary-inversion rule is broken
  std::vector<std::size_t> violations;
};

// Lenient decoder: bit = (first chip == second chip is a 1? no: equal chips
// mean the mid-bit held, i.e. 1). Boundary breaks are reported, not fatal.
DecodeOutcome fm0_decode(const LineSignal& sig);
DecodeOutcome fm0_decode_chips(const std::vector<std::uint8_t>& chips);

struct ChannelModel {
  double attenuation = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct TxReport {
  std::vector<double> samples;  // one per chip
  double duration_s = 0.0;
  double energy_mj = 0.0;
  int bit_count = 0;
};

// Reflective chips arrive at amplitude `attenuation`, absorbing chips at 20%
// of it, plus white Gaussian noise. Duration and energy follow the profile's
// uplink rate and backscatter power.
TxReport transmit(const Packet& pkt, const ChannelModel& ch,
                  const device::DeviceProfile& profile);
TxReport transmit_bits(const BitStream& bits, const ChannelModel& ch,
                       const device::DeviceProfile& profile,
                       Level initial = Level::low);

enum class RxStatus { ok, no_preamble, fm0_violation, crc_mismatch };

const char* rx_status_name(RxStatus s);

struct RxResult {
  RxStatus status = RxStatus::no_preamble;
  BitStream payload;            // filled when a frame was located and decoded
  std::size_t error_pos = 0;    // chip index of the first fatal rule break
  int boundary_violations = 0;  // tolerated break count
};

// Threshold, hunt for the preamble by correlation (either polarity), decode,
// check the trailing CRC.
RxResult receive(const std::vector<double>& samples);

}  // namespace aquanode::link
