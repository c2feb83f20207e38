// SPDX-License-Identifier: Apache-2.0
#include "aquanode/link.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aquanode/errors.hpp"
#include "aquanode/rng.hpp"

namespace aquanode::link {

namespace {

void check_bits(const BitStream& bits, const char* who) {
  for (std::uint8_t b : bits)
    if (b > 1) throw InvalidInput(std::string(who) + ": bit stream holds a value > 1");
}

// absorbing chips ride at this fraction of the reflective amplitude
constexpr double kLowLevelRatio = 0.2;
constexpr int kMinPreambleScore = 30;  // out of 32 preamble chips

}  // namespace

BitStream bits_from_word(std::uint64_t word, int nbits) {
  if (nbits < 1 || nbits > 64) throw InvalidInput("bits_from_word: width out of range");
  BitStream b(nbits);
  for (int i = 0; i < nbits; ++i)
    b[i] = static_cast<std::uint8_t>((word >> (nbits - 1 - i)) & 1);
  return b;
}

std::uint64_t word_from_bits(const BitStream& bits) {
  if (bits.size() > 64) throw InvalidInput("word_from_bits: more than 64 bits");
  check_bits(bits, "word_from_bits");
  std::uint64_t w = 0;
  for (std::uint8_t b : bits) w = (w << 1) | b;
  return w;
}

std::uint8_t crc8(const BitStream& payload) {
  check_bits(payload, "crc8");
  // pack MSB-first, zero-pad the tail byte
  std::uint8_t crc = 0x00;
  std::size_t i = 0;
  while (i < payload.size()) {
    std::uint8_t byte = 0;
    for (int k = 0; k < 8; ++k) {
      byte = static_cast<std::uint8_t>(byte << 1);
      if (i < payload.size()) byte |= payload[i];
      ++i;
    }
    crc ^= byte;
    for (int k = 0; k < 8; ++k)
      crc = (crc & 0x80) ? static_cast<std::uint8_t>((crc << 1) ^ 0x07)
                         : static_cast<std::uint8_t>(crc << 1);
  }
  return crc;
}

BitStream Packet::wire_bits() const {
  BitStream w;
  w.reserve(preamble.size() + payload.size() + kCrcBits);
  w.insert(w.end(), preamble.begin(), preamble.end());
  w.insert(w.end(), payload.begin(), payload.end());
  const BitStream c = bits_from_word(checksum, kCrcBits);
  w.insert(w.end(), c.begin(), c.end());
  return w;
}

Packet frame(const BitStream& payload) {
  if (payload.empty()) throw InvalidInput("frame: empty payload");
  check_bits(payload, "frame");
  Packet p;
  p.preamble = bits_from_word(kPreambleWord, kPreambleBits);
  p.payload = payload;
  p.checksum = crc8(payload);
  return p;
}

LineSignal fm0_encode(const BitStream& bits, Level initial, double uplink_bps) {
  if (bits.empty()) throw InvalidInput("fm0_encode: empty bit stream");
  check_bits(bits, "fm0_encode");
  if (!(uplink_bps > 0.0)) throw InvalidInput("fm0_encode: uplink rate must be positive");

  LineSignal sig;
  sig.chip_rate_hz = 2.0 * uplink_bps;
  sig.chips.reserve(bits.size() * 2);
  std::uint8_t level = static_cast<std::uint8_t>(initial);
  for (std::uint8_t bit : bits) {
    level ^= 1;  // boundary inversion, every bit
    sig.chips.push_back(level);
    if (bit == 0) level ^= 1;  // a zero inverts again mid-bit
    sig.chips.push_back(level);
  }
  return sig;
}

DecodeOutcome fm0_decode_chips(const std::vector<std::uint8_t>& chips) {
  if (chips.size() < 2 || chips.size() % 2 != 0)
    throw InvalidInput("fm0_decode: need a positive even chip count");
  for (std::uint8_t c : chips)
    if (c > 1) throw InvalidInput("fm0_decode: chip value > 1");

  DecodeOutcome out;
  out.bits.resize(chips.size() / 2);
  for (std::size_t i = 0; i < out.bits.size(); ++i) {
    // equal halves mean the level held mid-bit: that is a 1
    out.bits[i] = chips[2 * i] == chips[2 * i + 1] ? 1 : 0;
    // the level must flip entering the next bit
    if (2 * i + 2 < chips.size() && chips[2 * i + 1] == chips[2 * i + 2])
      out.violations.push_back(2 * i + 2);
  }
  return out;
}

DecodeOutcome fm0_decode(const LineSignal& sig) { return fm0_decode_chips(sig.chips); }

TxReport transmit_bits(const BitStream& bits, const ChannelModel& ch,
                       const device::DeviceProfile& profile, Level initial) {
  profile.validate();
  if (!(ch.attenuation > 0.0)) throw InvalidInput("transmit: attenuation must be positive");
  if (!(ch.noise_sigma >= 0.0)) throw InvalidInput("transmit: negative noise sigma");

  const LineSignal sig = fm0_encode(bits, initial, profile.uplink_bps);
  rng::Stream noise(rng::derive(ch.seed, 0x4e4f));

  TxReport r;
  r.bit_count = static_cast<int>(bits.size());
  r.duration_s = static_cast<double>(bits.size()) / profile.uplink_bps;
  r.energy_mj = device::stage_energy(profile.p_backscatter_uw, r.duration_s);
  r.samples.resize(sig.chips.size());
  for (std::size_t i = 0; i < sig.chips.size(); ++i) {
    const double amp = sig.chips[i] ? ch.attenuation : kLowLevelRatio * ch.attenuation;
    r.samples[i] = ch.noise_sigma > 0.0 ? amp + ch.noise_sigma * noise.gaussian() : amp;
  }
  return r;
}

TxReport transmit(const Packet& pkt, const ChannelModel& ch,
                  const device::DeviceProfile& profile) {
  return transmit_bits(pkt.wire_bits(), ch, profile, Level::low);
}

const char* rx_status_name(RxStatus s) {
  switch (s) {
    case RxStatus::ok: return "ok";
    case RxStatus::no_preamble: return "no_preamble";
    case RxStatus::fm0_violation: return "fm0_violation";
    case RxStatus::crc_mismatch: return "crc_mismatch";
  }
  return "?";
}

RxResult receive(const std::vector<double>& samples) {
  RxResult res;
  constexpr int kPreambleChips = 2 * kPreambleBits;
  constexpr std::size_t kMinFrameBits = kPreambleBits + 1 + kCrcBits;

  if (samples.size() < 2 * kMinFrameBits) return res;  // no_preamble

  double lo = samples[0], hi = samples[0];
  for (double s : samples) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (!(hi > lo)) return res;  // flat line carries nothing

  const double thr = 0.5 * (lo + hi);
  std::vector<int> hard(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) hard[i] = samples[i] > thr ? 1 : -1;

  // the reference preamble waveform, sent from a low idle level
  const LineSignal ref_sig =
      fm0_encode(bits_from_word(kPreambleWord, kPreambleBits), Level::low, 1000.0);
  int ref[kPreambleChips];
  for (int i = 0; i < kPreambleChips; ++i) ref[i] = ref_sig.chips[i] ? 1 : -1;

  // correlation hunt, either polarity
  std::size_t best_off = 0;
  int best_score = 0;
  for (std::size_t off = 0; off + kPreambleChips <= samples.size(); ++off) {
    int score = 0;
    for (int i = 0; i < kPreambleChips; ++i) score += ref[i] * hard[off + i];
    if (std::abs(score) > std::abs(best_score)) {
      best_score = score;
      best_off = off;
    }
  }
  if (std::abs(best_score) < kMinPreambleScore) return res;  // no_preamble

  std::vector<std::uint8_t> chips;
  chips.reserve(samples.size() - best_off);
  const bool inverted = best_score < 0;
  for (std::size_t i = best_off; i < samples.size(); ++i) {
    const bool high = hard[i] > 0;
    chips.push_back(static_cast<std::uint8_t>(high != inverted ? 1 : 0));
  }
  if (chips.size() % 2 != 0) chips.pop_back();
  if (chips.size() < 2 * kMinFrameBits) return res;

  const DecodeOutcome dec = fm0_decode_chips(chips);

  const BitStream want = bits_from_word(kPreambleWord, kPreambleBits);
  for (int i = 0; i < kPreambleBits; ++i)
    if (dec.bits[i] != want[i]) return res;  // correlation hit was spurious

  res.boundary_violations = static_cast<int>(dec.violations.size());
  if (res.boundary_violations > kViolationBudget) {
    res.status = RxStatus::fm0_violation;
    res.error_pos = best_off + dec.violations[0];
    return res;
  }

  res.payload.assign(dec.bits.begin() + kPreambleBits, dec.bits.end() - kCrcBits);
  const BitStream crc_bits(dec.bits.end() - kCrcBits, dec.bits.end());
  const std::uint8_t got = static_cast<std::uint8_t>(word_from_bits(crc_bits));
  res.status = crc8(res.payload) == got ? RxStatus::ok : RxStatus::crc_mismatch;
  return res;
}

}  // namespace aquanode::link
