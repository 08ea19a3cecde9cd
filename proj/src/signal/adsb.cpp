#include "burstnet/adsb.hpp"

#include <array>
#include <cmath>
#include <string>

namespace burstnet::signal {

namespace {

constexpr std::uint32_t kMask24 = 0xFFFFFF;

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t reg = i << 16;
    for (int k = 0; k < 8; ++k) reg = (reg & 0x800000) ? ((reg << 1) ^ kModeSGenerator) & kMask24 : (reg << 1) & kMask24;
    table[i] = reg;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

void put_bits(Bits& out, std::uint32_t value, int width) {
  for (int i = width - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

std::uint32_t get_bits(std::span<const std::uint8_t> bits, std::size_t pos, int width) {
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 1) | (bits[pos + static_cast<std::size_t>(i)] & 1);
  return v;
}

}  // namespace

std::uint32_t mode_s_crc(std::span<const std::uint8_t> bits) {
  std::uint32_t reg = 0;
  std::size_t i = 0;
  for (; i + 8 <= bits.size(); i += 8) {
    std::uint32_t byte = 0;
    for (std::size_t k = 0; k < 8; ++k) byte = (byte << 1) | (bits[i + k] & 1);
    reg = ((reg << 8) ^ kCrcTable[((reg >> 16) ^ byte) & 0xFF]) & kMask24;
  }
  for (; i < bits.size(); ++i) {
    const bool top = ((reg >> 23) & 1) != (bits[i] & 1);
    reg = (reg << 1) & kMask24;
    if (top) reg ^= kModeSGenerator & kMask24;
  }
  return reg;
}

std::uint32_t adsb_syndrome(std::span<const std::uint8_t> frame_bits) {
  if (frame_bits.size() != kAdsbFrameBits)
    throw AdsbError("ADS-B frame must be " + std::to_string(kAdsbFrameBits) + " bits, got " +
                    std::to_string(frame_bits.size()));
  const std::size_t data = kAdsbFrameBits - kAdsbParityBits;
  return mode_s_crc(frame_bits.first(data)) ^ get_bits(frame_bits, data, kAdsbParityBits);
}

Bits encode_adsb(std::uint8_t downlink_format, std::uint32_t icao_address, std::span<const std::uint8_t> payload) {
  if (downlink_format > 31) throw AdsbError("downlink format must fit in 5 bits");
  if (icao_address > kMask24) throw AdsbError("ICAO address must fit in 24 bits");
  if (payload.size() != kAdsbPayloadBits)
    throw AdsbError("ADS-B payload must be " + std::to_string(kAdsbPayloadBits) + " bits to complete a " +
                    std::to_string(kAdsbFrameBits) + "-bit frame, got " + std::to_string(payload.size()));
  Bits bits;
  bits.reserve(kAdsbFrameBits);
  put_bits(bits, downlink_format, 5);
  for (std::size_t i = 0; i < kCapabilityBits; ++i) bits.push_back(payload[i] & 1);
  put_bits(bits, icao_address, 24);
  for (std::size_t i = kCapabilityBits; i < payload.size(); ++i) bits.push_back(payload[i] & 1);
  put_bits(bits, mode_s_crc(bits), kAdsbParityBits);
  return bits;
}

AdsbFrame decode_adsb(std::span<const std::uint8_t> frame_bits) {
  const auto syndrome = adsb_syndrome(frame_bits);
  if (syndrome != 0) throw AdsbError("ADS-B CRC syndrome is non-zero");
  AdsbFrame f;
  f.downlink_format = static_cast<std::uint8_t>(get_bits(frame_bits, 0, 5));
  f.icao_address = get_bits(frame_bits, 5 + kCapabilityBits, 24);
  f.payload.assign(frame_bits.begin() + 5, frame_bits.begin() + 5 + kCapabilityBits);
  f.payload.insert(f.payload.end(), frame_bits.begin() + 32, frame_bits.begin() + 32 + kAdsbPayloadBits - kCapabilityBits);
  f.parity = get_bits(frame_bits, kAdsbFrameBits - kAdsbParityBits, kAdsbParityBits);
  return f;
}

std::size_t adsb_samples_per_chip(double sample_rate_hz, const WaveformTemplate& tmpl) {
  const double spc = sample_rate_hz * tmpl.adsb_chip_us * 1e-6;
  const double rounded = std::round(spc);
  if (rounded < 1 || std::abs(spc - rounded) > 1e-9 * spc)
    throw SignalError("ADS-B sample rate " + std::to_string(sample_rate_hz) + " Hz gives " + std::to_string(spc) +
                      " samples per chip; an integer is required");
  return static_cast<std::size_t>(rounded);
}

IQBurst modulate_adsb(std::span<const std::uint8_t> frame_bits, double sample_rate_hz, const WaveformTemplate& tmpl) {
  const std::size_t spc = adsb_samples_per_chip(sample_rate_hz, tmpl);
  if (frame_bits.size() != tmpl.adsb_frame_bits)
    throw AdsbError("ADS-B modulator expects " + std::to_string(tmpl.adsb_frame_bits) + " bits, got " +
                    std::to_string(frame_bits.size()));
  const std::size_t chips = tmpl.adsb_preamble_chip_count + 2 * frame_bits.size();
  IQBurst burst;
  burst.kind = BurstKind::adsb;
  burst.sample_rate_hz = sample_rate_hz;
  burst.samples.assign(chips * spc, Complex{0.0, 0.0});
  burst.active_length = burst.samples.size();
  auto pulse = [&](std::size_t chip) {
    for (std::size_t s = 0; s < spc; ++s) burst.samples[chip * spc + s] = Complex{1.0, 0.0};
  };
  for (auto c : tmpl.adsb_preamble_chips) {
    if (c >= tmpl.adsb_preamble_chip_count) throw SignalError("preamble pulse lies outside the preamble");
    pulse(c);
  }
  for (std::size_t i = 0; i < frame_bits.size(); ++i)
    pulse(tmpl.adsb_preamble_chip_count + 2 * i + (frame_bits[i] ? 0 : 1));
  return burst;
}

Bits demodulate_adsb(std::span<const Complex> samples, double sample_rate_hz, std::size_t start,
                     const WaveformTemplate& tmpl) {
  const std::size_t spc = adsb_samples_per_chip(sample_rate_hz, tmpl);
  const std::size_t chips = tmpl.adsb_preamble_chip_count + 2 * tmpl.adsb_frame_bits;
  if (start + chips * spc > samples.size())
    throw SignalError("ADS-B demodulation needs " + std::to_string(chips * spc) + " samples from offset " +
                      std::to_string(start));
  auto energy = [&](std::size_t chip) {
    double e = 0.0;
    for (std::size_t s = 0; s < spc; ++s) e += std::norm(samples[start + chip * spc + s]);
    return e;
  };
  Bits bits(tmpl.adsb_frame_bits);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const std::size_t chip = tmpl.adsb_preamble_chip_count + 2 * i;
    bits[i] = energy(chip) > energy(chip + 1) ? 1 : 0;
  }
  return bits;
}

}  // namespace burstnet::signal
