#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "burstnet/signal.hpp"

namespace burstnet::signal {

inline constexpr std::size_t kAdsbFrameBits = 112;
inline constexpr std::size_t kAdsbParityBits = 24;
inline constexpr std::size_t kCapabilityBits = 3;
// CA then ME; the frame is DF(5) CA(3) AA(24) ME(56) PI(24).
inline constexpr std::size_t kAdsbPayloadBits = kAdsbFrameBits - 5 - 24 - kAdsbParityBits;
inline constexpr std::uint32_t kModeSGenerator = 0x1FFF409;

struct AdsbFrame {
  std::uint8_t downlink_format = 17;
  std::uint32_t icao_address = 0;
  Bits payload;  // kAdsbPayloadBits
  std::uint32_t parity = 0;

  friend bool operator==(const AdsbFrame&, const AdsbFrame&) = default;
};

class AdsbError : public SignalError {
 public:
  using SignalError::SignalError;
};

// Remainder of bits(x) * x^24 modulo the Mode S generator.
std::uint32_t mode_s_crc(std::span<const std::uint8_t> bits);

// CRC of the first 88 bits XOR the trailing parity field; zero for a valid frame.
std::uint32_t adsb_syndrome(std::span<const std::uint8_t> frame_bits);

Bits encode_adsb(std::uint8_t downlink_format, std::uint32_t icao_address, std::span<const std::uint8_t> payload);
AdsbFrame decode_adsb(std::span<const std::uint8_t> frame_bits);

std::size_t adsb_samples_per_chip(double sample_rate_hz, const WaveformTemplate& tmpl = {});

// Preamble pulses then one bit per two chips (pulse in the first chip for 1).
IQBurst modulate_adsb(std::span<const std::uint8_t> frame_bits, double sample_rate_hz,
                      const WaveformTemplate& tmpl = {});

// Energy comparison of the two chips of each bit; `start` is the first
// preamble sample.
Bits demodulate_adsb(std::span<const Complex> samples, double sample_rate_hz, std::size_t start = 0,
                     const WaveformTemplate& tmpl = {});

}  // namespace burstnet::signal
