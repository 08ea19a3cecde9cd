#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "burstnet/signal.hpp"

namespace burstnet::signal {

inline constexpr std::size_t kAcarsMaxText = 220;
// 16 pre-key, 2 bit sync, 2 char sync, SOH, mode, 7 address, ack, 2 label,
// block id, STX, 4 MSN, 6 flight id, ETX/ETB, 2 BCS.
inline constexpr std::size_t kAcarsFixedChars = 47;

inline constexpr std::uint8_t kSoh = 0x01, kStx = 0x02, kEtx = 0x03, kEtb = 0x17, kSyn = 0x16;

struct AcarsFrame {
  char mode = '2';
  std::string address = ".N12345";  // 7 chars
  char ack = 0x15;                  // NAK
  std::string label = "H1";         // 2 chars
  char block_id = '1';
  std::string msn = "M01A";       // 4 chars
  std::string flight_id = "XX0001";  // 6 chars
  std::string text;
  bool final_block = true;  // ETX when true, ETB otherwise

  friend bool operator==(const AcarsFrame&, const AcarsFrame&) = default;
};

class AcarsError : public SignalError {
 public:
  using SignalError::SignalError;
};

std::uint8_t odd_parity(std::uint8_t ch);

// CRC-16/CCITT, reflected (polynomial 0x1021 processed LSB first, init 0).
std::uint16_t acars_bcs(std::span<const std::uint8_t> bytes);

// Transmitted characters, parity applied, BCS appended low byte first.
std::vector<std::uint8_t> acars_frame_bytes(const AcarsFrame& frame);

// Bytes serialized LSB first, 8 bits each.
Bits encode_acars(const AcarsFrame& frame);

// True when the BCS recomputed over SOH..ETX/ETB equals the trailing two bytes.
bool acars_bcs_valid(std::span<const std::uint8_t> frame_bytes);

// Inverse of encode_acars; throws AcarsError on sync, parity or BCS failure.
AcarsFrame decode_acars(std::span<const std::uint8_t> bits);

// Continuous-phase MSK at the template baud rate with raised-cosine ramps of
// acars_ramp_symbols at each end.
IQBurst modulate_acars(std::span<const std::uint8_t> bits, double sample_rate_hz,
                       const WaveformTemplate& tmpl = {});

// Differential-phase discriminator summed over each symbol; `start` is the
// first sample of symbol 0.
Bits demodulate_acars(std::span<const Complex> samples, std::size_t bit_count, double sample_rate_hz,
                      std::size_t start = 0, const WaveformTemplate& tmpl = {});

std::size_t acars_samples_per_symbol(double sample_rate_hz, const WaveformTemplate& tmpl = {});

}  // namespace burstnet::signal
