#include "burstnet/acars.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace burstnet::signal {

namespace {

constexpr std::size_t kPreKeyChars = 16;
constexpr std::size_t kSohIndex = 20;
constexpr std::size_t kTextIndex = 44;

void put_field(std::vector<std::uint8_t>& out, const std::string& value, std::size_t width, const char* name) {
  if (value.size() != width)
    throw AcarsError(std::string("ACARS ") + name + " must be " + std::to_string(width) + " characters, got " +
                     std::to_string(value.size()));
  for (char c : value) {
    const auto u = static_cast<unsigned char>(c);
    if (u > 0x7F) throw AcarsError(std::string("ACARS ") + name + " contains a non 7-bit character");
    out.push_back(odd_parity(u));
  }
}

void put_char(std::vector<std::uint8_t>& out, char c, const char* name) {
  put_field(out, std::string(1, c), 1, name);
}

std::string take(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>(bytes[pos + i] & 0x7F));
  return s;
}

}  // namespace

std::uint8_t odd_parity(std::uint8_t ch) {
  const std::uint8_t c = ch & 0x7F;
  return std::popcount(c) % 2 == 0 ? static_cast<std::uint8_t>(c | 0x80) : c;
}

std::uint16_t acars_bcs(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0;
  for (auto b : bytes) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) crc = (crc & 1) ? static_cast<std::uint16_t>((crc >> 1) ^ 0x8408) : crc >> 1;
  }
  return crc;
}

std::vector<std::uint8_t> acars_frame_bytes(const AcarsFrame& f) {
  if (f.text.size() > kAcarsMaxText)
    throw AcarsError("ACARS text is " + std::to_string(f.text.size()) + " characters; maximum is " +
                     std::to_string(kAcarsMaxText));
  for (char c : f.text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u > 0x7E) throw AcarsError("ACARS text must be printable 7-bit ASCII");
  }
  std::vector<std::uint8_t> out(kPreKeyChars, 0xFF);
  out.push_back(odd_parity('+'));
  out.push_back(odd_parity('*'));
  out.push_back(odd_parity(kSyn));
  out.push_back(odd_parity(kSyn));
  out.push_back(odd_parity(kSoh));
  put_char(out, f.mode, "mode");
  put_field(out, f.address, 7, "address");
  put_char(out, f.ack, "ack");
  put_field(out, f.label, 2, "label");
  put_char(out, f.block_id, "block id");
  out.push_back(odd_parity(kStx));
  put_field(out, f.msn, 4, "msn");
  put_field(out, f.flight_id, 6, "flight id");
  for (char c : f.text) out.push_back(odd_parity(static_cast<std::uint8_t>(c)));
  out.push_back(odd_parity(f.final_block ? kEtx : kEtb));
  const auto bcs = acars_bcs(std::span(out).subspan(kSohIndex));
  out.push_back(static_cast<std::uint8_t>(bcs & 0xFF));
  out.push_back(static_cast<std::uint8_t>(bcs >> 8));
  return out;
}

Bits encode_acars(const AcarsFrame& frame) {
  const auto bytes = acars_frame_bytes(frame);
  Bits bits;
  bits.reserve(bytes.size() * 8);
  for (auto b : bytes)
    for (int i = 0; i < 8; ++i) bits.push_back(static_cast<std::uint8_t>((b >> i) & 1));
  return bits;
}

bool acars_bcs_valid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kAcarsFixedChars) return false;
  const std::size_t body_end = bytes.size() - 2;
  const auto bcs = acars_bcs(bytes.subspan(kSohIndex, body_end - kSohIndex));
  return bytes[body_end] == (bcs & 0xFF) && bytes[body_end + 1] == (bcs >> 8);
}

AcarsFrame decode_acars(std::span<const std::uint8_t> bits) {
  if (bits.size() % 8 != 0) throw AcarsError("ACARS bit count " + std::to_string(bits.size()) + " is not whole characters");
  std::vector<std::uint8_t> bytes(bits.size() / 8);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::uint8_t b = 0;
    for (int k = 0; k < 8; ++k) b |= static_cast<std::uint8_t>((bits[i * 8 + k] & 1) << k);
    bytes[i] = b;
  }
  if (bytes.size() < kAcarsFixedChars) throw AcarsError("ACARS frame truncated");
  for (std::size_t i = 0; i < kPreKeyChars; ++i)
    if (bytes[i] != 0xFF) throw AcarsError("ACARS pre-key corrupted at character " + std::to_string(i));
  const std::size_t body_end = bytes.size() - 2;
  for (std::size_t i = kPreKeyChars; i < body_end; ++i)
    if (std::popcount(bytes[i]) % 2 == 0) throw AcarsError("ACARS parity error at character " + std::to_string(i));
  auto code = [&](std::size_t i) { return static_cast<std::uint8_t>(bytes[i] & 0x7F); };
  if (code(16) != '+' || code(17) != '*') throw AcarsError("ACARS bit sync not found");
  if (code(18) != kSyn || code(19) != kSyn) throw AcarsError("ACARS character sync not found");
  if (code(kSohIndex) != kSoh) throw AcarsError("ACARS SOH not found");
  if (code(33) != kStx) throw AcarsError("ACARS STX not found");
  const auto terminator = code(body_end - 1);
  if (terminator != kEtx && terminator != kEtb) throw AcarsError("ACARS frame lacks ETX/ETB");
  if (!acars_bcs_valid(bytes)) throw AcarsError("ACARS BCS mismatch");

  AcarsFrame f;
  f.mode = static_cast<char>(code(21));
  f.address = take(bytes, 22, 7);
  f.ack = static_cast<char>(code(29));
  f.label = take(bytes, 30, 2);
  f.block_id = static_cast<char>(code(32));
  f.msn = take(bytes, 34, 4);
  f.flight_id = take(bytes, 38, 6);
  f.text = take(bytes, kTextIndex, body_end - 1 - kTextIndex);
  for (char c : f.text)
    if (c == static_cast<char>(kEtx) || c == static_cast<char>(kEtb)) throw AcarsError("ACARS text contains a terminator");
  f.final_block = terminator == kEtx;
  return f;
}

std::size_t acars_samples_per_symbol(double sample_rate_hz, const WaveformTemplate& tmpl) {
  const double sps = sample_rate_hz / tmpl.acars_baud;
  const double rounded = std::round(sps);
  if (rounded < 2 || std::abs(sps - rounded) > 1e-9 * sps)
    throw SignalError("ACARS sample rate " + std::to_string(sample_rate_hz) + " Hz gives " + std::to_string(sps) +
                      " samples per symbol; an integer >= 2 is required");
  return static_cast<std::size_t>(rounded);
}

IQBurst modulate_acars(std::span<const std::uint8_t> bits, double sample_rate_hz, const WaveformTemplate& tmpl) {
  const std::size_t sps = acars_samples_per_symbol(sample_rate_hz, tmpl);
  const std::size_t total = bits.size() * sps;
  IQBurst burst;
  burst.kind = BurstKind::acars;
  burst.sample_rate_hz = sample_rate_hz;
  burst.samples.resize(total);
  burst.active_length = total;

  const double step = 2.0 * std::numbers::pi * tmpl.acars_deviation_hz / sample_rate_hz;
  const std::size_t ramp = std::min(tmpl.acars_ramp_symbols * sps, total / 2);
  double phase = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double dir = bits[i] ? 1.0 : -1.0;
    for (std::size_t s = 0; s < sps; ++s) {
      const std::size_t n = i * sps + s;
      double amp = 1.0;
      if (n < ramp)
        amp = 0.5 * (1.0 - std::cos(std::numbers::pi * (static_cast<double>(n) + 0.5) / static_cast<double>(ramp)));
      else if (n >= total - ramp)
        amp = 0.5 * (1.0 - std::cos(std::numbers::pi * (static_cast<double>(total - n) - 0.5) / static_cast<double>(ramp)));
      phase += dir * step;
      burst.samples[n] = std::polar(amp, phase);
    }
    phase = std::remainder(phase, 2.0 * std::numbers::pi);
  }
  return burst;
}

Bits demodulate_acars(std::span<const Complex> samples, std::size_t bit_count, double sample_rate_hz,
                      std::size_t start, const WaveformTemplate& tmpl) {
  const std::size_t sps = acars_samples_per_symbol(sample_rate_hz, tmpl);
  if (start + bit_count * sps > samples.size())
    throw SignalError("ACARS demodulation needs " + std::to_string(bit_count * sps) + " samples from offset " +
                      std::to_string(start) + ", only " + std::to_string(samples.size()) + " available");
  Bits bits(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) {
    Complex acc{0.0, 0.0};
    const std::size_t begin = start + i * sps;
    for (std::size_t n = std::max<std::size_t>(begin, 1); n < begin + sps; ++n)
      acc += samples[n] * std::conj(samples[n - 1]);
    bits[i] = acc.imag() > 0.0 ? 1 : 0;
  }
  return bits;
}

}  // namespace burstnet::signal
