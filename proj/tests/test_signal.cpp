#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "burstnet/acars.hpp"
#include "burstnet/adsb.hpp"
#include "burstnet/dataset.hpp"
#include "burstnet/signal.hpp"
#include "protocol_oracles.hpp"

using namespace burstnet;
using namespace burstnet::signal;
using namespace burstnet::testing;

namespace {

constexpr double kAcarsRate = 48000.0;
constexpr double kAdsbRate = 8e6;

std::vector<std::uint8_t> to_bytes(std::string_view s) { return {s.begin(), s.end()}; }

IQBurst random_unit_burst(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  IQBurst b;
  b.sample_rate_hz = 1e6;
  b.samples.resize(n);
  for (auto& s : b.samples) s = {g(rng), g(rng)};
  normalize_power(b);
  return b;
}

std::size_t dft_peak(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  return best;
}

double max_abs_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("BCS implementation matches the bitwise oracle and the published check value") {
  const auto check = to_bytes("123456789");
  CHECK(acars_bcs(check) == 0x2189);
  CHECK(crc16_reflected_oracle(check) == 0x2189);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto bytes = random_bits(rng, rng() % 64);
    CHECK(acars_bcs(bytes) == crc16_reflected_oracle(bytes));
  }
}

TEST_CASE("empty-text ACARS frame has only the fixed characters") {
  AcarsFrame f;
  const auto bytes = acars_frame_bytes(f);
  CHECK(bytes.size() == 16 + 2 + 2 + 1 + 1 + 7 + 1 + 2 + 1 + 1 + 4 + 6 + 1 + 2);
  CHECK(bytes.size() == kAcarsFixedChars);
  CHECK(encode_acars(f).size() == 8 * kAcarsFixedChars);
  f.text = std::string(kAcarsMaxText, 'A');
  CHECK(acars_frame_bytes(f).size() == kAcarsFixedChars + kAcarsMaxText);
  f.text.push_back('A');
  CHECK_THROWS_AS(encode_acars(f), AcarsError);
}

TEST_CASE("ACARS characters carry odd parity and the BCS covers SOH through ETX") {
  AcarsFrame f;
  f.text = "HELLO";
  const auto bytes = acars_frame_bytes(f);
  for (std::size_t i = 16; i + 2 < bytes.size(); ++i) CHECK(std::popcount(bytes[i]) % 2 == 1);
  const std::span<const std::uint8_t> covered(bytes.data() + 20, bytes.size() - 22);
  CHECK((covered.front() & 0x7F) == kSoh);
  CHECK((covered.back() & 0x7F) == kEtx);
  const auto bcs = crc16_reflected_oracle(covered);
  CHECK(bytes[bytes.size() - 2] == (bcs & 0xFF));
  CHECK(bytes[bytes.size() - 1] == (bcs >> 8));
}

TEST_CASE("ACARS encode/decode round trip over random frames") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto f = random_acars_frame(rng);
    CHECK(decode_acars(encode_acars(f)) == f);
  }
}

TEST_CASE("any single-bit error in an ACARS text character fails the BCS") {
  AcarsFrame f;
  f.text = "POSITION REPORT 4512N 07330W";
  const auto bytes = acars_frame_bytes(f);
  const std::size_t text_begin = kAcarsFixedChars - 3;
  for (std::size_t i = text_begin; i < text_begin + f.text.size(); ++i)
    for (int b = 0; b < 8; ++b) {
      auto bad = bytes;
      bad[i] ^= static_cast<std::uint8_t>(1 << b);
      CHECK_FALSE(acars_bcs_valid(bad));
      auto bits = encode_acars(f);
      bits[i * 8 + static_cast<std::size_t>(b)] ^= 1;
      CHECK_THROWS_AS(decode_acars(bits), AcarsError);
    }
  CHECK(acars_bcs_valid(bytes));
}

TEST_CASE("ACARS field widths are enforced") {
  AcarsFrame f;
  f.address = "SHORT";
  CHECK_THROWS_AS(encode_acars(f), AcarsError);
  f = {};
  f.text = "bad\x01";
  CHECK_THROWS_AS(encode_acars(f), AcarsError);
}

TEST_CASE("ACARS sample rate must give integer samples per symbol") {
  CHECK_THROWS_AS(acars_samples_per_symbol(16000.0), SignalError);
  CHECK(acars_samples_per_symbol(48000.0) == 20);
  CHECK_THROWS_AS(modulate_acars(Bits{1, 0, 1}, 16000.0), SignalError);
}

TEST_CASE("MSK has constant envelope between the ramps and demodulates exactly") {
  std::mt19937_64 rng(5);
  const WaveformTemplate tmpl;
  for (int trial = 0; trial < 20; ++trial) {
    const auto bits = random_bits(rng, 64 + rng() % 400);
    const auto burst = modulate_acars(bits, kAcarsRate);
    const std::size_t sps = 20, ramp = tmpl.acars_ramp_symbols * sps;
    REQUIRE(burst.samples.size() == bits.size() * sps);
    for (std::size_t n = ramp; n + ramp < burst.samples.size(); ++n)
      CHECK(std::abs(std::abs(burst.samples[n]) - 1.0) < 1e-6);
    CHECK(demodulate_acars(burst.samples, bits.size(), kAcarsRate) == bits);
    CHECK(modulate_acars(bits, kAcarsRate).samples == burst.samples);
  }
  // Per-symbol phase advance is +-pi/2 (minimum shift keying).
  const auto burst = modulate_acars(Bits{1, 1, 0, 0, 1, 0, 1, 1, 0}, kAcarsRate);
  for (std::size_t i = 2; i < 7; ++i) {
    const auto d = std::arg(burst.samples[(i + 1) * 20 - 1] * std::conj(burst.samples[i * 20 - 1]));
    CHECK(std::abs(std::abs(d) - std::numbers::pi / 2) < 1e-9);
  }
}

TEST_CASE("full ACARS frame survives modulation, placement and demodulation") {
  std::mt19937_64 rng(8);
  AcarsFrame f = random_acars_frame(rng);
  const auto bits = encode_acars(f);
  const auto placed = finalize_burst(modulate_acars(bits, kAcarsRate), bits.size() * 20 + 500, 4);
  const auto back = demodulate_acars(placed.samples, bits.size(), kAcarsRate, placed.active_begin);
  CHECK(decode_acars(back) == f);
}

TEST_CASE("Mode S CRC matches the long-division oracle") {
  CHECK(mode_s_crc(Bits(88, 0)) == 0);
  CHECK(crc24_long_division(Bits(88, 0)) == 0);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    const auto bits = random_bits(rng, 1 + rng() % 120);
    CHECK(mode_s_crc(bits) == crc24_long_division(bits));
  }
  const auto enc = encode_adsb(17, 0, Bits(kAdsbPayloadBits, 0));
  CHECK(decode_adsb(enc).parity == crc24_long_division(std::span(enc).first(88)));
}

TEST_CASE("recorded extended squitters have zero syndrome") {
  for (const char* hex : {"8D4840D6202CC371C32CE0576098", "8D406B902015A678D4D220AA4BDA"}) {
    const auto bits = hex_to_bits(hex);
    REQUIRE(bits.size() == 112);
    CHECK(adsb_syndrome(bits) == 0);
    const auto f = decode_adsb(bits);
    CHECK(f.downlink_format == 17);
    CHECK(encode_adsb(f.downlink_format, f.icao_address, f.payload) == bits);
  }
  CHECK(decode_adsb(hex_to_bits("8D4840D6202CC371C32CE0576098")).icao_address == 0x4840D6);
}

TEST_CASE("ADS-B encode/decode round trip and single-bit detection") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const auto payload = random_bits(rng, kAdsbPayloadBits);
    const auto icao = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    const auto bits = encode_adsb(17, icao, payload);
    REQUIRE(bits.size() == kAdsbFrameBits);
    CHECK(adsb_syndrome(bits) == 0);
    const auto f = decode_adsb(bits);
    CHECK(f.icao_address == icao);
    CHECK(f.payload == payload);
  }
  const auto bits = encode_adsb(17, 0xABCDEF, random_bits(rng, kAdsbPayloadBits));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    auto bad = bits;
    bad[i] ^= 1;
    CHECK(adsb_syndrome(bad) != 0);
  }
  CHECK_THROWS_AS(encode_adsb(17, 1, Bits(kAdsbPayloadBits - 1, 0)), AdsbError);
  CHECK_THROWS_AS(encode_adsb(32, 1, Bits(kAdsbPayloadBits, 0)), AdsbError);
}

TEST_CASE("ADS-B pulse train timing") {
  const WaveformTemplate tmpl;
  std::mt19937_64 rng(23);
  const auto bits = encode_adsb(17, 0x123456, random_bits(rng, kAdsbPayloadBits));
  const auto burst = modulate_adsb(bits, kAdsbRate);
  const double active_us = static_cast<double>(burst.samples.size()) / kAdsbRate * 1e6;
  CHECK(active_us == doctest::Approx(8.0 + 112.0));
  const std::size_t spc = adsb_samples_per_chip(kAdsbRate);
  CHECK(spc == 4);
  // Preamble pulses at 0, 1.0, 3.5 and 4.5 us.
  for (double us : {0.0, 1.0, 3.5, 4.5}) CHECK(std::abs(burst.samples[static_cast<std::size_t>(us * 8)]) == 1.0);
  for (double us : {0.5, 1.5, 2.0, 3.0, 5.0, 7.5}) CHECK(std::abs(burst.samples[static_cast<std::size_t>(us * 8)]) == 0.0);
  // Every on/off transition lands on a chip boundary.
  for (std::size_t n = 1; n < burst.samples.size(); ++n)
    if (burst.samples[n] != burst.samples[n - 1]) CHECK(n % spc == 0);
  CHECK(demodulate_adsb(burst.samples, kAdsbRate) == bits);
  CHECK_THROWS_AS(adsb_samples_per_chip(3e6), SignalError);
  CHECK(tmpl.adsb_preamble_chip_count * tmpl.adsb_chip_us == 8.0);
}

TEST_CASE("placed ADS-B burst has zero guard samples and demodulates") {
  std::mt19937_64 rng(29);
  const auto bits = encode_adsb(17, 0x00FF00, random_bits(rng, kAdsbPayloadBits));
  const auto burst = modulate_adsb(bits, kAdsbRate);
  for (std::uint64_t seed = 1; seed < 40; ++seed) {
    const auto placed = finalize_burst(burst, 1024, seed);
    for (std::size_t n = 0; n < placed.active_begin; ++n) CHECK(placed.samples[n] == Complex{});
    CHECK(demodulate_adsb(placed.samples, kAdsbRate, placed.active_begin) == bits);
  }
}

TEST_CASE("identity fingerprint is a no-op") {
  std::mt19937_64 rng(31);
  auto burst = modulate_adsb(encode_adsb(17, 7, random_bits(rng, kAdsbPayloadBits)), kAdsbRate);
  normalize_power(burst);
  EmitterProfile zero;
  zero.emitter_id = 4;
  const auto out = apply_fingerprint(burst, zero, 4.0);
  CHECK(max_abs_diff(out.samples, burst.samples) <= 1e-9);
  CHECK(out.emitter_id == 4);
  const auto acars = random_unit_burst(500, 2);
  CHECK(max_abs_diff(apply_fingerprint(acars, zero).samples, acars.samples) <= 1e-9);
}

TEST_CASE("pure CFO shifts a tone by exactly the offset") {
  const std::size_t n = 256;
  const double fs = 256e3;  // 1 kHz per DFT bin
  IQBurst tone;
  tone.sample_rate_hz = fs;
  for (std::size_t t = 0; t < n; ++t)
    tone.samples.push_back(std::polar(1.0, 2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / static_cast<double>(n)));
  CHECK(dft_peak(tone.samples) == 5);
  for (double bins : {12.0, -3.0, 40.0}) {
    EmitterProfile p;
    p.cfo_hz = bins * 1e3;
    const auto shifted = apply_fingerprint(tone, p);
    CHECK(dft_peak(shifted.samples) == static_cast<std::size_t>(5 + bins + n) % n);
  }
}

TEST_CASE("fingerprint impairments are each visible and renormalized") {
  std::mt19937_64 rng(37);
  auto burst = modulate_adsb(encode_adsb(17, 9, random_bits(rng, kAdsbPayloadBits)), kAdsbRate);
  normalize_power(burst);
  const auto complex_burst = random_unit_burst(2000, 38);
  auto single = [&](const IQBurst& in, auto set) {
    EmitterProfile p;
    set(p);
    const auto out = apply_fingerprint(in, p, 4.0);
    CHECK(mean_power(out.samples) == doctest::Approx(1.0).epsilon(1e-9));
    return max_abs_diff(out.samples, in.samples);
  };
  CHECK(single(complex_burst, [](auto& p) { p.clock_ppm = 5.0; }) > 1e-3);
  CHECK(single(complex_burst, [](auto& p) { p.iq_gain_db = 0.3; }) > 1e-3);
  CHECK(single(complex_burst, [](auto& p) { p.iq_phase_deg = 2.0; }) > 1e-3);
  CHECK(single(complex_burst, [](auto& p) { p.pa_a3 = 0.03; }) > 1e-3);
  // Real on/off pulses: Q-branch imbalance and cubic PA reduce to a gain, removed by renormalization.
  CHECK(single(burst, [](auto& p) { p.iq_gain_db = 0.3; }) < 1e-9);
  CHECK(single(burst, [](auto& p) { p.pa_a3 = 0.03; }) < 1e-9);
  CHECK(single(burst, [](auto& p) { p.rise_time_frac = 0.2; }) > 1e-3);
}

TEST_CASE("profiles are deterministic per emitter and distinct across emitters") {
  const double carrier = 1090e6;
  CHECK(sample_profile(5, 100, carrier) == sample_profile(5, 100, carrier));
  CHECK_FALSE(sample_profile(5, 100, carrier) == sample_profile(6, 100, carrier));
  std::mt19937_64 rng(41);
  auto burst = modulate_adsb(encode_adsb(17, 1, random_bits(rng, kAdsbPayloadBits)), kAdsbRate);
  normalize_power(burst);
  const ProfileRanges ranges;
  for (std::uint64_t id = 0; id < 20; ++id) {
    const auto a = sample_profile(5, id, carrier), b = sample_profile(5, id + 1, carrier);
    CHECK(a.cfo_hz != b.cfo_hz);
    CHECK(std::abs(a.cfo_hz) <= ranges.cfo_ppm * 1e-6 * carrier);
    CHECK(a.rise_time_frac >= ranges.rise_time_min);
    CHECK(a.rise_time_frac <= ranges.rise_time_max);
    const auto xa = apply_fingerprint(burst, a, 4.0).samples, xb = apply_fingerprint(burst, b, 4.0).samples;
    Complex dotp{};
    for (std::size_t i = 0; i < xa.size(); ++i) dotp += xa[i] * std::conj(xb[i]);
    const double rho = std::abs(dotp) / std::sqrt(mean_power(xa) * mean_power(xb)) / static_cast<double>(xa.size());
    CHECK(rho < 1.0 - 1e-5);
  }
}

TEST_CASE("AWGN noise power follows the definition") {
  const auto clean = random_unit_burst(200000, 43);
  CHECK(mean_power(clean.samples) == doctest::Approx(1.0).epsilon(1e-12));
  for (auto [snr, expected] : {std::pair{0.0, 1.0}, std::pair{9.0, 0.12589254117941673}}) {
    const auto noisy = add_awgn(clean, snr, 7);
    double pi = 0.0, pq = 0.0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
      const auto d = noisy.samples[i] - clean.samples[i];
      pi += d.real() * d.real();
      pq += d.imag() * d.imag();
    }
    const double n = static_cast<double>(clean.samples.size());
    CHECK((pi + pq) / n == doctest::Approx(expected).epsilon(0.02));
    CHECK(pi / n == doctest::Approx(expected / 2).epsilon(0.02));
    CHECK(noisy.snr_db == snr);
  }
  CHECK(std::pow(10.0, -0.9) == doctest::Approx(0.1259).epsilon(1e-3));
}

TEST_CASE("AWGN calibration within 0.1 dB and deterministic under seed") {
  const auto clean = random_unit_burst(100000, 47);
  for (double snr : {0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 20.0}) {
    const auto noisy = add_awgn(clean, snr, static_cast<std::uint64_t>(snr * 10) + 1);
    CHECK(std::abs(measured_snr_db(clean.samples, noisy.samples) - snr) < 0.1);
  }
  CHECK(add_awgn(clean, 6.0, 9).samples == add_awgn(clean, 6.0, 9).samples);
  CHECK(add_awgn(clean, 6.0, 9).samples != add_awgn(clean, 6.0, 10).samples);
}

TEST_CASE("interference pulses") {
  std::mt19937_64 rng(53);
  auto clean = modulate_acars(random_bits(rng, 3300), kAcarsRate);
  CHECK(inject_interference(clean, 0, 10.0, 1).samples == clean.samples);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<PulseInterval> placed;
    const auto out = inject_interference(clean, 1, 10.0, seed, &placed);
    REQUIRE(placed.size() == 1);
    const auto [begin, len] = placed[0];
    const std::span<const Complex> before(clean.samples.data() + begin, len), after(out.samples.data() + begin, len);
    std::vector<Complex> added(len);
    for (std::size_t i = 0; i < len; ++i) added[i] = after[i] - before[i];
    CHECK(10.0 * std::log10(mean_power(added) / mean_power(clean.samples)) == doctest::Approx(10.0).epsilon(1e-9));
    // Pulse power over its interval against the signal power over the same interval.
    const double rise = 10.0 * std::log10(mean_power(added) / mean_power(before));
    CHECK(std::abs(rise - 10.0) <= 0.5);
    for (std::size_t i = 0; i < begin; ++i) CHECK(out.samples[i] == clean.samples[i]);
    CHECK(out.samples == inject_interference(clean, 1, 10.0, seed).samples);
  }
}

TEST_CASE("finalize_burst window contract") {
  std::mt19937_64 rng(59);
  const auto burst = random_unit_burst(300, 61);
  double energy = 0.0;
  for (const auto& s : burst.samples) energy += std::norm(s);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t len = 300 + rng() % 700;
    const auto out = finalize_burst(burst, len, seed);
    CHECK(out.samples.size() == len);
    CHECK(out.active_begin + 300 <= len);
    double e = 0.0;
    for (const auto& s : out.samples) e += std::norm(s);
    CHECK(e == doctest::Approx(energy).epsilon(1e-12));
  }
  CHECK(finalize_burst(burst, 300, 99).active_begin == 0);
  CHECK_THROWS_AS(finalize_burst(burst, 299, 1), SignalError);
  FinalizeOptions crop{true, 10};
  const auto cropped = finalize_burst(burst, 200, 1, crop);
  CHECK(cropped.samples.size() == 200);
  CHECK(cropped.active_begin <= 10);
}

TEST_CASE("waveform template text round trip and overrides") {
  const WaveformTemplate t;
  CHECK(parse_waveform_template(format_waveform_template(t)) == t);
  const auto custom = parse_waveform_template("# faster chips\nadsb_chip_us = 0.25\nadsb_preamble_chips = 0, 2\n");
  CHECK(custom.adsb_chip_us == 0.25);
  CHECK(custom.adsb_preamble_chips == std::vector<std::size_t>{0, 2});
  CHECK(adsb_samples_per_chip(8e6, custom) == 2);
  CHECK_THROWS_AS(parse_waveform_template("bogus = 1"), SignalError);
  CHECK_THROWS_AS(parse_waveform_template("adsb_preamble_chips = 16"), SignalError);
  CHECK_THROWS_AS(parse_waveform_template("acars_baud"), SignalError);
}

TEST_CASE("stored bursts regenerate bit-exactly") {
  for (auto kind : {BurstKind::adsb, BurstKind::acars}) {
    dataset::DatasetConfig cfg;
    cfg.kind = kind;
    cfg.seed = 77;
    cfg.interference_fraction = 0.5;
    const auto profile = sample_profile(cfg.seed, 3, dataset::carrier_hz(cfg), cfg.ranges);
    for (std::size_t i = 0; i < 5; ++i) {
      const auto a = dataset::synthesize_burst(cfg, profile, i);
      const auto b = dataset::synthesize_burst(cfg, profile, i);
      CHECK(a.samples == b.samples);
      CHECK(a.samples.size() == cfg.sample_len);
      CHECK(add_awgn(a, 9.0, 5).samples == add_awgn(b, 9.0, 5).samples);
      CHECK(a.samples != dataset::synthesize_burst(cfg, profile, i + 1).samples);
    }
  }
}
