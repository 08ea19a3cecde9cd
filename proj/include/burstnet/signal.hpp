#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace burstnet::signal {

using Complex = std::complex<double>;
using Bits = std::vector<std::uint8_t>;  // one 0/1 value per element

enum class BurstKind { acars, adsb };

std::string to_string(BurstKind kind);
BurstKind burst_kind_from_string(std::string_view name);

class SignalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct IQBurst {
  std::vector<Complex> samples;
  double sample_rate_hz = 0.0;
  std::uint64_t emitter_id = 0;
  BurstKind kind = BurstKind::adsb;
  std::optional<double> snr_db;
  std::size_t active_begin = 0;   // first sample of the transmitted signal
  std::size_t active_length = 0;  // samples of transmitted signal inside the window
};

// Waveform constants for both burst kinds. Loadable from a key=value text file
// so every number is auditable and overridable.
struct WaveformTemplate {
  // ACARS
  double acars_baud = 2400.0;
  double acars_deviation_hz = 600.0;  // MSK: baud / 4
  std::size_t acars_ramp_symbols = 2;
  double acars_carrier_hz = 131.55e6;
  // ADS-B / Mode S
  double adsb_chip_us = 0.5;
  std::vector<std::size_t> adsb_preamble_chips{0, 2, 7, 9};
  std::size_t adsb_preamble_chip_count = 16;  // 8 us
  std::size_t adsb_frame_bits = 112;
  double adsb_carrier_hz = 1090e6;

  friend bool operator==(const WaveformTemplate&, const WaveformTemplate&) = default;
};

WaveformTemplate parse_waveform_template(std::string_view text);
WaveformTemplate load_waveform_template(const std::string& path);
std::string format_waveform_template(const WaveformTemplate& t);

// Mean |x|^2 over the samples (0 for an empty burst).
double mean_power(std::span<const Complex> samples);

// Scales so that mean_power over the whole sample window is 1.
void normalize_power(IQBurst& burst);

// Complex white Gaussian noise with per-sample variance P / 10^(snr_db/10),
// P measured over the full window.
IQBurst add_awgn(const IQBurst& burst, double target_snr_db, std::uint64_t noise_seed);

struct PulseInterval {
  std::size_t begin = 0;
  std::size_t length = 0;
};

// Rectangular complex pulses at seeded offsets, each pulse_power_db above the
// window's mean signal power.
IQBurst inject_interference(const IQBurst& burst, std::size_t pulse_count, double pulse_power_db,
                            std::uint64_t seed, std::vector<PulseInterval>* placed = nullptr);

struct FinalizeOptions {
  bool allow_crop = false;
  std::size_t max_crop_lead = 0;  // lead-in zeros drawn from [0, max_crop_lead] when cropping
};

// Places the burst at a seeded offset inside a zeroed window of exactly
// target_len samples.
IQBurst finalize_burst(const IQBurst& burst, std::size_t target_len, std::uint64_t offset_seed,
                       const FinalizeOptions& options = {});

struct EmitterProfile {
  std::uint64_t emitter_id = 0;
  double cfo_hz = 0.0;
  double iq_gain_db = 0.0;
  double iq_phase_deg = 0.0;
  double pa_a3 = 0.0;
  double rise_time_frac = 0.0;
  double clock_ppm = 0.0;
  std::uint64_t profile_seed = 0;

  friend bool operator==(const EmitterProfile&, const EmitterProfile&) = default;
};

struct ProfileRanges {
  double cfo_ppm = 2.0;  // +/- of carrier
  double iq_gain_db = 0.5;
  double iq_phase_deg = 3.0;
  double pa_a3_max = 0.05;
  double rise_time_min = 0.05;
  double rise_time_max = 0.3;
  double clock_ppm = 5.0;

  friend bool operator==(const ProfileRanges&, const ProfileRanges&) = default;
};

// Deterministic in (dataset_seed, emitter_id).
EmitterProfile sample_profile(std::uint64_t dataset_seed, std::uint64_t emitter_id, double carrier_hz,
                              const ProfileRanges& ranges = {});

// Clock skew, CFO, IQ imbalance, cubic PA, edge shaping (ADS-B only, with
// samples_per_chip > 0), then unit-power renormalization.
IQBurst apply_fingerprint(const IQBurst& burst, const EmitterProfile& profile, double samples_per_chip = 0.0);

// Multiplies every sample by e^{j phase}.
void rotate_phase(IQBurst& burst, double phase_rad);

}  // namespace burstnet::signal
