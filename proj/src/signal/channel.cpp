#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "burstnet/signal.hpp"

namespace burstnet::signal {

std::string to_string(BurstKind kind) { return kind == BurstKind::acars ? "acars" : "adsb"; }

BurstKind burst_kind_from_string(std::string_view name) {
  if (name == "acars") return BurstKind::acars;
  if (name == "adsb") return BurstKind::adsb;
  throw SignalError("unknown burst kind '" + std::string(name) + "' (expected acars or adsb)");
}

double mean_power(std::span<const Complex> samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += std::norm(s);
  return sum / static_cast<double>(samples.size());
}

void normalize_power(IQBurst& burst) {
  const double p = mean_power(burst.samples);
  if (!(p > 0.0)) throw SignalError("cannot normalize a burst with zero power");
  const double scale = 1.0 / std::sqrt(p);
  for (auto& s : burst.samples) s *= scale;
}

void rotate_phase(IQBurst& burst, double phase_rad) {
  const Complex r = std::polar(1.0, phase_rad);
  for (auto& s : burst.samples) s *= r;
}

IQBurst add_awgn(const IQBurst& burst, double target_snr_db, std::uint64_t noise_seed) {
  IQBurst out = burst;
  const double p = mean_power(burst.samples);
  const double noise_power = p / std::pow(10.0, target_snr_db / 10.0);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(noise_power / 2.0));
  for (auto& s : out.samples) {
    const double re = dist(rng);
    const double im = dist(rng);
    s += Complex{re, im};
  }
  out.snr_db = target_snr_db;
  return out;
}

IQBurst inject_interference(const IQBurst& burst, std::size_t pulse_count, double pulse_power_db,
                            std::uint64_t seed, std::vector<PulseInterval>* placed) {
  IQBurst out = burst;
  if (placed) placed->clear();
  const std::size_t n = burst.samples.size();
  if (pulse_count == 0 || n == 0) return out;
  double p = mean_power(burst.samples);
  if (!(p > 0.0)) p = 1.0;
  const double amplitude = std::sqrt(p * std::pow(10.0, pulse_power_db / 10.0));
  std::mt19937_64 rng(seed);
  const std::size_t min_len = std::max<std::size_t>(1, n / 64);
  const std::size_t max_len = std::max<std::size_t>(min_len, n / 16);
  for (std::size_t k = 0; k < pulse_count; ++k) {
    const std::size_t len = std::uniform_int_distribution<std::size_t>(min_len, max_len)(rng);
    const std::size_t begin = std::uniform_int_distribution<std::size_t>(0, n - len)(rng);
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    const Complex v = std::polar(amplitude, phase);
    for (std::size_t i = begin; i < begin + len; ++i) out.samples[i] += v;
    if (placed) placed->push_back({begin, len});
  }
  return out;
}

IQBurst finalize_burst(const IQBurst& burst, std::size_t target_len, std::uint64_t offset_seed,
                       const FinalizeOptions& options) {
  if (target_len == 0) throw SignalError("target length must be positive");
  const std::size_t n = burst.samples.size();
  std::mt19937_64 rng(offset_seed);
  IQBurst out = burst;
  out.samples.assign(target_len, Complex{0.0, 0.0});
  if (n <= target_len) {
    const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, target_len - n)(rng);
    std::copy(burst.samples.begin(), burst.samples.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(offset));
    out.active_begin = offset;
    out.active_length = n;
    return out;
  }
  if (!options.allow_crop)
    throw SignalError("burst of " + std::to_string(n) + " samples does not fit a " + std::to_string(target_len) +
                      "-sample window and cropping is not permitted");
  const std::size_t lead =
      std::uniform_int_distribution<std::size_t>(0, std::min(options.max_crop_lead, target_len - 1))(rng);
  std::copy_n(burst.samples.begin(), target_len - lead, out.samples.begin() + static_cast<std::ptrdiff_t>(lead));
  out.active_begin = lead;
  out.active_length = target_len - lead;
  return out;
}

}  // namespace burstnet::signal
