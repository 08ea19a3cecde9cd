#include <cmath>
#include <numbers>
#include <random>

#include "burstnet/hash.hpp"
#include "burstnet/signal.hpp"

namespace burstnet::signal {

namespace {

constexpr std::uint64_t kProfileTag = 0x50524f46494c45ULL;

std::vector<Complex> resample(const std::vector<Complex>& x, double rate) {
  std::vector<Complex> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double t = static_cast<double>(n) * rate;
    const auto i = static_cast<std::size_t>(std::floor(t));
    const double frac = t - static_cast<double>(i);
    const Complex a = i < x.size() ? x[i] : Complex{};
    const Complex b = i + 1 < x.size() ? x[i + 1] : Complex{};
    y[n] = frac == 0.0 ? a : a * (1.0 - frac) + b * frac;
  }
  return y;
}

std::vector<Complex> gaussian_smooth(const std::vector<Complex>& x, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = v;
    total += v;
  }
  for (auto& t : taps) t /= total;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<Complex> y(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Complex acc{};
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const std::ptrdiff_t j = i - k;
      if (j >= 0 && j < n) acc += taps[static_cast<std::size_t>(k + radius)] * x[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

}  // namespace

EmitterProfile sample_profile(std::uint64_t dataset_seed, std::uint64_t emitter_id, double carrier_hz,
                              const ProfileRanges& r) {
  EmitterProfile p;
  p.emitter_id = emitter_id;
  p.profile_seed = derive_seed(dataset_seed, {kProfileTag, emitter_id});
  std::mt19937_64 rng(p.profile_seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0), unit(0.0, 1.0);
  p.cfo_hz = sym(rng) * r.cfo_ppm * 1e-6 * carrier_hz;
  p.iq_gain_db = sym(rng) * r.iq_gain_db;
  p.iq_phase_deg = sym(rng) * r.iq_phase_deg;
  p.pa_a3 = unit(rng) * r.pa_a3_max;
  p.rise_time_frac = r.rise_time_min + unit(rng) * (r.rise_time_max - r.rise_time_min);
  p.clock_ppm = sym(rng) * r.clock_ppm;
  return p;
}

IQBurst apply_fingerprint(const IQBurst& burst, const EmitterProfile& profile, double samples_per_chip) {
  IQBurst out = burst;
  auto& x = out.samples;
  if (x.empty()) return out;

  if (profile.clock_ppm != 0.0) x = resample(x, 1.0 + profile.clock_ppm * 1e-6);

  if (profile.cfo_hz != 0.0) {
    const double w = 2.0 * std::numbers::pi * profile.cfo_hz / burst.sample_rate_hz;
    for (std::size_t n = 0; n < x.size(); ++n)
      x[n] *= std::polar(1.0, std::remainder(w * static_cast<double>(n), 2.0 * std::numbers::pi));
  }

  if (profile.iq_gain_db != 0.0 || profile.iq_phase_deg != 0.0) {
    const double g = std::pow(10.0, profile.iq_gain_db / 20.0);
    const double phi = profile.iq_phase_deg * std::numbers::pi / 180.0;
    const Complex mu = (1.0 + g * std::polar(1.0, -phi)) / 2.0;
    const Complex nu = (1.0 - g * std::polar(1.0, phi)) / 2.0;
    for (auto& s : x) s = mu * s + nu * std::conj(s);
  }

  if (profile.pa_a3 != 0.0)
    for (auto& s : x) s += profile.pa_a3 * std::norm(s) * s;

  if (samples_per_chip > 0.0 && profile.rise_time_frac > 0.0) {
    // 10-90% rise of a Gaussian-filtered step is 2.563 sigma.
    const double sigma = profile.rise_time_frac * samples_per_chip / 2.563;
    x = gaussian_smooth(x, sigma);
  }

  normalize_power(out);
  out.emitter_id = profile.emitter_id;
  return out;
}

}  // namespace burstnet::signal
