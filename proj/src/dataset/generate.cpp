#include <bit>
#include <cstring>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>

#include "burstnet/acars.hpp"
#include "burstnet/adsb.hpp"
#include "burstnet/dataset.hpp"
#include "burstnet/hash.hpp"
#include "shard_format.hpp"

namespace burstnet::dataset {

namespace {

static_assert(std::endian::native == std::endian::little, "shard I/O assumes a little-endian host");

constexpr std::uint64_t kBurstTag = 0x4255525354ULL;

std::string random_chars(std::mt19937_64& rng, std::string_view alphabet, std::size_t n) {
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
  return s;
}

signal::AcarsFrame random_acars_frame(std::mt19937_64& rng, std::size_t text_len_max) {
  constexpr std::string_view upper = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  constexpr std::string_view digits = "0123456789";
  constexpr std::string_view alnum = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  signal::AcarsFrame f;
  f.mode = random_chars(rng, "2ABCDEFGHIJKLMNOPQRSTUVWXYZ", 1)[0];
  f.address = "." + random_chars(rng, alnum, 6);
  f.ack = std::bernoulli_distribution(0.5)(rng) ? static_cast<char>(0x15) : random_chars(rng, upper, 1)[0];
  f.label = random_chars(rng, alnum, 2);
  f.block_id = random_chars(rng, digits, 1)[0];
  f.msn = "M" + random_chars(rng, digits, 2) + random_chars(rng, upper, 1);
  f.flight_id = random_chars(rng, upper, 2) + random_chars(rng, digits, 4);
  const std::size_t len = std::uniform_int_distribution<std::size_t>(0, text_len_max)(rng);
  std::uniform_int_distribution<int> printable(0x20, 0x7E);
  for (std::size_t i = 0; i < len; ++i) f.text.push_back(static_cast<char>(printable(rng)));
  return f;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 8);
}

}  // namespace

signal::IQBurst synthesize_burst(const DatasetConfig& config, const signal::EmitterProfile& profile,
                                 std::size_t burst_index) {
  std::mt19937_64 rng(derive_seed(config.seed, {kBurstTag, profile.emitter_id, burst_index}));
  const double fs = resolved_sample_rate(config);
  signal::IQBurst burst;
  double samples_per_chip = 0.0;
  signal::FinalizeOptions finalize;
  if (config.kind == signal::BurstKind::adsb) {
    const auto icao = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    signal::Bits payload(signal::kAdsbPayloadBits);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng() & 1);
    burst = signal::modulate_adsb(signal::encode_adsb(17, icao, payload), fs, config.waveform);
    samples_per_chip = static_cast<double>(signal::adsb_samples_per_chip(fs, config.waveform));
  } else {
    const auto frame = random_acars_frame(rng, config.text_len_max);
    burst = signal::modulate_acars(signal::encode_acars(frame), fs, config.waveform);
    finalize.allow_crop = true;
    finalize.max_crop_lead = config.sample_len / 8;
  }
  signal::normalize_power(burst);
  burst = signal::apply_fingerprint(burst, profile, samples_per_chip);
  if (config.random_phase)
    signal::rotate_phase(burst, std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng));
  burst = signal::finalize_burst(burst, config.sample_len, rng(), finalize);
  signal::normalize_power(burst);
  if (config.receiver_noise) {
    const double snr = std::uniform_real_distribution<double>(config.snr_min_db, config.snr_max_db)(rng);
    burst = signal::add_awgn(burst, snr, rng());
  }
  if (config.interference_fraction > 0.0 && std::bernoulli_distribution(config.interference_fraction)(rng)) {
    const std::size_t pulses = std::uniform_int_distribution<std::size_t>(1, config.interference_max_pulses)(rng);
    burst = signal::inject_interference(burst, pulses, config.interference_power_db, rng());
  }
  burst.emitter_id = profile.emitter_id;
  return burst;
}

std::vector<std::uint8_t> render_shard(const DatasetConfig& config, std::size_t class_id, std::size_t count) {
  const std::uint64_t emitter = config.emitter_id_base + class_id;
  const auto profile = signal::sample_profile(config.seed, emitter, carrier_hz(config), config.ranges);
  const std::size_t record_bytes = config.sample_len * 2 * sizeof(float);
  std::vector<std::uint8_t> out(kShardMagic, kShardMagic + 8);
  out.reserve(kShardHeaderBytes + count * record_bytes);
  put_u32(out, kShardVersion);
  put_u32(out, kShardDtypeF32);
  put_u64(out, config.sample_len);
  put_u64(out, count);
  std::vector<float> record(config.sample_len * 2);
  for (std::size_t i = 0; i < count; ++i) {
    const auto burst = synthesize_burst(config, profile, i);
    for (std::size_t n = 0; n < config.sample_len; ++n) {
      record[2 * n] = static_cast<float>(burst.samples[n].real());
      record[2 * n + 1] = static_cast<float>(burst.samples[n].imag());
    }
    const auto* p = reinterpret_cast<const std::uint8_t*>(record.data());
    out.insert(out.end(), p, p + record_bytes);
  }
  return out;
}

DatasetManifest generate_dataset(const DatasetConfig& config, const std::filesystem::path& dir) {
  DatasetManifest m;
  m.config = config;
  m.per_class_counts = plan_class_counts(config);
  std::filesystem::create_directories(dir / "shards");
  std::size_t first = 0;
  for (std::size_t c = 0; c < config.num_classes; ++c) {
    m.emitter_ids.push_back(config.emitter_id_base + c);
    ShardInfo s;
    s.class_id = c;
    s.first_index = first;
    s.count = m.per_class_counts[c];
    s.path = shard_relative_path(c);
    first += s.count;
    m.shards.push_back(std::move(s));
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long long c_l = 0; c_l < static_cast<long long>(config.num_classes); ++c_l) {
    const auto c = static_cast<std::size_t>(c_l);
    try {
      const auto bytes = render_shard(config, c, m.per_class_counts[c]);
      Fnv1a h;
      h.update(bytes.data(), bytes.size());
      m.shards[c].checksum = h.digest();
      std::ofstream out(dir / m.shards[c].path, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw DatasetError("failed writing shard " + (dir / m.shards[c].path).string());
    } catch (...) {
#pragma omp critical(burstnet_generate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  out << manifest_to_text(m);
  if (!out) throw DatasetError("failed writing manifest in " + dir.string());
  return m;
}

VerifyResult verify_dataset(const std::filesystem::path& dir, bool regenerate) {
  VerifyResult r;
  const auto m = read_manifest(dir);
  if (m.per_class_counts != plan_class_counts(m.config)) {
    r.ok = false;
    r.problems.push_back("per-class counts do not match the seed");
  }
  for (const auto& s : m.shards) {
    std::ifstream in(dir / s.path, std::ios::binary);
    if (!in) {
      r.ok = false;
      r.problems.push_back("missing shard " + s.path);
      continue;
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Fnv1a h;
    h.update(bytes.data(), bytes.size());
    if (h.digest() != s.checksum) {
      r.ok = false;
      r.problems.push_back("checksum mismatch in " + s.path);
    }
    if (regenerate) {
      const auto fresh = render_shard(m.config, s.class_id, s.count);
      Fnv1a g;
      g.update(fresh.data(), fresh.size());
      if (g.digest() != s.checksum) {
        r.ok = false;
        r.problems.push_back("regenerated " + s.path + " differs from the recorded checksum");
      }
    }
  }
  return r;
}

}  // namespace burstnet::dataset
