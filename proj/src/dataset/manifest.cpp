#include <fstream>
#include <random>
#include <sstream>

#include "burstnet/acars.hpp"
#include "burstnet/adsb.hpp"
#include "burstnet/dataset.hpp"
#include "burstnet/hash.hpp"
#include "json.hpp"

namespace burstnet::dataset {

using nlohmann::json;

namespace {

constexpr std::uint64_t kCountTag = 0x434f554e54ULL;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size() || s.size() != 16) throw DatasetError("malformed checksum '" + s + "'");
  return v;
}

json ranges_json(const signal::ProfileRanges& r) {
  return {{"cfo_ppm", r.cfo_ppm},           {"iq_gain_db", r.iq_gain_db},     {"iq_phase_deg", r.iq_phase_deg},
          {"pa_a3_max", r.pa_a3_max},       {"rise_time_min", r.rise_time_min}, {"rise_time_max", r.rise_time_max},
          {"clock_ppm", r.clock_ppm}};
}

signal::ProfileRanges ranges_from(const json& j) {
  signal::ProfileRanges r;
  r.cfo_ppm = j.at("cfo_ppm").get<double>();
  r.iq_gain_db = j.at("iq_gain_db").get<double>();
  r.iq_phase_deg = j.at("iq_phase_deg").get<double>();
  r.pa_a3_max = j.at("pa_a3_max").get<double>();
  r.rise_time_min = j.at("rise_time_min").get<double>();
  r.rise_time_max = j.at("rise_time_max").get<double>();
  r.clock_ppm = j.at("clock_ppm").get<double>();
  return r;
}

json config_json(const DatasetConfig& c) {
  return {{"burst_kind", signal::to_string(c.kind)},
          {"num_classes", c.num_classes},
          {"per_class_min", c.per_class_min},
          {"per_class_max", c.per_class_max},
          {"test_per_class", c.test_per_class},
          {"sample_len", c.sample_len},
          {"sample_rate_hz", c.sample_rate_hz},
          {"seed", c.seed},
          {"emitter_id_base", c.emitter_id_base},
          {"text_len_max", c.text_len_max},
          {"receiver_noise", c.receiver_noise},
          {"snr_min_db", c.snr_min_db},
          {"snr_max_db", c.snr_max_db},
          {"interference_fraction", c.interference_fraction},
          {"interference_max_pulses", c.interference_max_pulses},
          {"interference_power_db", c.interference_power_db},
          {"random_phase", c.random_phase},
          {"profile_ranges", ranges_json(c.ranges)},
          {"waveform_template", signal::format_waveform_template(c.waveform)}};
}

DatasetConfig config_from(const json& j) {
  DatasetConfig c;
  c.kind = signal::burst_kind_from_string(j.at("burst_kind").get<std::string>());
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.per_class_min = j.at("per_class_min").get<std::size_t>();
  c.per_class_max = j.at("per_class_max").get<std::size_t>();
  c.test_per_class = j.at("test_per_class").get<std::size_t>();
  c.sample_len = j.at("sample_len").get<std::size_t>();
  c.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.emitter_id_base = j.at("emitter_id_base").get<std::uint64_t>();
  c.text_len_max = j.at("text_len_max").get<std::size_t>();
  c.receiver_noise = j.at("receiver_noise").get<bool>();
  c.snr_min_db = j.at("snr_min_db").get<double>();
  c.snr_max_db = j.at("snr_max_db").get<double>();
  c.interference_fraction = j.at("interference_fraction").get<double>();
  c.interference_max_pulses = j.at("interference_max_pulses").get<std::size_t>();
  c.interference_power_db = j.at("interference_power_db").get<double>();
  c.random_phase = j.at("random_phase").get<bool>();
  c.ranges = ranges_from(j.at("profile_ranges"));
  c.waveform = signal::parse_waveform_template(j.at("waveform_template").get<std::string>());
  return c;
}

}  // namespace

double default_sample_rate(signal::BurstKind kind) {
  return kind == signal::BurstKind::acars ? 48e3 : 8e6;
}

double resolved_sample_rate(const DatasetConfig& config) {
  return config.sample_rate_hz > 0.0 ? config.sample_rate_hz : default_sample_rate(config.kind);
}

double carrier_hz(const DatasetConfig& config) {
  return config.kind == signal::BurstKind::acars ? config.waveform.acars_carrier_hz : config.waveform.adsb_carrier_hz;
}

void validate_config(const DatasetConfig& c) {
  if (c.num_classes < 2) throw DatasetError("num_classes must be at least 2, got " + std::to_string(c.num_classes));
  if (c.per_class_min > c.per_class_max)
    throw DatasetError("per-class range [" + std::to_string(c.per_class_min) + ", " + std::to_string(c.per_class_max) +
                       "] is empty");
  if (c.per_class_min <= c.test_per_class)
    throw DatasetError("per_class_min " + std::to_string(c.per_class_min) + " must exceed test_per_class " +
                       std::to_string(c.test_per_class) + " or some class has no training samples");
  if (c.sample_len == 0) throw DatasetError("sample_len must be positive");
  if (c.text_len_max > signal::kAcarsMaxText)
    throw DatasetError("ACARS text length " + std::to_string(c.text_len_max) + " exceeds the maximum of " +
                       std::to_string(signal::kAcarsMaxText));
  if (c.receiver_noise && c.snr_min_db > c.snr_max_db) throw DatasetError("snr_min_db exceeds snr_max_db");
  if (c.interference_fraction < 0.0 || c.interference_fraction > 1.0)
    throw DatasetError("interference_fraction must lie in [0, 1]");
  if (c.interference_fraction > 0.0 && c.interference_max_pulses == 0)
    throw DatasetError("interference needs interference_max_pulses >= 1");
  const double fs = resolved_sample_rate(c);
  if (c.kind == signal::BurstKind::acars)
    signal::acars_samples_per_symbol(fs, c.waveform);
  else
    signal::adsb_samples_per_chip(fs, c.waveform);
}

std::vector<std::size_t> plan_class_counts(const DatasetConfig& config) {
  validate_config(config);
  std::mt19937_64 rng(derive_seed(config.seed, {kCountTag}));
  std::uniform_int_distribution<std::size_t> dist(config.per_class_min, config.per_class_max);
  std::vector<std::size_t> counts(config.num_classes);
  for (auto& c : counts) c = dist(rng);
  return counts;
}

std::string config_to_json(const DatasetConfig& config) { return config_json(config).dump(2); }

DatasetConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed dataset config: ") + e.what());
  }
}

std::size_t DatasetManifest::total_samples() const {
  std::size_t n = 0;
  for (auto c : per_class_counts) n += c;
  return n;
}

std::string manifest_to_text(const DatasetManifest& m) {
  json shards = json::array();
  for (const auto& s : m.shards)
    shards.push_back({{"path", s.path},
                      {"class_id", s.class_id},
                      {"first_index", s.first_index},
                      {"count", s.count},
                      {"fnv1a", hex64(s.checksum)}});
  json classes = json::array();
  for (std::size_t c = 0; c < m.emitter_ids.size(); ++c)
    classes.push_back({{"class_id", c}, {"emitter_id", m.emitter_ids[c]}, {"count", m.per_class_counts.at(c)}});
  json j = {{"format_version", m.format_version},
            {"burst_kind", signal::to_string(m.config.kind)},
            {"num_classes", m.config.num_classes},
            {"test_per_class", m.config.test_per_class},
            {"sample_len", m.config.sample_len},
            {"sample_rate_hz", resolved_sample_rate(m.config)},
            {"dataset_seed", m.config.seed},
            {"classes", classes},
            {"shards", shards},
            {"generation", config_json(m.config)}};
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_text(const std::string& text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version != kManifestVersion)
      throw DatasetError("manifest format_version " + std::to_string(m.format_version) + " is not supported (expected " +
                         std::to_string(kManifestVersion) + ")");
    m.config = config_from(j.at("generation"));
    for (const auto& c : j.at("classes")) {
      m.emitter_ids.push_back(c.at("emitter_id").get<std::uint64_t>());
      m.per_class_counts.push_back(c.at("count").get<std::size_t>());
    }
    for (const auto& s : j.at("shards")) {
      ShardInfo info;
      info.path = s.at("path").get<std::string>();
      info.class_id = s.at("class_id").get<std::size_t>();
      info.first_index = s.at("first_index").get<std::size_t>();
      info.count = s.at("count").get<std::size_t>();
      info.checksum = parse_hex64(s.at("fnv1a").get<std::string>());
      m.shards.push_back(std::move(info));
    }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed manifest: ") + e.what());
  }
  if (m.emitter_ids.size() != m.config.num_classes || m.shards.size() != m.config.num_classes)
    throw DatasetError("manifest lists " + std::to_string(m.emitter_ids.size()) + " classes and " +
                       std::to_string(m.shards.size()) + " shards for " + std::to_string(m.config.num_classes) +
                       " classes");
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  std::ifstream in(path);
  if (!in) throw DatasetError("no dataset manifest at " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_text(ss.str());
}

}  // namespace burstnet::dataset
