#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstnet/signal.hpp"
#include "burstnet/tensor.hpp"

namespace burstnet::dataset {

inline constexpr std::uint32_t kManifestVersion = 1;
inline constexpr std::uint32_t kShardVersion = 1;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  signal::BurstKind kind = signal::BurstKind::adsb;
  std::size_t num_classes = 20;
  std::size_t per_class_min = 200;
  std::size_t per_class_max = 300;
  std::size_t test_per_class = 50;
  std::size_t sample_len = 1024;
  double sample_rate_hz = 0.0;  // 0 selects the kind's default
  std::uint64_t seed = 1;
  std::uint64_t emitter_id_base = 0;
  std::size_t text_len_max = 48;  // ACARS free text, characters
  // Receiver noise already present in the stored ("pure") bursts.
  bool receiver_noise = true;
  double snr_min_db = 25.0;
  double snr_max_db = 40.0;
  double interference_fraction = 0.05;
  std::size_t interference_max_pulses = 2;
  double interference_power_db = 3.0;
  bool random_phase = false;  // uniform carrier phase per burst
  signal::ProfileRanges ranges;
  signal::WaveformTemplate waveform;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

double default_sample_rate(signal::BurstKind kind);
double resolved_sample_rate(const DatasetConfig& config);
double carrier_hz(const DatasetConfig& config);

// Throws DatasetError for configs that cannot produce a valid dataset.
void validate_config(const DatasetConfig& config);

// Per-class sample counts, seeded-uniform over [per_class_min, per_class_max].
std::vector<std::size_t> plan_class_counts(const DatasetConfig& config);

std::string config_to_json(const DatasetConfig& config);
DatasetConfig config_from_json(const std::string& text);

struct ShardInfo {
  std::string path;  // relative to the dataset directory
  std::size_t class_id = 0;
  std::size_t first_index = 0;
  std::size_t count = 0;
  std::uint64_t checksum = 0;  // FNV-1a of the whole shard file

  friend bool operator==(const ShardInfo&, const ShardInfo&) = default;
};

struct DatasetManifest {
  std::uint32_t format_version = kManifestVersion;
  DatasetConfig config;
  std::vector<std::size_t> per_class_counts;
  std::vector<std::uint64_t> emitter_ids;  // class_id -> emitter label
  std::vector<ShardInfo> shards;

  std::size_t total_samples() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

std::string manifest_to_text(const DatasetManifest& manifest);
DatasetManifest manifest_from_text(const std::string& text);
DatasetManifest read_manifest(const std::filesystem::path& dir);

inline constexpr const char* kManifestFile = "manifest.json";

// One stored burst: emitter profile + burst index fully determine it.
signal::IQBurst synthesize_burst(const DatasetConfig& config, const signal::EmitterProfile& profile,
                                 std::size_t burst_index);

// Writes manifest.json and shards/ under `dir`.
DatasetManifest generate_dataset(const DatasetConfig& config, const std::filesystem::path& dir);

// Shard bytes for one class, as generate_dataset would write them.
std::vector<std::uint8_t> render_shard(const DatasetConfig& config, std::size_t class_id, std::size_t count);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> problems;
};

// Checks stored shard checksums; with `regenerate`, also rebuilds every shard
// from the seed and compares.
VerifyResult verify_dataset(const std::filesystem::path& dir, bool regenerate);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Exactly test_per_class seeded-random samples of every class go to test.
Split split_dataset(const DatasetManifest& manifest);

// All samples in memory as interleaved f32 I/Q.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& dir);

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return class_of_.size(); }
  std::size_t sample_len() const noexcept { return manifest_.config.sample_len; }
  std::size_t class_of(std::size_t index) const { return class_of_.at(index); }
  std::span<const float> sample(std::size_t index) const;

 private:
  DatasetManifest manifest_;
  std::vector<float> data_;
  std::vector<std::size_t> class_of_;
};

// A classification task over some classes of a dataset, labels renumbered
// 0..num_classes-1 in the given class order.
struct TaskView {
  static constexpr std::size_t kExcluded = std::numeric_limits<std::size_t>::max();

  const Dataset* dataset = nullptr;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> label_of_class;
  std::vector<std::uint64_t> emitter_ids;  // per task label
  std::size_t num_classes = 0;

  std::size_t label(std::size_t sample_index) const;
};

TaskView full_task(const Dataset& data);
TaskView subset_task(const Dataset& data, std::span<const std::size_t> class_ids);

struct Batch {
  Tensor<float> inputs;  // [N x 2 x L]
  std::vector<std::size_t> labels;
};

Batch make_batch(const TaskView& task, std::span<const std::size_t> indices);

// add_awgn applied in place to row `row` of an [N x 2 x L] batch.
void add_awgn_to_row(Tensor<float>& inputs, std::size_t row, double snr_db, std::uint64_t seed);

// Seeded per-epoch permutation over a fixed index list. Wraps into the next
// epoch after the (possibly short) final batch.
class BatchIterator {
 public:
  BatchIterator(std::vector<std::size_t> indices, std::size_t batch_size, std::uint64_t shuffle_seed,
                bool shuffle = true);

  // Sample indices of the next batch.
  std::vector<std::size_t> next();
  Batch next_batch(const TaskView& task);

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t cursor() const noexcept { return cursor_; }
  std::size_t batch_size() const noexcept { return batch_size_; }
  std::size_t batches_per_epoch() const noexcept;

  std::string state() const;
  void restore(const std::string& state);

 private:
  void reshuffle();

  std::vector<std::size_t> indices_;
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool shuffle_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
};

}  // namespace burstnet::dataset
