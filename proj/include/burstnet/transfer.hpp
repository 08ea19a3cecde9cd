#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstnet/checkpoint.hpp"
#include "burstnet/dataset.hpp"
#include "burstnet/model.hpp"
#include "burstnet/training.hpp"

namespace burstnet::transfer {

class TransferError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NewTaskConfig {
  std::size_t num_classes = 20;
  std::size_t per_class_min = 50;
  std::size_t per_class_max = 100;
  std::size_t test_per_class = 20;
  std::uint64_t emitter_id_base = 1000;

  friend bool operator==(const NewTaskConfig&, const NewTaskConfig&) = default;
};

struct TransferConfig {
  dataset::DatasetConfig pool;  // pretraining pool; emitters 0..num_classes-1 by default
  std::vector<std::size_t> pretrain_subsets{5, 20, 50};
  NewTaskConfig new_task;
  training::TrainConfig pretrain;
  training::TrainConfig finetune;  // TL regimes
  training::TrainConfig scratch;   // no-TL regime
  std::vector<double> thresholds{0.6, 0.7, 0.8, 0.9};
  std::size_t network_width = kDefaultWidth;
  std::uint64_t seed = 1;

  friend bool operator==(const TransferConfig&, const TransferConfig&) = default;
};

// Desk-scale experiment; every seed derives from `seed`.
TransferConfig default_transfer_config(std::uint64_t seed = 1);
void validate_config(const TransferConfig& config);
std::string config_to_json(const TransferConfig& config);
TransferConfig config_from_json(const std::string& text);

// The new-task dataset description implied by the experiment config.
dataset::DatasetConfig new_task_dataset_config(const TransferConfig& config);

// Class-id sets, one per size: prefixes of a single seeded permutation, so
// every smaller set is contained in the next.
std::vector<std::vector<std::size_t>> nested_subsets(std::size_t pool_classes, std::span<const std::size_t> sizes,
                                                     std::uint64_t seed);

std::string regime_name(std::size_t subset_size, std::size_t pool_classes);
inline constexpr const char* kNoTransferRegime = "no-TL";

struct PretrainedNet {
  std::string name;
  std::vector<std::size_t> class_ids;
  std::vector<std::uint64_t> emitter_ids;
  Checkpoint checkpoint;
  training::TrainingCurve curve;
};

// One trained checkpoint per subset. With a non-empty out_dir each run is
// written to out_dir/<name>.
std::vector<PretrainedNet> pretrain_subsets(const dataset::Dataset& pool, const TransferConfig& config,
                                            const std::filesystem::path& out_dir = {});

// Emitter ids recorded in checkpoint metadata ({"emitter_ids": [...]}).
std::vector<std::uint64_t> checkpoint_emitters(const Checkpoint& ckpt);
std::string emitter_metadata(std::span<const std::uint64_t> emitter_ids);

struct FineTuneResult {
  Model<float> model;
  training::TrainingCurve curve;
};

// Fresh head sized to the task, every other parameter from the checkpoint,
// all layers trainable. Rejects any emitter shared with the pretraining data.
FineTuneResult fine_tune(const Checkpoint& ckpt, const dataset::TaskView& task, const training::TrainConfig& config,
                         std::uint64_t head_seed, const training::TrainOptions& options = {});

using ThresholdHits = std::vector<std::optional<std::size_t>>;

// First validation iteration at or above each threshold.
ThresholdHits iterations_to_threshold(const training::TrainingCurve& curve, std::span<const double> thresholds);

// Not-reached entries count as budget + validate_every.
std::size_t effective_iterations(const std::optional<std::size_t>& hit, const training::TrainConfig& config);

struct ThresholdRow {
  std::string regime;
  ThresholdHits hits;
  double final_accuracy = 0.0;

  friend bool operator==(const ThresholdRow&, const ThresholdRow&) = default;
};

struct ThresholdTable {
  std::vector<double> thresholds;
  std::vector<ThresholdRow> rows;

  const ThresholdRow& row(const std::string& regime) const;
  friend bool operator==(const ThresholdTable&, const ThresholdTable&) = default;
};

// regime,60,70,80,90,final_accuracy with NR for not reached.
std::string threshold_csv(const ThresholdTable& table);
void write_threshold_csv(const std::filesystem::path& path, const ThresholdTable& table);
ThresholdTable read_threshold_csv(const std::filesystem::path& path);

struct RegimeCurve {
  std::string regime;
  training::TrainingCurve curve;
};

struct TransferResult {
  ThresholdTable table;
  std::vector<RegimeCurve> curves;           // no-TL first, then one per pretrained net
  std::vector<RegimeCurve> pretrain_curves;
};

// Layout under out_dir: pool/, new_task/ (datasets), pretrain/<net>/,
// finetune/<regime>/ (run directories) and reports/thresholds.csv.
TransferResult run_transfer_experiment(const TransferConfig& config, const std::filesystem::path& out_dir);

}  // namespace burstnet::transfer
