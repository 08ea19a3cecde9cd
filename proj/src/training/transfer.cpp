#include "burstnet/transfer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "burstnet/format.hpp"
#include "burstnet/hash.hpp"
#include "burstnet/network_spec.hpp"

namespace burstnet::transfer {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSubsetTag = 0x5355425345;   // "SUBSE"
constexpr std::uint64_t kPoolTag = 0x504f4f4c;       // "POOL"
constexpr std::uint64_t kNewTaskTag = 0x4e4557;      // "NEW"
constexpr std::uint64_t kPretrainTag = 0x5052455452;  // "PRETR"
constexpr std::uint64_t kHeadTag = 0x48454144;       // "HEAD"
constexpr std::uint64_t kScratchTag = 0x5343524154;  // "SCRAT"

std::string format_double(double v) { return shortest(v); }

std::string threshold_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t * 100.0);
  return buf;
}

}  // namespace

TransferConfig default_transfer_config(std::uint64_t seed) {
  TransferConfig c;
  c.seed = seed;
  c.pool.kind = signal::BurstKind::adsb;
  c.pool.num_classes = 50;
  c.pool.per_class_min = 150;
  c.pool.per_class_max = 250;
  c.pool.test_per_class = 50;
  c.pool.emitter_id_base = 0;
  c.pool.seed = derive_seed(c.seed, {kPoolTag});

  c.pretrain.seed = seed;
  c.pretrain.max_iterations = 2500;
  c.pretrain.validate_every = 250;
  c.pretrain.augment_fraction = 0.0;

  c.finetune.seed = seed;
  c.finetune.learning_rate = c.pretrain.learning_rate * 0.1;
  c.finetune.max_iterations = 600;
  c.finetune.validate_every = 10;
  c.finetune.augment_fraction = 0.0;

  c.scratch = c.finetune;
  c.scratch.learning_rate = c.pretrain.learning_rate;
  return c;
}

dataset::DatasetConfig new_task_dataset_config(const TransferConfig& c) {
  dataset::DatasetConfig d = c.pool;
  d.num_classes = c.new_task.num_classes;
  d.per_class_min = c.new_task.per_class_min;
  d.per_class_max = c.new_task.per_class_max;
  d.test_per_class = c.new_task.test_per_class;
  d.emitter_id_base = c.new_task.emitter_id_base;
  d.seed = derive_seed(c.seed, {kNewTaskTag, c.pool.seed});
  return d;
}

void validate_config(const TransferConfig& c) {
  dataset::validate_config(c.pool);
  dataset::validate_config(new_task_dataset_config(c));
  training::validate_config(c.pretrain);
  training::validate_config(c.finetune);
  training::validate_config(c.scratch);
  if (c.pretrain_subsets.empty()) throw TransferError("no pretraining subsets given");
  for (std::size_t i = 0; i < c.pretrain_subsets.size(); ++i) {
    const auto k = c.pretrain_subsets[i];
    if (k < 2) throw TransferError("pretraining subset of " + std::to_string(k) + " classes is too small");
    if (k > c.pool.num_classes)
      throw TransferError("pretraining subset of " + std::to_string(k) + " classes exceeds the pool's " +
                          std::to_string(c.pool.num_classes));
    if (i > 0 && k <= c.pretrain_subsets[i - 1]) throw TransferError("pretraining subsets must be strictly increasing");
  }
  if (c.thresholds.empty()) throw TransferError("no accuracy thresholds given");
  for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
    if (!(c.thresholds[i] > 0.0 && c.thresholds[i] <= 1.0)) throw TransferError("thresholds are fractions in (0, 1]");
    if (i > 0 && c.thresholds[i] <= c.thresholds[i - 1]) throw TransferError("thresholds must be sorted ascending");
  }
  const std::uint64_t pool_lo = c.pool.emitter_id_base, pool_hi = pool_lo + c.pool.num_classes;
  const std::uint64_t new_lo = c.new_task.emitter_id_base, new_hi = new_lo + c.new_task.num_classes;
  if (new_lo < pool_hi && pool_lo < new_hi) throw TransferError("new-task emitter ids overlap the pretraining pool");
  if (c.network_width == 0) throw TransferError("network width must be positive");
}

std::string config_to_json(const TransferConfig& c) {
  json j = {{"pool", json::parse(dataset::config_to_json(c.pool))},
            {"pretrain_subsets", c.pretrain_subsets},
            {"new_task",
             {{"num_classes", c.new_task.num_classes},
              {"per_class_min", c.new_task.per_class_min},
              {"per_class_max", c.new_task.per_class_max},
              {"test_per_class", c.new_task.test_per_class},
              {"emitter_id_base", c.new_task.emitter_id_base}}},
            {"pretrain", json::parse(training::config_to_json(c.pretrain))},
            {"finetune", json::parse(training::config_to_json(c.finetune))},
            {"scratch", json::parse(training::config_to_json(c.scratch))},
            {"thresholds", c.thresholds},
            {"network_width", c.network_width},
            {"seed", c.seed}};
  return j.dump(2);
}

TransferConfig config_from_json(const std::string& text) {
  TransferConfig c;
  try {
    const auto j = json::parse(text);
    c.pool = dataset::config_from_json(j.at("pool").dump());
    c.pretrain_subsets = j.at("pretrain_subsets").get<std::vector<std::size_t>>();
    const auto& n = j.at("new_task");
    c.new_task.num_classes = n.at("num_classes").get<std::size_t>();
    c.new_task.per_class_min = n.at("per_class_min").get<std::size_t>();
    c.new_task.per_class_max = n.at("per_class_max").get<std::size_t>();
    c.new_task.test_per_class = n.at("test_per_class").get<std::size_t>();
    c.new_task.emitter_id_base = n.at("emitter_id_base").get<std::uint64_t>();
    c.pretrain = training::config_from_json(j.at("pretrain").dump());
    c.finetune = training::config_from_json(j.at("finetune").dump());
    c.scratch = training::config_from_json(j.at("scratch").dump());
    c.thresholds = j.at("thresholds").get<std::vector<double>>();
    c.network_width = j.at("network_width").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw TransferError(std::string("malformed transfer config: ") + e.what());
  }
  return c;
}

std::vector<std::vector<std::size_t>> nested_subsets(std::size_t pool_classes, std::span<const std::size_t> sizes,
                                                     std::uint64_t seed) {
  std::vector<std::size_t> perm(pool_classes);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, {kSubsetTag}));
  for (std::size_t i = pool_classes; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto k : sizes) {
    if (k > pool_classes)
      throw TransferError("subset of " + std::to_string(k) + " classes exceeds the " + std::to_string(pool_classes) +
                          " available");
    std::vector<std::size_t> s(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(s.begin(), s.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::string regime_name(std::size_t subset_size, std::size_t pool_classes) {
  return subset_size == pool_classes ? "NetAll" : "Net" + std::to_string(subset_size);
}

std::string emitter_metadata(std::span<const std::uint64_t> emitter_ids) {
  return json{{"emitter_ids", std::vector<std::uint64_t>(emitter_ids.begin(), emitter_ids.end())}}.dump();
}

std::vector<std::uint64_t> checkpoint_emitters(const Checkpoint& ckpt) {
  try {
    return json::parse(ckpt.metadata).at("emitter_ids").get<std::vector<std::uint64_t>>();
  } catch (const json::exception&) {
    throw TransferError("checkpoint metadata does not list its training emitters");
  }
}

std::vector<PretrainedNet> pretrain_subsets(const dataset::Dataset& pool, const TransferConfig& config,
                                            const std::filesystem::path& out_dir) {
  const std::size_t pool_classes = pool.manifest().config.num_classes;
  const auto sets = nested_subsets(pool_classes, config.pretrain_subsets, config.seed);
  std::vector<PretrainedNet> nets;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    PretrainedNet net;
    net.name = regime_name(sets[s].size(), pool_classes);
    net.class_ids = sets[s];
    const auto task = dataset::subset_task(pool, sets[s]);
    net.emitter_ids = task.emitter_ids;
    Model<float> model(default_network_spec(task.num_classes, pool.sample_len(), config.network_width),
                       derive_seed(config.seed, {kPretrainTag, sets[s].size()}));
    training::TrainOptions opt;
    if (!out_dir.empty()) opt.run_dir = out_dir / net.name;
    opt.metadata = emitter_metadata(net.emitter_ids);
    auto result = training::train(model, task, config.pretrain, opt);
    net.curve = std::move(result.curve);
    const auto velocity = training::zero_velocity(model);
    net.checkpoint = make_checkpoint<float>(model, velocity, result.iterations_done, "", opt.metadata);
    nets.push_back(std::move(net));
  }
  return nets;
}

FineTuneResult fine_tune(const Checkpoint& ckpt, const dataset::TaskView& task, const training::TrainConfig& config,
                         std::uint64_t head_seed, const training::TrainOptions& options) {
  const auto seen = checkpoint_emitters(ckpt);
  const std::set<std::uint64_t> seen_set(seen.begin(), seen.end());
  for (auto e : task.emitter_ids)
    if (seen_set.count(e)) throw TransferError("emitter " + std::to_string(e) + " was already used in pretraining");
  if (ckpt.spec.input_length != task.dataset->sample_len())
    throw TransferError("checkpoint expects " + std::to_string(ckpt.spec.input_length) + "-sample inputs, task has " +
                        std::to_string(task.dataset->sample_len()));
  auto model = restore_model<float>(ckpt);
  model.replace_head(task.num_classes, head_seed);
  auto result = training::train(model, task, config, options);
  return {std::move(model), std::move(result.curve)};
}

ThresholdHits iterations_to_threshold(const training::TrainingCurve& curve, std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw TransferError("thresholds must be sorted ascending");
  ThresholdHits hits(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t)
    for (const auto& r : curve)
      if (r.val_accuracy >= thresholds[t]) {
        hits[t] = r.iteration;
        break;
      }
  return hits;
}

std::size_t effective_iterations(const std::optional<std::size_t>& hit, const training::TrainConfig& config) {
  return hit ? *hit : config.max_iterations + config.validate_every;
}

const ThresholdRow& ThresholdTable::row(const std::string& regime) const {
  for (const auto& r : rows)
    if (r.regime == regime) return r;
  throw TransferError("no regime named " + regime);
}

std::string threshold_csv(const ThresholdTable& table) {
  std::ostringstream os;
  os << "regime";
  for (auto t : table.thresholds) os << "," << threshold_label(t);
  os << ",final_accuracy\n";
  for (const auto& r : table.rows) {
    os << r.regime;
    for (const auto& h : r.hits) os << "," << (h ? std::to_string(*h) : std::string("NR"));
    os << "," << format_double(r.final_accuracy) << "\n";
  }
  return os.str();
}

void write_threshold_csv(const std::filesystem::path& path, const ThresholdTable& table) {
  std::ofstream out(path, std::ios::trunc);
  out << threshold_csv(table);
  if (!out) throw TransferError("failed writing " + path.string());
}

ThresholdTable read_threshold_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TransferError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw TransferError(path.string() + " is empty");
  const auto head = split(line);
  if (head.size() < 3 || head.front() != "regime" || head.back() != "final_accuracy")
    throw TransferError(path.string() + ": unexpected header");
  ThresholdTable table;
  for (std::size_t i = 1; i + 1 < head.size(); ++i) table.thresholds.push_back(std::stod(head[i]) / 100.0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != head.size())
      throw TransferError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(head.size()) + " fields");
    ThresholdRow row;
    row.regime = cells.front();
    for (std::size_t i = 1; i + 1 < cells.size(); ++i)
      row.hits.push_back(cells[i] == "NR" ? std::nullopt : std::optional<std::size_t>(std::stoull(cells[i])));
    row.final_accuracy = std::stod(cells.back());
    table.rows.push_back(std::move(row));
  }
  return table;
}

TransferResult run_transfer_experiment(const TransferConfig& config, const std::filesystem::path& out_dir) {
  validate_config(config);
  if (out_dir.empty()) throw TransferError("transfer experiment needs an output directory");
  dataset::generate_dataset(config.pool, out_dir / "pool");
  dataset::generate_dataset(new_task_dataset_config(config), out_dir / "new_task");
  const auto pool = dataset::Dataset::open(out_dir / "pool");
  const auto fresh = dataset::Dataset::open(out_dir / "new_task");
  const auto task = dataset::full_task(fresh);

  TransferResult result;
  result.table.thresholds = config.thresholds;
  auto add_row = [&](const std::string& name, training::TrainingCurve curve) {
    ThresholdRow row{name, iterations_to_threshold(curve, config.thresholds),
                     curve.empty() ? 0.0 : curve.back().val_accuracy};
    result.table.rows.push_back(std::move(row));
    result.curves.push_back({name, std::move(curve)});
  };

  const auto head_seed = derive_seed(config.seed, {kHeadTag});
  {
    Model<float> model(default_network_spec(task.num_classes, fresh.sample_len(), config.network_width),
                       derive_seed(config.seed, {kScratchTag}));
    training::TrainOptions opt;
    opt.run_dir = out_dir / "finetune" / kNoTransferRegime;
    opt.metadata = emitter_metadata(task.emitter_ids);
    add_row(kNoTransferRegime, training::train(model, task, config.scratch, opt).curve);
  }

  const auto nets = pretrain_subsets(pool, config, out_dir / "pretrain");
  for (const auto& net : nets) {
    result.pretrain_curves.push_back({net.name, net.curve});
    training::TrainOptions opt;
    opt.run_dir = out_dir / "finetune" / net.name;
    opt.metadata = emitter_metadata(task.emitter_ids);
    add_row(net.name, fine_tune(net.checkpoint, task, config.finetune, head_seed, opt).curve);
  }
  std::filesystem::create_directories(out_dir / "reports");
  write_threshold_csv(out_dir / "reports" / "thresholds.csv", result.table);
  return result;
}

}  // namespace burstnet::transfer
