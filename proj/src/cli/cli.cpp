#include "burstnet/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "burstnet/checkpoint.hpp"
#include "burstnet/dataset.hpp"
#include "burstnet/evaluation.hpp"
#include "burstnet/hash.hpp"
#include "burstnet/network_spec.hpp"
#include "burstnet/training.hpp"
#include "burstnet/transfer.hpp"

namespace burstnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kModelTag = 0x4d4f44454c;  // "MODEL"
constexpr const char* kSnapshot = "config.json";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

json load_snapshot(const fs::path& p, const std::string& command) {
  json j;
  try {
    j = json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
  if (j.contains("command") && j.at("command") != command)
    throw UsageError(p.string() + " holds a '" + j.at("command").get<std::string>() + "' config, not '" + command + "'");
  return j;
}

std::string abs_path(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

// Refuses to touch a non-empty directory unless forced, and then only one
// that a previous command created.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw std::runtime_error(dir.string() + " exists; pass --force to overwrite it");
    if (!fs::exists(dir / kSnapshot))
      throw std::runtime_error("refusing to clear " + dir.string() + ": it holds no " + kSnapshot);
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("'" + item + "' is not a non-negative integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<double> parse_percent_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !(v > 0.0 && v <= 100.0)) throw UsageError("'" + item + "' is not a percentage in (0, 100]");
    out.push_back(v / 100.0);
  }
  if (out.empty()) throw UsageError("empty threshold list");
  return out;
}

template <class T>
void override_if(CLI::App* app, const char* flag, T& target, const T& value) {
  if (app->count(flag) > 0) target = value;
}

// ---------------------------------------------------------------- gen-data

struct GenArgs {
  std::string config, out, kind, template_file;
  std::uint64_t seed = 1;
  std::size_t classes = 0, per_class = 0, per_class_min = 0, per_class_max = 0, test_per_class = 0, sample_len = 0,
              text_len = 0, interference_pulses = 0;
  std::uint64_t emitter_base = 0;
  double sample_rate = 0, snr_min = 0, snr_max = 0, interference_fraction = 0;
  bool no_receiver_noise = false, random_phase = false, force = false;
};

void add_gen_data(CLI::App& app, GenArgs& a) {
  auto* s = app.add_subcommand("gen-data", "Synthesize a labelled burst dataset");
  s->add_option("--config", a.config, "Dataset config JSON or a previous config snapshot");
  s->add_option("--out", a.out, "Dataset directory")->required();
  s->add_option("--seed", a.seed, "Dataset seed");
  s->add_option("--kind", a.kind, "adsb or acars");
  s->add_option("--classes", a.classes, "Number of emitters");
  s->add_option("--per-class", a.per_class, "Bursts per class (sets min and max)");
  s->add_option("--per-class-min", a.per_class_min, "Smallest class size");
  s->add_option("--per-class-max", a.per_class_max, "Largest class size");
  s->add_option("--test-per-class", a.test_per_class, "Held-out bursts per class");
  s->add_option("--sample-len", a.sample_len, "Samples per stored burst");
  s->add_option("--sample-rate", a.sample_rate, "Sample rate in Hz (0: kind default)");
  s->add_option("--text-len", a.text_len, "Longest ACARS free text, characters");
  s->add_option("--emitter-base", a.emitter_base, "Emitter id of class 0");
  s->add_option("--snr-min", a.snr_min, "Lowest receiver SNR of stored bursts, dB");
  s->add_option("--snr-max", a.snr_max, "Highest receiver SNR of stored bursts, dB");
  s->add_flag("--no-receiver-noise", a.no_receiver_noise, "Store noiseless bursts");
  s->add_flag("--random-phase", a.random_phase, "Rotate every burst by a random carrier phase");
  s->add_option("--interference-fraction", a.interference_fraction, "Share of bursts with interference pulses");
  s->add_option("--interference-pulses", a.interference_pulses, "Most interference pulses per burst");
  s->add_option("--template", a.template_file, "Waveform template file");
  s->add_flag("--force", a.force, "Overwrite an existing dataset directory");
}

int cmd_gen_data(CLI::App* s, const GenArgs& a, std::ostream& out) {
  dataset::DatasetConfig cfg;
  if (!a.config.empty()) {
    const auto j = load_snapshot(a.config, "gen-data");
    cfg = dataset::config_from_json((j.contains("dataset") ? j.at("dataset") : j).dump());
  }
  if (s->count("--kind")) {
    try {
      cfg.kind = signal::burst_kind_from_string(a.kind);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    if (!s->count("--sample-rate")) cfg.sample_rate_hz = 0.0;
  }
  override_if(s, "--seed", cfg.seed, a.seed);
  override_if(s, "--classes", cfg.num_classes, a.classes);
  if (s->count("--per-class")) cfg.per_class_min = cfg.per_class_max = a.per_class;
  override_if(s, "--per-class-min", cfg.per_class_min, a.per_class_min);
  override_if(s, "--per-class-max", cfg.per_class_max, a.per_class_max);
  override_if(s, "--test-per-class", cfg.test_per_class, a.test_per_class);
  override_if(s, "--sample-len", cfg.sample_len, a.sample_len);
  override_if(s, "--sample-rate", cfg.sample_rate_hz, a.sample_rate);
  override_if(s, "--text-len", cfg.text_len_max, a.text_len);
  override_if(s, "--emitter-base", cfg.emitter_id_base, a.emitter_base);
  override_if(s, "--snr-min", cfg.snr_min_db, a.snr_min);
  override_if(s, "--snr-max", cfg.snr_max_db, a.snr_max);
  if (a.no_receiver_noise) cfg.receiver_noise = false;
  if (a.random_phase) cfg.random_phase = true;
  override_if(s, "--interference-fraction", cfg.interference_fraction, a.interference_fraction);
  override_if(s, "--interference-pulses", cfg.interference_max_pulses, a.interference_pulses);
  if (!a.template_file.empty()) cfg.waveform = signal::load_waveform_template(a.template_file);
  try {
    dataset::validate_config(cfg);
  } catch (const dataset::DatasetError& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = resolve_out(a.out);
  prepare_dir(dir, a.force);
  const json snap = {{"command", "gen-data"}, {"dataset", json::parse(dataset::config_to_json(cfg))}};
  write_text(dir / kSnapshot, snap.dump(2) + "\n");

  const auto manifest = dataset::generate_dataset(cfg, dir);
  out << "dataset " << dir.string() << ": " << signal::to_string(cfg.kind) << ", " << cfg.num_classes
      << " classes, " << manifest.total_samples() << " bursts of " << cfg.sample_len << " samples at "
      << dataset::resolved_sample_rate(cfg) << " Hz\n";
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string config, out, data;
  std::uint64_t seed = 1;
  double lr = 0, momentum = 0, weight_decay = 0, augment_fraction = 0, augment_snr_min = 0, augment_snr_max = 0;
  std::size_t batch = 0, max_iters = 0, validate_every = 0, checkpoint_every = 0, width = kDefaultWidth, classes = 0;
  bool paper_defaults = false, resume = false, force = false, dry_run = false, quiet = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* s = app.add_subcommand("train", "Train a classifier on a dataset");
  s->add_option("--config", a.config, "Training config snapshot to reproduce");
  s->add_option("--out", a.out, "Run directory")->required();
  s->add_option("--data", a.data, "Dataset directory");
  s->add_option("--seed", a.seed, "Model and shuffle seed");
  s->add_option("--lr", a.lr, "Learning rate");
  s->add_option("--momentum", a.momentum, "Momentum");
  s->add_option("--batch", a.batch, "Batch size");
  s->add_option("--max-iters", a.max_iters, "Iteration budget");
  s->add_option("--validate-every", a.validate_every, "Validation cadence in iterations");
  s->add_option("--checkpoint-every", a.checkpoint_every, "last.ckpt cadence (0: every validation)");
  s->add_option("--weight-decay", a.weight_decay, "L2 weight decay");
  s->add_option("--augment-fraction", a.augment_fraction, "Share of training bursts given extra AWGN");
  s->add_option("--augment-snr-min", a.augment_snr_min, "Lowest augmentation SNR, dB");
  s->add_option("--augment-snr-max", a.augment_snr_max, "Highest augmentation SNR, dB");
  s->add_option("--width", a.width, "Stem and first-stage channel count");
  s->add_option("--classes", a.classes, "Expected class count (checked against the dataset)");
  s->add_flag("--paper-defaults", a.paper_defaults, "Batch 190, momentum 0.9, 101250 iterations, validate every 1350");
  s->add_flag("--resume", a.resume, "Continue the run in --out from its last checkpoint");
  s->add_flag("--force", a.force, "Overwrite an existing run directory");
  s->add_flag("--dry-run", a.dry_run, "Write the resolved config and stop");
  s->add_flag("--quiet", a.quiet, "No per-validation progress lines");
}

struct TrainPlan {
  std::string data;
  std::size_t width = kDefaultWidth;
  std::uint64_t model_seed = 0;
  training::TrainConfig train;
};

json plan_to_json(const TrainPlan& p, const dataset::Dataset& data) {
  return {{"command", "train"},
          {"data", p.data},
          {"network",
           {{"width", p.width},
            {"num_classes", data.manifest().config.num_classes},
            {"input_length", data.sample_len()}}},
          {"model_seed", p.model_seed},
          {"training", json::parse(training::config_to_json(p.train))}};
}

TrainPlan plan_from_json(const json& j) {
  TrainPlan p;
  try {
    p.data = j.at("data").get<std::string>();
    p.width = j.at("network").at("width").get<std::size_t>();
    p.model_seed = j.at("model_seed").get<std::uint64_t>();
    p.train = training::config_from_json(j.at("training").dump());
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed train config: ") + e.what());
  }
  return p;
}

int cmd_train(CLI::App* s, const TrainArgs& a, std::ostream& out) {
  const fs::path dir = resolve_out(a.out);
  TrainPlan plan;
  if (a.resume) {
    if (!fs::exists(dir / kSnapshot)) throw std::runtime_error("nothing to resume: " + (dir / kSnapshot).string() + " is missing");
    for (const char* f : {"--config", "--data", "--seed", "--lr", "--momentum", "--batch", "--max-iters",
                          "--validate-every", "--checkpoint-every", "--weight-decay", "--augment-fraction",
                          "--augment-snr-min", "--augment-snr-max", "--width", "--paper-defaults"})
      if (s->count(f)) throw UsageError(std::string("--resume continues the saved config; ") + f + " cannot change it");
    plan = plan_from_json(load_snapshot(dir / kSnapshot, "train"));
  } else {
    if (!a.config.empty()) plan = plan_from_json(load_snapshot(a.config, "train"));
    if (a.paper_defaults) {
      for (const char* f : {"--batch", "--momentum", "--max-iters", "--validate-every"})
        if (s->count(f)) throw UsageError(std::string("--paper-defaults fixes ") + f + "; drop one of them");
      const auto p = training::paper_defaults();
      plan.train.batch_size = p.batch_size;
      plan.train.momentum = p.momentum;
      plan.train.max_iterations = p.max_iterations;
      plan.train.validate_every = p.validate_every;
    }
    if (s->count("--data")) plan.data = abs_path(a.data);
    if (plan.data.empty()) throw UsageError("train needs --data or --config");
    if (s->count("--seed") || a.config.empty()) {
      plan.train.seed = a.seed;
      plan.model_seed = derive_seed(a.seed, {kModelTag});
    }
    override_if(s, "--lr", plan.train.learning_rate, a.lr);
    override_if(s, "--momentum", plan.train.momentum, a.momentum);
    override_if(s, "--batch", plan.train.batch_size, a.batch);
    override_if(s, "--max-iters", plan.train.max_iterations, a.max_iters);
    override_if(s, "--validate-every", plan.train.validate_every, a.validate_every);
    override_if(s, "--checkpoint-every", plan.train.checkpoint_every, a.checkpoint_every);
    override_if(s, "--weight-decay", plan.train.weight_decay, a.weight_decay);
    override_if(s, "--augment-fraction", plan.train.augment_fraction, a.augment_fraction);
    override_if(s, "--augment-snr-min", plan.train.augment_snr_min_db, a.augment_snr_min);
    override_if(s, "--augment-snr-max", plan.train.augment_snr_max_db, a.augment_snr_max);
    if (s->count("--width") || a.config.empty()) plan.width = a.width;
  }
  try {
    training::validate_config(plan.train);
  } catch (const training::TrainingError& e) {
    throw UsageError(e.what());
  }

  const auto data = dataset::Dataset::open(plan.data);
  const std::size_t classes = data.manifest().config.num_classes;
  if (s->count("--classes") && a.classes != classes)
    throw UsageError("--classes " + std::to_string(a.classes) + " but the dataset has " + std::to_string(classes));

  if (!a.resume) {
    prepare_dir(dir, a.force);
    write_text(dir / kSnapshot, plan_to_json(plan, data).dump(2) + "\n");
    fs::copy_file(fs::path(plan.data) / dataset::kManifestFile, dir / dataset::kManifestFile,
                  fs::copy_options::overwrite_existing);
  } else if (!fs::exists(dir / "checkpoints" / "last.ckpt") && !fs::exists(dir / "checkpoints" / "initial.ckpt")) {
    throw std::runtime_error("nothing to resume: no checkpoint in " + (dir / "checkpoints").string());
  }
  if (a.dry_run) {
    out << "resolved config written to " << (dir / kSnapshot).string() << "\n";
    return 0;
  }

  const auto task = dataset::full_task(data);
  Model<float> model(default_network_spec(classes, data.sample_len(), plan.width), plan.model_seed);
  training::TrainOptions opt;
  opt.run_dir = dir;
  opt.resume = a.resume;
  opt.metadata = transfer::emitter_metadata(task.emitter_ids);
  if (!a.quiet)
    opt.on_validate = [&out](const training::CurveRecord& r) {
      char line[160];
      std::snprintf(line, sizeof line, "iter %zu  train_loss %.4f  val_acc %.4f  val_loss %.4f  %.1fs\n", r.iteration,
                    r.train_loss, r.val_accuracy, r.val_loss, r.wall_ms / 1000.0);
      out << line << std::flush;
    };
  const auto res = training::train(model, task, plan.train, opt);
  if (plan.train.max_iterations == 0) {
    out << "max-iters 0: initial checkpoint written to " << (dir / "checkpoints" / "initial.ckpt").string() << "\n";
    return 0;
  }
  out << "trained " << res.iterations_done << " iterations; best validation accuracy " << res.best_accuracy
      << " at iteration " << res.best_iteration << "\n";
  return 0;
}

// ------------------------------------------------------- eval / snr-sweep

struct ModelArgs {
  std::string run, checkpoint, data, out, which = "final";
  std::size_t batch = 100;
};

void add_model_options(CLI::App* s, ModelArgs& a) {
  s->add_option("--run", a.run, "Run directory written by train");
  s->add_option("--checkpoint", a.checkpoint, "Checkpoint file (overrides --run)");
  s->add_option("--which", a.which, "Checkpoint of the run: final, best, last or initial")
      ->check(CLI::IsMember({"final", "best", "last", "initial"}));
  s->add_option("--data", a.data, "Dataset directory (default: the run's dataset)");
  s->add_option("--out", a.out, "Report directory (default: <run>/reports)");
  s->add_option("--batch", a.batch, "Evaluation batch size");
}

struct LoadedModel {
  std::string checkpoint, data;
  fs::path out;
};

LoadedModel resolve_model_args(const ModelArgs& a) {
  LoadedModel m;
  if (!a.checkpoint.empty())
    m.checkpoint = abs_path(a.checkpoint);
  else if (!a.run.empty())
    m.checkpoint = abs_path(fs::path(resolve_out(a.run)) / "checkpoints" / (a.which + ".ckpt"));
  else
    throw UsageError("give --run or --checkpoint");
  if (!fs::exists(m.checkpoint)) throw std::runtime_error("checkpoint " + m.checkpoint + " does not exist");
  if (!a.data.empty()) {
    m.data = abs_path(a.data);
  } else if (!a.run.empty()) {
    m.data = plan_from_json(load_snapshot(resolve_out(a.run) / kSnapshot, "train")).data;
  } else {
    throw UsageError("--checkpoint without --run needs --data");
  }
  if (!a.out.empty())
    m.out = resolve_out(a.out);
  else if (!a.run.empty())
    m.out = resolve_out(a.run) / "reports";
  else
    throw UsageError("--checkpoint without --run needs --out");
  return m;
}

Model<float> load_model_for(const std::string& checkpoint, const dataset::Dataset& data) {
  const auto ckpt = load_checkpoint(checkpoint);
  if (ckpt.spec.num_classes != data.manifest().config.num_classes)
    throw std::runtime_error("checkpoint has " + std::to_string(ckpt.spec.num_classes) + " outputs but the dataset has " +
                             std::to_string(data.manifest().config.num_classes) + " classes");
  if (ckpt.spec.input_length != data.sample_len())
    throw std::runtime_error("checkpoint expects " + std::to_string(ckpt.spec.input_length) + "-sample bursts, dataset has " +
                             std::to_string(data.sample_len()));
  return restore_model<float>(ckpt);
}

struct EvalArgs {
  ModelArgs model;
  std::size_t top_k = 5;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto m = resolve_model_args(a.model);
  fs::create_directories(m.out);
  const json snap = {{"command", "eval"}, {"checkpoint", m.checkpoint}, {"data", m.data},
                     {"batch_size", a.model.batch}, {"top_k", a.top_k}};
  write_text(m.out / "eval_config.json", snap.dump(2) + "\n");

  const auto data = dataset::Dataset::open(m.data);
  auto model = load_model_for(m.checkpoint, data);
  const auto task = dataset::full_task(data);
  const auto v = training::validate(model, task, task.test, a.model.batch);
  const auto report = evaluation::build_report(v.labels, v.predictions, task.num_classes, a.top_k);
  evaluation::write_per_class_csv(m.out / "per_class.csv", report);
  const auto summary = evaluation::summary_text(report);
  write_text(m.out / "summary.txt", summary);
  out << summary;
  return 0;
}

struct SweepArgs {
  ModelArgs model;
  std::string snrs = "0,3,6,9,12,15,20,inf";
  std::uint64_t seed = 1;
};

int cmd_snr_sweep(const SweepArgs& a, std::ostream& out) {
  std::vector<double> snrs;
  try {
    snrs = evaluation::parse_snr_list(a.snrs);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto m = resolve_model_args(a.model);
  fs::create_directories(m.out);
  const json snap = {{"command", "snr-sweep"}, {"checkpoint", m.checkpoint}, {"data", m.data},
                     {"batch_size", a.model.batch}, {"snrs", a.snrs}, {"noise_seed", a.seed}};
  write_text(m.out / "snr_config.json", snap.dump(2) + "\n");

  const auto data = dataset::Dataset::open(m.data);
  auto model = load_model_for(m.checkpoint, data);
  const auto task = dataset::full_task(data);
  const auto report = evaluation::snr_sweep(model, task, snrs, a.seed, a.model.batch);
  evaluation::write_snr_csv(m.out / "snr_sweep.csv", report);
  for (const auto& p : report) {
    char line[128];
    std::snprintf(line, sizeof line, "snr %6s dB  accuracy %.4f  confidence %.4f  n %zu\n",
                  std::isinf(p.snr_db) ? "inf" : std::to_string(static_cast<int>(p.snr_db)).c_str(), p.accuracy,
                  p.mean_confidence, p.n);
    out << line;
  }
  return 0;
}

// ---------------------------------------------------------------- transfer

struct TransferArgs {
  std::string config, out, thresholds, subsets, kind;
  std::uint64_t seed = 1;
  std::size_t pool_classes = 0, new_classes = 0, pretrain_iters = 0, finetune_iters = 0, width = 0;
  bool force = false;
};

void add_transfer(CLI::App& app, TransferArgs& a) {
  auto* s = app.add_subcommand("transfer", "Pretrain on nested subsets, fine-tune on new emitters, tabulate");
  s->add_option("--config", a.config, "Experiment config snapshot to reproduce");
  s->add_option("--out", a.out, "Experiment directory")->required();
  s->add_option("--seed", a.seed, "Experiment seed");
  s->add_option("--thresholds", a.thresholds, "Accuracy targets in percent, e.g. 60,70,80,90");
  s->add_option("--subsets", a.subsets, "Pretraining class counts, e.g. 5,20,50");
  s->add_option("--kind", a.kind, "adsb or acars");
  s->add_option("--pool-classes", a.pool_classes, "Emitters in the pretraining pool");
  s->add_option("--new-classes", a.new_classes, "Emitters in the new task");
  s->add_option("--pretrain-iters", a.pretrain_iters, "Iterations per pretraining run");
  s->add_option("--finetune-iters", a.finetune_iters, "Iterations per regime on the new task");
  s->add_option("--width", a.width, "Network width");
  s->add_flag("--force", a.force, "Overwrite an existing experiment directory");
}

int cmd_transfer(CLI::App* s, const TransferArgs& a, std::ostream& out) {
  transfer::TransferConfig cfg = transfer::default_transfer_config(a.seed);
  if (!a.config.empty()) {
    const auto j = load_snapshot(a.config, "transfer");
    cfg = transfer::config_from_json((j.contains("experiment") ? j.at("experiment") : j).dump());
    if (s->count("--seed")) {
      const auto base = transfer::default_transfer_config(a.seed);
      cfg.seed = base.seed;
      cfg.pool.seed = base.pool.seed;
      cfg.pretrain.seed = cfg.finetune.seed = cfg.scratch.seed = a.seed;
    }
  }
  if (s->count("--thresholds")) cfg.thresholds = parse_percent_list(a.thresholds);
  if (s->count("--subsets")) cfg.pretrain_subsets = parse_size_list(a.subsets);
  if (s->count("--kind")) {
    try {
      cfg.pool.kind = signal::burst_kind_from_string(a.kind);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    cfg.pool.sample_rate_hz = 0.0;
  }
  override_if(s, "--pool-classes", cfg.pool.num_classes, a.pool_classes);
  override_if(s, "--new-classes", cfg.new_task.num_classes, a.new_classes);
  override_if(s, "--pretrain-iters", cfg.pretrain.max_iterations, a.pretrain_iters);
  if (s->count("--finetune-iters")) cfg.finetune.max_iterations = cfg.scratch.max_iterations = a.finetune_iters;
  override_if(s, "--width", cfg.network_width, a.width);
  try {
    transfer::validate_config(cfg);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = resolve_out(a.out);
  prepare_dir(dir, a.force);
  const json snap = {{"command", "transfer"}, {"experiment", json::parse(transfer::config_to_json(cfg))}};
  write_text(dir / kSnapshot, snap.dump(2) + "\n");
  const auto result = transfer::run_transfer_experiment(cfg, dir);
  out << transfer::threshold_csv(result.table);
  return 0;
}

}  // namespace

fs::path resolve_out(const fs::path& path) {
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv(kRunRootEnv); root != nullptr && *root != '\0') return fs::path(root) / path;
  return path;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"burstnet: emitter identification from synthetic ADS-B and ACARS bursts"};
  app.require_subcommand(1);
  GenArgs gen;
  TrainArgs tr;
  EvalArgs ev;
  SweepArgs sw;
  TransferArgs tf;
  add_gen_data(app, gen);
  add_train(app, tr);
  auto* eval = app.add_subcommand("eval", "Per-class accuracy report on the held-out split");
  add_model_options(eval, ev.model);
  eval->add_option("--top-k", ev.top_k, "Most-confused class pairs to list");
  auto* sweep = app.add_subcommand("snr-sweep", "Accuracy and confidence under added white noise");
  add_model_options(sweep, sw.model);
  sweep->add_option("--snrs", sw.snrs, "Comma-separated SNRs in dB; inf means no added noise");
  sweep->add_option("--seed", sw.seed, "Noise seed");
  add_transfer(app, tf);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (auto* s = app.get_subcommand("gen-data"); s->parsed()) return cmd_gen_data(s, gen, out);
    if (auto* s = app.get_subcommand("train"); s->parsed()) return cmd_train(s, tr, out);
    if (eval->parsed()) return cmd_eval(ev, out);
    if (sweep->parsed()) return cmd_snr_sweep(sw, out);
    if (auto* s = app.get_subcommand("transfer"); s->parsed()) return cmd_transfer(s, tf, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace burstnet::cli
