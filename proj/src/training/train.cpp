#include "burstnet/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "burstnet/checkpoint.hpp"
#include "burstnet/format.hpp"
#include "burstnet/hash.hpp"
#include "burstnet/ops.hpp"
#include "json.hpp"

namespace burstnet::training {

using nlohmann::json;

namespace {

constexpr std::uint64_t kShuffleTag = 0x545241494eULL;
constexpr std::uint64_t kAugmentTag = 0x4155474dULL;

std::string format_double(double v) { return shortest(v); }

// Iterator position plus the pending train-loss accumulator, so a resumed run
// logs exactly what an uninterrupted one would.
std::string encode_state(const dataset::BatchIterator& it, double loss_sum, std::size_t loss_n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", loss_sum);
  return it.state() + "|" + buf + "|" + std::to_string(loss_n);
}

void decode_state(const std::string& s, dataset::BatchIterator& it, double& loss_sum, std::size_t& loss_n) {
  const auto a = s.find('|');
  const auto b = s.find('|', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) throw TrainingError("malformed training state '" + s + "'");
  it.restore(s.substr(0, a));
  loss_sum = std::strtod(s.substr(a + 1, b - a - 1).c_str(), nullptr);
  loss_n = std::stoull(s.substr(b + 1));
}

}  // namespace

TrainConfig paper_defaults() {
  TrainConfig c;
  c.batch_size = 190;
  c.momentum = 0.9;
  c.max_iterations = 101250;
  c.validate_every = 1350;
  return c;
}

void validate_config(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw TrainingError("learning_rate must be positive");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw TrainingError("momentum must lie in [0, 1)");
  if (c.batch_size == 0) throw TrainingError("batch_size must be positive");
  if (c.validate_every == 0) throw TrainingError("validate_every must be positive");
  if (c.max_iterations > 0 && c.validate_every > c.max_iterations)
    throw TrainingError("validate_every " + std::to_string(c.validate_every) + " exceeds max_iterations " +
                        std::to_string(c.max_iterations));
  if (c.weight_decay < 0.0) throw TrainingError("weight_decay must be non-negative");
  if (c.eval_batch_size == 0) throw TrainingError("eval_batch_size must be positive");
  for (auto m : c.lr_decay_at)
    if (m < 0.0 || m > 1.0) throw TrainingError("lr decay milestones are fractions in [0, 1]");
  if (!(c.augment_fraction >= 0.0 && c.augment_fraction <= 1.0))
    throw TrainingError("augment_fraction must lie in [0, 1]");
  if (!(c.augment_snr_min_db <= c.augment_snr_max_db) || !std::isfinite(c.augment_snr_min_db) ||
      !std::isfinite(c.augment_snr_max_db))
    throw TrainingError("augmentation SNR range must be finite with min <= max");
}

double learning_rate_at(const TrainConfig& c, std::size_t iteration) {
  double lr = c.learning_rate;
  for (auto m : c.lr_decay_at)
    if (static_cast<double>(iteration) >= std::floor(m * static_cast<double>(c.max_iterations))) lr *= c.lr_decay_factor;
  return lr;
}

std::string config_to_json(const TrainConfig& c) {
  json j = {{"learning_rate", c.learning_rate},
            {"momentum", c.momentum},
            {"batch_size", c.batch_size},
            {"max_iterations", c.max_iterations},
            {"validate_every", c.validate_every},
            {"lr_schedule", {{"decay_at", c.lr_decay_at}, {"factor", c.lr_decay_factor}}},
            {"weight_decay", c.weight_decay},
            {"seed", c.seed},
            {"checkpoint_every", c.checkpoint_every},
            {"eval_batch_size", c.eval_batch_size},
            {"augment",
             {{"fraction", c.augment_fraction},
              {"snr_min_db", c.augment_snr_min_db},
              {"snr_max_db", c.augment_snr_max_db}}}};
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const auto j = json::parse(text);
    c.learning_rate = j.at("learning_rate").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_iterations = j.at("max_iterations").get<std::size_t>();
    c.validate_every = j.at("validate_every").get<std::size_t>();
    c.lr_decay_at = j.at("lr_schedule").at("decay_at").get<std::vector<double>>();
    c.lr_decay_factor = j.at("lr_schedule").at("factor").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
    c.eval_batch_size = j.at("eval_batch_size").get<std::size_t>();
    const auto& aug = j.at("augment");
    c.augment_fraction = aug.at("fraction").get<double>();
    c.augment_snr_min_db = aug.at("snr_min_db").get<double>();
    c.augment_snr_max_db = aug.at("snr_max_db").get<double>();
  } catch (const json::exception& e) {
    throw TrainingError(std::string("malformed training config: ") + e.what());
  }
  return c;
}

std::string curve_row(const CurveRecord& r) {
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
  return std::to_string(r.iteration) + "," + format_double(r.train_loss) + "," + format_double(r.val_accuracy) + "," +
         format_double(r.val_loss) + "," + wall;
}

void write_curve_csv(const std::filesystem::path& path, const TrainingCurve& curve) {
  std::ofstream out(path, std::ios::trunc);
  out << kCurveHeader << "\n";
  for (const auto& r : curve) out << curve_row(r) << "\n";
  if (!out) throw TrainingError("failed writing " + path.string());
}

TrainingCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrainingError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader)
    throw TrainingError(path.string() + " does not start with the metrics header");
  TrainingCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurveRecord r;
    std::istringstream row(line);
    std::string f[5];
    for (auto& field : f)
      if (!std::getline(row, field, ',')) throw TrainingError("short metrics row '" + line + "'");
    r.iteration = std::stoull(f[0]);
    r.train_loss = std::strtod(f[1].c_str(), nullptr);
    r.val_accuracy = std::strtod(f[2].c_str(), nullptr);
    r.val_loss = std::strtod(f[3].c_str(), nullptr);
    r.wall_ms = std::strtod(f[4].c_str(), nullptr);
    curve.push_back(r);
  }
  return curve;
}

bool same_curve(const TrainingCurve& a, const TrainingCurve& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].iteration != b[i].iteration || a[i].train_loss != b[i].train_loss ||
        a[i].val_accuracy != b[i].val_accuracy || a[i].val_loss != b[i].val_loss)
      return false;
  return true;
}

template <class T>
void sgd_momentum_step(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& v, double lr, double mu) {
  if (w.shape() != g.shape() || w.shape() != v.shape())
    throw TrainingError("sgd_momentum_step: shapes " + shape_string(w.shape()) + ", " + shape_string(g.shape()) +
                        ", " + shape_string(v.shape()) + " disagree");
  const auto n = static_cast<long long>(w.size());
  T* wp = w.data();
  T* vp = v.data();
  const T* gp = g.data();
  const T tlr = static_cast<T>(lr), tmu = static_cast<T>(mu);
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < n; ++i) {
    vp[i] = tmu * vp[i] - tlr * gp[i];
    wp[i] += vp[i];
  }
}

template <class T>
void sgd_momentum_step(Model<T>& model, std::span<Tensor<T>> velocity, double lr, double mu, double weight_decay) {
  std::size_t k = 0;
  for (auto& p : model.parameters()) {
    if (!p.trainable) continue;
    if (k >= velocity.size()) throw TrainingError("fewer velocity buffers than trainable parameters");
    if (weight_decay != 0.0) {
      Tensor<T> g = p.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(weight_decay) * p.value[i];
      sgd_momentum_step(p.value, g, velocity[k], lr, mu);
    } else {
      sgd_momentum_step(p.value, p.grad, velocity[k], lr, mu);
    }
    ++k;
  }
  if (k != velocity.size()) throw TrainingError("more velocity buffers than trainable parameters");
}

template <class T>
std::vector<Tensor<T>> zero_velocity(const Model<T>& model) {
  std::vector<Tensor<T>> v;
  for (const auto& p : model.parameters())
    if (p.trainable) v.emplace_back(p.value.shape());
  return v;
}

std::size_t argmax(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

Validation validate(Model<float>& model, const dataset::TaskView& task, std::span<const std::size_t> indices,
                    std::size_t batch_size) {
  Validation v;
  if (indices.empty()) return v;
  double loss_total = 0.0;
  std::size_t correct = 0;
  const std::size_t m = model.spec().num_classes;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto chunk = indices.subspan(start, std::min(batch_size, indices.size() - start));
    const auto batch = dataset::make_batch(task, chunk);
    const auto logits = model.forward(batch.inputs, ops::Mode::eval);
    const auto sce = ops::softmax_crossentropy(logits, std::span<const std::size_t>(batch.labels));
    loss_total += sce.loss * static_cast<double>(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto row = sce.probabilities.values().subspan(i * m, m);
      const std::size_t pred = argmax(row);
      v.predictions.push_back(pred);
      v.confidences.push_back(row[pred]);
      v.labels.push_back(batch.labels[i]);
      if (pred == batch.labels[i]) ++correct;
    }
  }
  v.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  v.mean_loss = loss_total / static_cast<double>(indices.size());
  return v;
}

TrainResult train(Model<float>& model, const dataset::TaskView& task, const TrainConfig& cfg,
                  const TrainOptions& opt) {
  validate_config(cfg);
  if (model.spec().num_classes != task.num_classes)
    throw TrainingError("model has " + std::to_string(model.spec().num_classes) + " outputs but the dataset has " +
                        std::to_string(task.num_classes) + " classes");
  if (task.train.empty()) throw TrainingError("training split is empty");
  if (task.test.empty()) throw TrainingError("validation split is empty");

  dataset::BatchIterator it(task.train, cfg.batch_size, derive_seed(cfg.seed, {kShuffleTag}));
  auto velocity = zero_velocity(model);
  const std::size_t ckpt_every = cfg.checkpoint_every ? cfg.checkpoint_every : cfg.validate_every;
  const bool files = !opt.run_dir.empty();
  const auto ckpt_dir = opt.run_dir / "checkpoints";
  const auto metrics = opt.run_dir / "metrics.csv";

  TrainResult res;
  std::size_t start = 0;
  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  if (opt.resume) {
    if (!files) throw TrainingError("resume requires a run directory");
    const auto last = ckpt_dir / "last.ckpt";
    const auto ckpt = load_checkpoint(std::filesystem::exists(last) ? last : ckpt_dir / "initial.ckpt");
    if (ckpt.spec != model.spec()) throw TrainingError("checkpoint network spec differs from the requested model");
    model = restore_model<float>(ckpt);
    velocity = restore_velocity<float>(ckpt, model);
    decode_state(ckpt.rng_state, it, loss_sum, loss_n);
    start = ckpt.iteration;
    for (const auto& r : read_curve_csv(metrics))
      if (r.iteration <= start) res.curve.push_back(r);
    write_curve_csv(metrics, res.curve);
    for (const auto& r : res.curve)
      if (r.val_accuracy > res.best_accuracy || res.best_iteration == 0) {
        res.best_accuracy = r.val_accuracy;
        res.best_iteration = r.iteration;
      }
  } else if (files) {
    std::filesystem::create_directories(ckpt_dir);
    write_curve_csv(metrics, {});
    save_checkpoint(make_checkpoint<float>(model, velocity, 0, encode_state(it, 0.0, 0), opt.metadata),
                    ckpt_dir / "initial.ckpt");
  }

  const double wall_offset = res.curve.empty() ? 0.0 : res.curve.back().wall_ms;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t iter = start;
  for (; iter < cfg.max_iterations; ++iter) {
    if (opt.stop_after && iter >= opt.stop_after) break;
    const double lr = learning_rate_at(cfg, iter);
    auto batch = it.next_batch(task);
    if (cfg.augment_fraction > 0.0)
      for (std::size_t j = 0; j < batch.labels.size(); ++j) {
        std::mt19937_64 rng(derive_seed(cfg.seed, {kAugmentTag, iter, j}));
        if (std::uniform_real_distribution<double>()(rng) >= cfg.augment_fraction) continue;
        const double snr = std::uniform_real_distribution<double>(cfg.augment_snr_min_db, cfg.augment_snr_max_db)(rng);
        dataset::add_awgn_to_row(batch.inputs, j, snr, rng());
      }
    const auto logits = model.forward(batch.inputs, ops::Mode::train);
    const auto sce = ops::softmax_crossentropy(logits, std::span<const std::size_t>(batch.labels));
    if (!std::isfinite(sce.loss))
      throw DivergenceError(iter + 1, "training diverged: non-finite loss at iteration " + std::to_string(iter + 1) +
                                          (files ? "; last checkpoint retained in " + ckpt_dir.string() : ""));
    model.backward(ops::softmax_crossentropy_backward(sce.probabilities, std::span<const std::size_t>(batch.labels)));
    sgd_momentum_step<float>(model, velocity, lr, cfg.momentum, cfg.weight_decay);
    loss_sum += sce.loss;
    ++loss_n;

    const std::size_t done = iter + 1;
    if (done % cfg.validate_every == 0) {
      const auto v = validate(model, task, task.test, cfg.eval_batch_size);
      CurveRecord r;
      r.iteration = done;
      r.train_loss = loss_sum / static_cast<double>(loss_n);
      r.val_accuracy = v.accuracy;
      r.val_loss = v.mean_loss;
      r.wall_ms = wall_offset + std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      res.curve.push_back(r);
      loss_sum = 0.0;
      loss_n = 0;
      if (files) {
        std::ofstream out(metrics, std::ios::app);
        out << curve_row(r) << "\n";
      }
      if (opt.on_validate) opt.on_validate(r);
      if (r.val_accuracy > res.best_accuracy || res.best_iteration == 0) {
        res.best_accuracy = r.val_accuracy;
        res.best_iteration = done;
        if (files)
          save_checkpoint(make_checkpoint<float>(model, velocity, done, encode_state(it, loss_sum, loss_n), opt.metadata),
                          ckpt_dir / "best.ckpt");
      }
    }
    if (files && done % ckpt_every == 0)
      save_checkpoint(make_checkpoint<float>(model, velocity, done, encode_state(it, loss_sum, loss_n), opt.metadata),
                      ckpt_dir / "last.ckpt");
  }
  res.iterations_done = iter;
  if (files && iter == cfg.max_iterations) {
    const auto ckpt = make_checkpoint<float>(model, velocity, iter, encode_state(it, loss_sum, loss_n), opt.metadata);
    save_checkpoint(ckpt, ckpt_dir / "last.ckpt");
    save_checkpoint(ckpt, ckpt_dir / "final.ckpt");
  }
  return res;
}

template void sgd_momentum_step<float>(Tensor<float>&, const Tensor<float>&, Tensor<float>&, double, double);
template void sgd_momentum_step<double>(Tensor<double>&, const Tensor<double>&, Tensor<double>&, double, double);
template void sgd_momentum_step<float>(Model<float>&, std::span<Tensor<float>>, double, double, double);
template void sgd_momentum_step<double>(Model<double>&, std::span<Tensor<double>>, double, double, double);
template std::vector<Tensor<float>> zero_velocity<float>(const Model<float>&);
template std::vector<Tensor<double>> zero_velocity<double>(const Model<double>&);

}  // namespace burstnet::training
