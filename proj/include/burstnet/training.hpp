#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstnet/dataset.hpp"
#include "burstnet/model.hpp"

namespace burstnet::training {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public TrainingError {
 public:
  DivergenceError(std::size_t iteration, const std::string& what) : TrainingError(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t max_iterations = 5000;
  std::size_t validate_every = 250;
  std::vector<double> lr_decay_at{0.6, 0.85};  // fractions of max_iterations
  double lr_decay_factor = 0.1;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // 0: at every validation
  std::size_t eval_batch_size = 100;
  // Each training burst gets extra AWGN with this probability, at an SNR
  // drawn uniformly from [augment_snr_min_db, augment_snr_max_db].
  double augment_fraction = 0.75;
  double augment_snr_min_db = 0.0;
  double augment_snr_max_db = 20.0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Batch 190, momentum 0.9, 101,250 iterations, validation every 1,350.
TrainConfig paper_defaults();

void validate_config(const TrainConfig& config);
double learning_rate_at(const TrainConfig& config, std::size_t iteration);

std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const std::string& text);

struct CurveRecord {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  double wall_ms = 0.0;
};
using TrainingCurve = std::vector<CurveRecord>;

inline constexpr const char* kCurveHeader = "iteration,train_loss,val_accuracy,val_loss,wall_ms";

std::string curve_row(const CurveRecord& r);
void write_curve_csv(const std::filesystem::path& path, const TrainingCurve& curve);
TrainingCurve read_curve_csv(const std::filesystem::path& path);

// Curves equal in every field except wall time.
bool same_curve(const TrainingCurve& a, const TrainingCurve& b);

// v <- mu v - lr g ; w <- w + v
template <class T>
void sgd_momentum_step(Tensor<T>& weights, const Tensor<T>& grads, Tensor<T>& velocity, double lr, double mu);

// Applies the step to every trainable parameter; velocity aligned with them.
template <class T>
void sgd_momentum_step(Model<T>& model, std::span<Tensor<T>> velocity, double lr, double mu,
                       double weight_decay = 0.0);

template <class T>
std::vector<Tensor<T>> zero_velocity(const Model<T>& model);

struct Validation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<std::size_t> predictions;
  std::vector<double> confidences;  // softmax probability of the predicted class
  std::vector<std::size_t> labels;
};

// Eval-mode forward over `indices`; touches no parameter or statistic.
Validation validate(Model<float>& model, const dataset::TaskView& task, std::span<const std::size_t> indices,
                    std::size_t batch_size = 100);

// Argmax with lowest-index tie-break.
std::size_t argmax(std::span<const float> row);

struct TrainOptions {
  std::filesystem::path run_dir;  // empty: no files written
  bool resume = false;
  std::size_t stop_after = 0;     // >0: return after this many total iterations (simulated interruption)
  std::string metadata = "{}";    // stored in every checkpoint
  std::function<void(const CurveRecord&)> on_validate;
};

struct TrainResult {
  TrainingCurve curve;
  std::size_t iterations_done = 0;
  double best_accuracy = 0.0;
  std::size_t best_iteration = 0;
};

// Checkpoints land in run_dir/checkpoints/{initial,last,best,final}.ckpt and
// the curve in run_dir/metrics.csv.
// Resume starts from last.ckpt, or initial.ckpt when the run stopped before
// writing one.
TrainResult train(Model<float>& model, const dataset::TaskView& task, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace burstnet::training
