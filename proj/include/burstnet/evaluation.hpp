#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "burstnet/dataset.hpp"
#include "burstnet/model.hpp"

namespace burstnet::evaluation {

inline constexpr std::size_t kHistogramBins = 10;  // [0,0.1), ..., [0.9,1.0]

struct ClassAccuracy {
  std::size_t class_id = 0;
  std::size_t n_test = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct ConfusedPair {
  std::size_t true_class = 0;
  std::size_t predicted_class = 0;
  std::size_t count = 0;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
  std::vector<ClassAccuracy> per_class;
  std::array<std::size_t, kHistogramBins> histogram{};
  std::size_t classes_above_90 = 0;  // accuracy strictly greater than 0.9
  std::vector<ConfusedPair> top_confusions;
};

// Bin of correct/n computed in integers: floor(10 * correct / n), capped at 9.
std::size_t histogram_bin(std::size_t correct, std::size_t n);

// Throws if some class has no samples.
EvalReport build_report(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                        std::size_t num_classes, std::size_t top_k = 5);

EvalReport per_category_report(Model<float>& model, const dataset::TaskView& task, std::size_t batch_size = 100);

void write_per_class_csv(const std::filesystem::path& path, const EvalReport& report);
std::string summary_text(const EvalReport& report);

struct SnrPoint {
  double snr_db = 0.0;  // +inf: no added noise
  double accuracy = 0.0;
  double mean_confidence = 0.0;  // over correctly classified samples
  std::size_t n = 0;
  std::size_t correct = 0;
};
using SnrSweepReport = std::vector<SnrPoint>;

// Parses "0,3,6,inf"; rejects an empty list.
std::vector<double> parse_snr_list(const std::string& text);

// Noise for sample i at sweep point k is seeded from (noise_seed, k, i).
SnrSweepReport snr_sweep(Model<float>& model, const dataset::TaskView& task, std::span<const double> snr_list,
                         std::uint64_t noise_seed, std::size_t batch_size = 100);

void write_snr_csv(const std::filesystem::path& path, const SnrSweepReport& report);

}  // namespace burstnet::evaluation
