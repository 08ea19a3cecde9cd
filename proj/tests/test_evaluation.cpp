#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "burstnet/evaluation.hpp"
#include "burstnet/training.hpp"

using namespace burstnet;
using namespace burstnet::evaluation;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("burstnet_test_evaluation_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const dataset::Dataset& small_data() {
  static const dataset::Dataset data = [] {
    const auto dir = temp_dir("data");
    dataset::DatasetConfig c;
    c.num_classes = 4;
    c.per_class_min = 20;
    c.per_class_max = 25;
    c.test_per_class = 10;
    c.seed = 8;
    dataset::generate_dataset(c, dir);
    return dataset::Dataset::open(dir);
  }();
  return data;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

}  // namespace

TEST_CASE("histogram bins use exact integer arithmetic") {
  CHECK(histogram_bin(0, 10) == 0);
  CHECK(histogram_bin(1, 10) == 1);
  CHECK(histogram_bin(9, 10) == 9);
  CHECK(histogram_bin(10, 10) == 9);
  CHECK(histogram_bin(89, 100) == 8);
  CHECK(histogram_bin(90, 100) == 9);
  CHECK(histogram_bin(7, 70) == 1);  // 0.1 exactly, where 0.1 * 10 in floating point is fragile
  CHECK(histogram_bin(3, 10) == 3);
}

TEST_CASE("perfect classifier") {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < 6; ++c) labels.insert(labels.end(), 5 + c, c);
  const auto r = build_report(labels, labels, 6);
  CHECK(r.overall_accuracy == 1.0);
  for (const auto& pc : r.per_class) CHECK(pc.accuracy == 1.0);
  CHECK(r.histogram[9] == 6);
  CHECK(r.classes_above_90 == 6);
  CHECK(r.top_confusions.empty());
}

TEST_CASE("above-90 count is strict") {
  // Class 0: 9/10 (exactly 0.9), class 1: 10/10, class 2: 19/20 (0.95).
  std::vector<std::size_t> labels, preds;
  auto add = [&](std::size_t c, std::size_t n, std::size_t correct) {
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back(c);
      preds.push_back(i < correct ? c : (c + 1) % 3);
    }
  };
  add(0, 10, 9);
  add(1, 10, 10);
  add(2, 20, 19);
  const auto r = build_report(labels, preds, 3);
  CHECK(r.classes_above_90 == 2);
  CHECK(r.histogram[9] == 3);
  CHECK(summary_text(r).find("2 of 3 classes above 90%") != std::string::npos);
}

TEST_CASE("randomized reports: weighted mean, histogram mass, confusion order") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng() % 12;
    std::vector<std::size_t> labels, preds;
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t n = 1 + rng() % 40;
      const double skill = std::uniform_real_distribution<double>()(rng);
      for (std::size_t i = 0; i < n; ++i) {
        labels.push_back(c);
        preds.push_back(std::bernoulli_distribution(skill)(rng) ? c : rng() % m);
      }
    }
    const auto r = build_report(labels, preds, m, 3);
    std::size_t correct = 0, total = 0;
    double weighted = 0.0;
    for (const auto& pc : r.per_class) {
      correct += pc.correct;
      total += pc.n_test;
      weighted += static_cast<double>(pc.n_test) * pc.accuracy;
      CHECK(pc.accuracy >= 0.0);
      CHECK(pc.accuracy <= 1.0);
    }
    CHECK(total == labels.size());
    CHECK(correct == r.n_correct);
    CHECK(r.overall_accuracy == static_cast<double>(correct) / static_cast<double>(total));
    CHECK(weighted / static_cast<double>(total) == doctest::Approx(r.overall_accuracy).epsilon(1e-12));
    CHECK(std::accumulate(r.histogram.begin(), r.histogram.end(), std::size_t{0}) == m);
    CHECK(r.top_confusions.size() <= 3);
    for (std::size_t i = 1; i < r.top_confusions.size(); ++i)
      CHECK(r.top_confusions[i - 1].count >= r.top_confusions[i].count);
    for (const auto& p : r.top_confusions) CHECK(p.true_class != p.predicted_class);
  }
}

TEST_CASE("uniform random predictions score 1/M within three binomial sigma") {
  std::mt19937_64 rng(17);
  const std::size_t m = 10, per_class = 500;
  std::vector<std::size_t> labels, preds;
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      labels.push_back(c);
      preds.push_back(std::uniform_int_distribution<std::size_t>(0, m - 1)(rng));
    }
  const auto r = build_report(labels, preds, m);
  const double p = 1.0 / static_cast<double>(m);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(labels.size()));
  CHECK(std::abs(r.overall_accuracy - p) < 3.0 * sigma);
}

TEST_CASE("report input errors") {
  const std::vector<std::size_t> labels{0, 0, 2}, preds{0, 1, 2};
  CHECK_THROWS(build_report(labels, preds, 3));
  const std::vector<std::size_t> short_preds{0};
  CHECK_THROWS(build_report(std::vector<std::size_t>{0, 1}, short_preds, 2));
}

TEST_CASE("per-class CSV") {
  const auto dir = temp_dir("csv");
  const std::vector<std::size_t> labels{0, 0, 1, 1, 1}, preds{0, 1, 1, 1, 0};
  write_per_class_csv(dir / "pc.csv", build_report(labels, preds, 2));
  std::ifstream in(dir / "pc.csv");
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(header == "class_id,n_test,accuracy");
  CHECK(row0 == "0,2,0.5");
  CHECK(row1.rfind("1,3,0.66666666666666", 0) == 0);
}

TEST_CASE("SNR list parsing") {
  const auto v = parse_snr_list("0, 3,9,inf");
  REQUIRE(v.size() == 4);
  CHECK(v[2] == 9.0);
  CHECK(std::isinf(v[3]));
  CHECK(std::isinf(parse_snr_list("none")[0]));
  CHECK(parse_snr_list("-5")[0] == -5.0);
  CHECK_THROWS(parse_snr_list(""));
  CHECK_THROWS(parse_snr_list("3,abc"));
}

TEST_CASE("per-category report on a model matches validate") {
  const auto& data = small_data();
  const auto task = dataset::full_task(data);
  Model<float> m(default_network_spec(4, data.sample_len(), 4), 3);
  const auto r = per_category_report(m, task, 7);
  const auto v = training::validate(m, task, task.test);
  CHECK(r.overall_accuracy == v.accuracy);
  for (const auto& pc : r.per_class) CHECK(pc.n_test == data.manifest().config.test_per_class);
  CHECK(per_category_report(m, task).per_class.size() == 4);
}

TEST_CASE("SNR sweep: infinite SNR is the clean result; counts constant; deterministic") {
  const auto& data = small_data();
  const auto task = dataset::full_task(data);
  Model<float> m(default_network_spec(4, data.sample_len(), 4), 3);
  m.forward(make_batch(task, std::span(task.train).first(16)).inputs, ops::Mode::train);
  const auto sum = m.checksum();
  const std::vector<double> snrs{0.0, 9.0, 20.0, std::numeric_limits<double>::infinity()};
  const auto a = snr_sweep(m, task, snrs, 5, 13);
  const auto b = snr_sweep(m, task, snrs, 5);
  CHECK(m.checksum() == sum);
  REQUIRE(a.size() == snrs.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].snr_db == snrs[k]);
    CHECK(a[k].n == task.test.size());
    CHECK(a[k].accuracy == b[k].accuracy);
    CHECK(a[k].mean_confidence == b[k].mean_confidence);
    CHECK(a[k].accuracy == static_cast<double>(a[k].correct) / static_cast<double>(a[k].n));
  }
  const auto clean = training::validate(m, task, task.test);
  CHECK(a.back().accuracy == clean.accuracy);
  double conf = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < clean.predictions.size(); ++i)
    if (clean.predictions[i] == clean.labels[i]) {
      conf += clean.confidences[i];
      ++n;
    }
  CHECK(a.back().mean_confidence == doctest::Approx(n ? conf / static_cast<double>(n) : 0.0).epsilon(1e-12));

  const auto other_seed = snr_sweep(m, task, std::vector<double>{0.0}, 6);
  CHECK(other_seed.size() == 1);
  CHECK_THROWS(snr_sweep(m, task, std::vector<double>{}, 5));

  const auto dir = temp_dir("snr");
  write_snr_csv(dir / "s.csv", a);
  CHECK(first_line(dir / "s.csv") == "snr_db,accuracy,mean_confidence,n");
  std::ifstream in(dir / "s.csv");
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  CHECK(last.rfind("inf,", 0) == 0);
}
