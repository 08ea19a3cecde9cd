#include "burstnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "burstnet/format.hpp"
#include "burstnet/hash.hpp"
#include "burstnet/ops.hpp"
#include "burstnet/signal.hpp"
#include "burstnet/training.hpp"

namespace burstnet::evaluation {

namespace {

std::string fmt(double v) { return shortest(v); }

}  // namespace

std::size_t histogram_bin(std::size_t correct, std::size_t n) {
  if (n == 0) throw std::invalid_argument("histogram_bin: empty class");
  return std::min<std::size_t>(kHistogramBins - 1, (correct * kHistogramBins) / n);
}

EvalReport build_report(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                        std::size_t num_classes, std::size_t top_k) {
  if (labels.size() != predictions.size()) throw std::invalid_argument("labels and predictions differ in length");
  EvalReport r;
  std::vector<std::size_t> n(num_classes, 0), correct(num_classes, 0);
  std::vector<std::size_t> confusion(num_classes * num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predictions[i] >= num_classes)
      throw std::invalid_argument("class index out of range in report");
    ++n[labels[i]];
    if (labels[i] == predictions[i])
      ++correct[labels[i]];
    else
      ++confusion[labels[i] * num_classes + predictions[i]];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (n[c] == 0) throw std::invalid_argument("class " + std::to_string(c) + " has no test samples");
    ClassAccuracy a{c, n[c], correct[c], static_cast<double>(correct[c]) / static_cast<double>(n[c])};
    r.per_class.push_back(a);
    ++r.histogram[histogram_bin(correct[c], n[c])];
    if (correct[c] * 10 > n[c] * 9) ++r.classes_above_90;
    r.n_total += n[c];
    r.n_correct += correct[c];
  }
  r.overall_accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_total);
  for (std::size_t t = 0; t < num_classes; ++t)
    for (std::size_t p = 0; p < num_classes; ++p)
      if (confusion[t * num_classes + p] > 0) r.top_confusions.push_back({t, p, confusion[t * num_classes + p]});
  std::stable_sort(r.top_confusions.begin(), r.top_confusions.end(),
                   [](const ConfusedPair& a, const ConfusedPair& b) { return a.count > b.count; });
  if (r.top_confusions.size() > top_k) r.top_confusions.resize(top_k);
  return r;
}

EvalReport per_category_report(Model<float>& model, const dataset::TaskView& task, std::size_t batch_size) {
  const auto v = training::validate(model, task, task.test, batch_size);
  return build_report(v.labels, v.predictions, task.num_classes);
}

void write_per_class_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  out << "class_id,n_test,accuracy\n";
  for (const auto& c : report.per_class) out << c.class_id << "," << c.n_test << "," << fmt(c.accuracy) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string summary_text(const EvalReport& r) {
  std::ostringstream os;
  os << "overall accuracy " << fmt(r.overall_accuracy) << " (" << r.n_correct << "/" << r.n_total << "); "
     << r.classes_above_90 << " of " << r.per_class.size() << " classes above 90%\n";
  os << "histogram";
  for (std::size_t b = 0; b < kHistogramBins; ++b) os << " " << r.histogram[b];
  os << "\n";
  for (const auto& p : r.top_confusions)
    os << "confused " << p.true_class << " -> " << p.predicted_class << ": " << p.count << "\n";
  return os.str();
}

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "inf" || item == "+inf" || item == "none") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw std::invalid_argument("'" + item + "' is not an SNR in dB");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("SNR list is empty");
  return out;
}

SnrSweepReport snr_sweep(Model<float>& model, const dataset::TaskView& task, std::span<const double> snr_list,
                         std::uint64_t noise_seed, std::size_t batch_size) {
  if (snr_list.empty()) throw std::invalid_argument("snr_sweep: SNR list is empty");
  const std::size_t m = model.spec().num_classes;
  SnrSweepReport report;
  for (std::size_t k = 0; k < snr_list.size(); ++k) {
    const double snr = snr_list[k];
    SnrPoint point;
    point.snr_db = snr;
    double conf_sum = 0.0;
    if (std::isinf(snr) && snr > 0) {
      const auto v = training::validate(model, task, task.test, batch_size);
      for (std::size_t i = 0; i < v.labels.size(); ++i)
        if (v.predictions[i] == v.labels[i]) {
          ++point.correct;
          conf_sum += v.confidences[i];
        }
      point.n = v.labels.size();
    } else {
      for (std::size_t start = 0; start < task.test.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, task.test.size() - start);
        auto batch = dataset::make_batch(task, std::span(task.test).subspan(start, count));
        for (std::size_t j = 0; j < count; ++j)
          dataset::add_awgn_to_row(batch.inputs, j, snr, derive_seed(noise_seed, {k, start + j}));
        const auto logits = model.forward(batch.inputs, ops::Mode::eval);
        const auto sce = ops::softmax_crossentropy(logits, std::span<const std::size_t>(batch.labels));
        for (std::size_t j = 0; j < count; ++j) {
          const auto row = sce.probabilities.values().subspan(j * m, m);
          const auto pred = training::argmax(row);
          if (pred == batch.labels[j]) {
            ++point.correct;
            conf_sum += row[pred];
          }
        }
      }
      point.n = task.test.size();
    }
    point.accuracy = point.n ? static_cast<double>(point.correct) / static_cast<double>(point.n) : 0.0;
    point.mean_confidence = point.correct ? conf_sum / static_cast<double>(point.correct) : 0.0;
    report.push_back(point);
  }
  return report;
}

void write_snr_csv(const std::filesystem::path& path, const SnrSweepReport& report) {
  std::ofstream out(path, std::ios::trunc);
  out << "snr_db,accuracy,mean_confidence,n\n";
  for (const auto& p : report)
    out << (std::isinf(p.snr_db) ? std::string("inf") : fmt(p.snr_db)) << "," << fmt(p.accuracy) << ","
        << fmt(p.mean_confidence) << "," << p.n << "\n";
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace burstnet::evaluation
