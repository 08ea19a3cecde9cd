#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "burstnet/transfer.hpp"

using namespace burstnet;
using namespace burstnet::transfer;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("burstnet_test_transfer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

training::TrainingCurve curve_from(std::vector<std::pair<std::size_t, double>> points) {
  training::TrainingCurve c;
  for (auto [it, acc] : points) c.push_back({it, 1.0, acc, 1.0, 0.0});
  return c;
}

TransferConfig tiny_config(std::uint64_t seed = 2) {
  auto c = default_transfer_config(seed);
  c.pool.num_classes = 6;
  c.pool.per_class_min = 16;
  c.pool.per_class_max = 20;
  c.pool.test_per_class = 6;
  c.pretrain_subsets = {2, 6};
  c.new_task.num_classes = 3;
  c.new_task.per_class_min = 14;
  c.new_task.per_class_max = 16;
  c.new_task.test_per_class = 6;
  c.network_width = 4;
  for (auto* t : {&c.pretrain, &c.finetune, &c.scratch}) {
    t->batch_size = 8;
    t->max_iterations = 20;
    t->validate_every = 10;
  }
  return c;
}

}  // namespace

TEST_CASE("default experiment config") {
  const auto c = default_transfer_config();
  CHECK_NOTHROW(validate_config(c));
  CHECK(c.pretrain_subsets == std::vector<std::size_t>{5, 20, 50});
  CHECK(c.pool.num_classes == 50);
  CHECK(c.thresholds == std::vector<double>{0.6, 0.7, 0.8, 0.9});
  CHECK(c.finetune.learning_rate == doctest::Approx(0.1 * c.pretrain.learning_rate));
  CHECK(c.finetune.validate_every == 10);
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(default_transfer_config(1) == default_transfer_config(1));
  CHECK_FALSE(default_transfer_config(1) == default_transfer_config(2));
  const auto nt = new_task_dataset_config(c);
  CHECK(nt.num_classes == 20);
  CHECK(nt.emitter_id_base == 1000);
  CHECK(nt.seed != c.pool.seed);
}

TEST_CASE("config validation rejects bad subsets, thresholds and overlapping emitters") {
  auto c = default_transfer_config();
  c.pretrain_subsets = {5, 60};
  CHECK_THROWS_AS(validate_config(c), TransferError);
  c = default_transfer_config();
  c.pretrain_subsets = {20, 5};
  CHECK_THROWS_AS(validate_config(c), TransferError);
  c = default_transfer_config();
  c.thresholds = {0.8, 0.7};
  CHECK_THROWS_AS(validate_config(c), TransferError);
  c = default_transfer_config();
  c.new_task.emitter_id_base = 40;
  CHECK_THROWS_AS(validate_config(c), TransferError);
  c.new_task.emitter_id_base = 50;
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("nested subsets") {
  const std::vector<std::size_t> sizes{5, 20, 50};
  const auto sets = nested_subsets(50, sizes, 3);
  REQUIRE(sets.size() == 3);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(sets[i].size() == sizes[i]);
    CHECK(std::set<std::size_t>(sets[i].begin(), sets[i].end()).size() == sizes[i]);
    for (auto c : sets[i]) CHECK(c < 50);
    if (i > 0) CHECK(std::includes(sets[i].begin(), sets[i].end(), sets[i - 1].begin(), sets[i - 1].end()));
  }
  CHECK(nested_subsets(50, sizes, 3) == sets);
  CHECK(nested_subsets(50, sizes, 4)[0] != sets[0]);
  const std::vector<std::size_t> too_big{51};
  CHECK_THROWS_AS(nested_subsets(50, too_big, 3), TransferError);
  CHECK(regime_name(50, 50) == "NetAll");
  CHECK(regime_name(5, 50) == "Net5");
}

TEST_CASE("iterations to threshold on tabulated rows") {
  const std::vector<double> th{0.6, 0.7, 0.8, 0.9};
  // A slow regime validated every 10 iterations that plateaus below 90%.
  training::TrainingCurve slow;
  for (std::size_t it = 10; it <= 1500; it += 10) {
    const double acc = it < 520 ? 0.3 : it < 650 ? 0.65 : it < 1150 ? 0.75 : 0.81;
    slow.push_back({it, 1.0, acc, 1.0, 0.0});
  }
  auto hits = iterations_to_threshold(slow, th);
  CHECK(hits[0] == std::optional<std::size_t>(520));
  CHECK(hits[1] == std::optional<std::size_t>(650));
  CHECK(hits[2] == std::optional<std::size_t>(1150));
  CHECK_FALSE(hits[3].has_value());

  const auto fast = curve_from({{9, 0.62}, {11, 0.71}, {13, 0.85}, {30, 0.88}, {46, 0.9}, {60, 0.93}});
  hits = iterations_to_threshold(fast, th);
  CHECK(hits == ThresholdHits{9, 11, 13, 46});

  const auto never = curve_from({{10, 0.1}, {20, 0.2}});
  for (const auto& h : iterations_to_threshold(never, th)) CHECK_FALSE(h.has_value());
  CHECK_THROWS_AS(iterations_to_threshold(never, std::vector<double>{0.9, 0.6}), TransferError);

  training::TrainConfig cfg;
  cfg.max_iterations = 600;
  cfg.validate_every = 10;
  CHECK(effective_iterations(std::nullopt, cfg) == 610);
  CHECK(effective_iterations(42, cfg) == 42);
}

TEST_CASE("thresholds are monotone within a regime on random curves") {
  std::mt19937_64 rng(29);
  const std::vector<double> th{0.6, 0.7, 0.8, 0.9};
  for (int trial = 0; trial < 200; ++trial) {
    training::TrainingCurve c;
    for (std::size_t it = 10; it <= 300; it += 10) c.push_back({it, 1.0, std::uniform_real_distribution<double>()(rng), 1.0, 0.0});
    const auto hits = iterations_to_threshold(c, th);
    for (std::size_t i = 1; i < hits.size(); ++i)
      if (hits[i]) {
        REQUIRE(hits[i - 1].has_value());
        CHECK(*hits[i - 1] <= *hits[i]);
      }
  }
}

TEST_CASE("threshold CSV layout and round trip") {
  ThresholdTable t;
  t.thresholds = {0.6, 0.7, 0.8, 0.9};
  t.rows.push_back({"no-TL", {520, 650, 1150, std::nullopt}, 0.8124});
  t.rows.push_back({"NetAll", {9, 11, 13, 46}, 0.9255});
  const auto csv = threshold_csv(t);
  CHECK(csv.rfind("regime,60,70,80,90,final_accuracy\nno-TL,520,650,1150,NR,0.8124", 0) == 0);
  const auto dir = temp_dir("csv");
  write_threshold_csv(dir / "t.csv", t);
  const auto back = read_threshold_csv(dir / "t.csv");
  CHECK(back.rows == t.rows);
  REQUIRE(back.thresholds.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.thresholds[i] == doctest::Approx(t.thresholds[i]));
  CHECK(back.row("NetAll").hits[3] == std::optional<std::size_t>(46));
  CHECK_THROWS_AS(back.row("Net7"), TransferError);
}

TEST_CASE("emitter metadata round trip") {
  const std::vector<std::uint64_t> ids{3, 1000, 7};
  Checkpoint ck;
  ck.metadata = emitter_metadata(ids);
  CHECK(checkpoint_emitters(ck) == ids);
  ck.metadata = "{}";
  CHECK_THROWS_AS(checkpoint_emitters(ck), TransferError);
}

TEST_CASE("pretraining, fine-tuning contracts and a fresh head's chance baseline") {
  const auto cfg = tiny_config();
  const auto dir = temp_dir("contracts");
  dataset::generate_dataset(cfg.pool, dir / "pool");
  dataset::generate_dataset(new_task_dataset_config(cfg), dir / "new");
  const auto pool = dataset::Dataset::open(dir / "pool");
  const auto fresh = dataset::Dataset::open(dir / "new");
  const auto task = dataset::full_task(fresh);

  const auto nets = pretrain_subsets(pool, cfg, dir / "pretrain");
  REQUIRE(nets.size() == 2);
  CHECK(nets[0].name == "Net2");
  CHECK(nets[1].name == "NetAll");
  CHECK(std::includes(nets[1].class_ids.begin(), nets[1].class_ids.end(), nets[0].class_ids.begin(),
                      nets[0].class_ids.end()));
  for (const auto& n : nets) {
    const auto m = restore_model<float>(n.checkpoint);
    CHECK(m.parameter("head.fc.weight").value.shape() == Shape{m.feature_dim(), n.class_ids.size()});
    CHECK(checkpoint_emitters(n.checkpoint) == n.emitter_ids);
    CHECK(fs::exists(dir / "pretrain" / n.name / "checkpoints" / "final.ckpt"));
    for (auto e : n.emitter_ids)
      for (auto f : task.emitter_ids) CHECK(e != f);
  }

  auto zero = cfg.finetune;
  zero.max_iterations = 0;
  const auto base = restore_model<float>(nets[1].checkpoint);
  // Zero-iteration fine-tune: trunk unchanged, head fresh and sized to the new task.
  const auto ft = fine_tune(nets[1].checkpoint, task, zero, 77);
  CHECK(ft.curve.empty());
  CHECK(ft.model.parameter("head.fc.weight").value.shape() == Shape{base.feature_dim(), 3});
  for (const auto& p : base.parameters())
    if (p.name.rfind("head.", 0) != 0) CHECK(ft.model.parameter(p.name).value == p.value);

  // Over many head seeds the mean accuracy of an untrained head is 1/M.
  std::vector<double> accs;
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto r = fine_tune(nets[1].checkpoint, task, zero, 1000 + s);
    accs.push_back(training::validate(r.model, task, task.test).accuracy);
  }
  const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
  double var = 0.0;
  for (auto a : accs) var += (a - mean) * (a - mean);
  const double se = std::sqrt(var / static_cast<double>(accs.size() - 1) / static_cast<double>(accs.size()));
  INFO("mean " << mean << " se " << se);
  CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * se + 1e-12);

  // Fine-tuning on the pool's own emitters is rejected.
  const auto overlap = dataset::full_task(pool);
  CHECK_THROWS_WITH_AS(fine_tune(nets[1].checkpoint, overlap, zero, 1), doctest::Contains("already used"), TransferError);
}

TEST_CASE("experiment is deterministic and the no-TL regime is isolated") {
  const auto cfg = tiny_config(4);
  const auto dir_b = temp_dir("run_b");
  const auto a = run_transfer_experiment(cfg, temp_dir("run_a"));
  const auto b = run_transfer_experiment(cfg, dir_b);
  CHECK(a.table == b.table);
  REQUIRE(a.table.rows.size() == 3);
  CHECK(a.table.rows[0].regime == "no-TL");
  CHECK(a.table.rows[1].regime == "Net2");
  CHECK(a.table.rows[2].regime == "NetAll");
  CHECK(read_threshold_csv(dir_b / "reports" / "thresholds.csv").rows == a.table.rows);

  auto fewer = cfg;
  fewer.pretrain_subsets = {6};
  const auto c = run_transfer_experiment(fewer, temp_dir("run_c"));
  REQUIRE(c.table.rows.size() == 2);
  CHECK(training::same_curve(c.curves[0].curve, a.curves[0].curve));
  CHECK(c.table.rows[0] == a.table.rows[0]);
}
