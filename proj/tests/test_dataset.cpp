#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "burstnet/dataset.hpp"
#include "burstnet/signal.hpp"

using namespace burstnet;
using namespace burstnet::dataset;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("burstnet_test_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetConfig small_config(signal::BurstKind kind = signal::BurstKind::adsb) {
  DatasetConfig c;
  c.kind = kind;
  c.num_classes = 3;
  c.per_class_min = 12;
  c.per_class_max = 20;
  c.test_per_class = 4;
  c.sample_len = kind == signal::BurstKind::adsb ? 1024 : 4096;
  c.seed = 42;
  c.interference_fraction = 0.3;
  return c;
}

DatasetManifest fake_manifest(std::vector<std::size_t> counts, std::size_t test_per_class, std::uint64_t seed) {
  DatasetManifest m;
  m.config.num_classes = counts.size();
  m.config.test_per_class = test_per_class;
  m.config.seed = seed;
  m.per_class_counts = std::move(counts);
  return m;
}

void corrupt_byte(const fs::path& p, std::size_t offset) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(static_cast<char>(c ^ 0x5A));
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(validate_config(DatasetConfig{}));
  auto c = DatasetConfig{};
  c.per_class_min = 50;
  c.test_per_class = 50;
  CHECK_THROWS_AS(validate_config(c), DatasetError);
  c = {};
  c.num_classes = 1;
  CHECK_THROWS_AS(validate_config(c), DatasetError);
  c = {};
  c.text_len_max = 221;
  CHECK_THROWS_AS(validate_config(c), DatasetError);
  c = {};
  c.kind = signal::BurstKind::acars;
  c.sample_rate_hz = 16000.0;
  CHECK_THROWS_AS(validate_config(c), signal::SignalError);
  c = {};
  c.test_per_class = 0;
  c.per_class_min = 1;
  c.per_class_max = 1;
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("desk default yields 1,000 test samples") {
  const DatasetConfig c;
  CHECK(c.num_classes == 20);
  CHECK(c.per_class_min == 200);
  CHECK(c.per_class_max == 300);
  CHECK(c.test_per_class * c.num_classes == 1000);
  const auto counts = plan_class_counts(c);
  for (auto n : counts) {
    CHECK(n >= 200);
    CHECK(n <= 300);
  }
  CHECK(split_dataset(fake_manifest(counts, 50, c.seed)).test.size() == 1000);
}

TEST_CASE("large-scale ADS-B config is expressible") {
  DatasetConfig c;
  c.num_classes = 5157;
  c.per_class_min = 150;
  c.per_class_max = 9400;
  c.test_per_class = 50;
  c.sample_len = 13500;
  CHECK_NOTHROW(validate_config(c));
  const auto counts = plan_class_counts(c);
  CHECK(counts.size() == 5157);
  CHECK(*std::min_element(counts.begin(), counts.end()) >= 150);
  CHECK(*std::max_element(counts.begin(), counts.end()) <= 9400);
  CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("split arithmetic") {
  const auto s = split_dataset(fake_manifest({60}, 40, 1));
  CHECK(s.test.size() == 40);
  CHECK(s.train.size() == 20);
  const auto all_train = split_dataset(fake_manifest({5, 9}, 0, 1));
  CHECK(all_train.test.empty());
  CHECK(all_train.train.size() == 14);
  CHECK_THROWS_AS(split_dataset(fake_manifest({60, 40}, 40, 1)), DatasetError);
}

TEST_CASE("split is stratified, disjoint and exhaustive") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t classes = 2 + rng() % 10, test = rng() % 8;
    std::vector<std::size_t> counts(classes);
    for (auto& n : counts) n = test + 1 + rng() % 30;
    const auto m = fake_manifest(counts, test, rng());
    const auto s = split_dataset(m);
    std::vector<std::size_t> class_of;
    for (std::size_t c = 0; c < classes; ++c) class_of.insert(class_of.end(), counts[c], c);
    std::set<std::size_t> tr(s.train.begin(), s.train.end()), te(s.test.begin(), s.test.end());
    CHECK(tr.size() == s.train.size());
    CHECK(te.size() == s.test.size());
    std::vector<std::size_t> inter;
    std::set_intersection(tr.begin(), tr.end(), te.begin(), te.end(), std::back_inserter(inter));
    CHECK(inter.empty());
    CHECK(tr.size() + te.size() == class_of.size());
    std::map<std::size_t, std::size_t> per_class;
    for (auto i : s.test) ++per_class[class_of.at(i)];
    for (std::size_t c = 0; c < classes && test > 0; ++c) CHECK(per_class[c] == test);
    CHECK(split_dataset(m).test == s.test);
  }
}

TEST_CASE("generation writes a manifest and shards that load bit-exactly") {
  const auto dir = temp_dir("roundtrip");
  const auto cfg = small_config();
  const auto m = generate_dataset(cfg, dir);
  CHECK(fs::exists(dir / kManifestFile));
  CHECK(read_manifest(dir) == m);
  CHECK(manifest_from_text(manifest_to_text(m)) == m);
  CHECK(m.emitter_ids == std::vector<std::uint64_t>{0, 1, 2});
  const auto data = Dataset::open(dir);
  REQUIRE(data.size() == m.total_samples());

  // Shard record layout: interleaved little-endian f32 I/Q after a 32-byte header.
  const auto profile = signal::sample_profile(cfg.seed, 1, carrier_hz(cfg), cfg.ranges);
  const auto burst = synthesize_burst(cfg, profile, 3);
  const auto sample = data.sample(m.per_class_counts[0] + 3);
  REQUIRE(sample.size() == 2 * cfg.sample_len);
  for (std::size_t n = 0; n < cfg.sample_len; ++n) {
    CHECK(sample[2 * n] == static_cast<float>(burst.samples[n].real()));
    CHECK(sample[2 * n + 1] == static_cast<float>(burst.samples[n].imag()));
  }
  CHECK(data.class_of(m.per_class_counts[0] + 3) == 1);
  CHECK(fs::file_size(dir / m.shards[1].path) == 32 + m.per_class_counts[1] * cfg.sample_len * 8);
}

TEST_CASE("same config and seed give identical shards") {
  for (auto kind : {signal::BurstKind::adsb, signal::BurstKind::acars}) {
    const auto a = temp_dir("det_a"), b = temp_dir("det_b");
    const auto cfg = small_config(kind);
    const auto ma = generate_dataset(cfg, a), mb = generate_dataset(cfg, b);
    CHECK(ma == mb);
    for (const auto& s : ma.shards) {
      std::ifstream fa(a / s.path, std::ios::binary), fb(b / s.path, std::ios::binary);
      CHECK(std::equal(std::istreambuf_iterator<char>(fa), {}, std::istreambuf_iterator<char>(fb), {}));
    }
    auto other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(generate_dataset(other, b).shards[0].checksum != ma.shards[0].checksum);
    const auto v = verify_dataset(a, true);
    CHECK(v.ok);
  }
}

TEST_CASE("verify and open detect corrupted shards") {
  const auto dir = temp_dir("corrupt");
  const auto m = generate_dataset(small_config(), dir);
  const auto shard = dir / m.shards[1].path;
  corrupt_byte(shard, 1000);
  const auto v = verify_dataset(dir, false);
  CHECK_FALSE(v.ok);
  REQUIRE_FALSE(v.problems.empty());
  CHECK(v.problems[0].find("class_00001") != std::string::npos);
  CHECK_THROWS_WITH_AS(Dataset::open(dir), doctest::Contains("class_00001.bin fails its checksum"), DatasetError);

  generate_dataset(small_config(), dir);
  fs::resize_file(shard, fs::file_size(shard) - 100);
  CHECK_THROWS_WITH_AS(Dataset::open(dir), doctest::Contains("byte offset"), DatasetError);

  generate_dataset(small_config(), dir);
  corrupt_byte(shard, 2);
  CHECK_THROWS_WITH_AS(Dataset::open(dir), doctest::Contains("bad magic at byte offset 0"), DatasetError);

  fs::remove(shard);
  CHECK_THROWS_AS(Dataset::open(dir), DatasetError);
  CHECK_THROWS_AS(Dataset::open(dir / "missing"), DatasetError);
}

TEST_CASE("manifest version and malformed text are rejected") {
  const auto m = fake_manifest({5, 5}, 1, 3);
  auto text = manifest_to_text(m);
  CHECK_THROWS_AS(manifest_from_text("{"), DatasetError);
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 9");
  CHECK_THROWS_WITH_AS(manifest_from_text(text), doctest::Contains("format_version"), DatasetError);
}

TEST_CASE("batch sizes over an epoch") {
  std::vector<std::size_t> idx(1000);
  std::iota(idx.begin(), idx.end(), 0);
  BatchIterator it(idx, 190, 5);
  std::vector<std::size_t> sizes, seen;
  for (std::size_t b = 0; b < it.batches_per_epoch(); ++b) {
    const auto batch = it.next();
    sizes.push_back(batch.size());
    seen.insert(seen.end(), batch.begin(), batch.end());
  }
  CHECK(sizes == std::vector<std::size_t>{190, 190, 190, 190, 190, 50});
  CHECK(it.epoch() == 0);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == idx);
  const auto first_next_epoch = it.next();
  CHECK(it.epoch() == 1);
  CHECK(first_next_epoch.size() == 190);
}

TEST_CASE("iterators with equal seeds agree; state restores the stream") {
  std::vector<std::size_t> idx(77);
  std::iota(idx.begin(), idx.end(), 100);
  BatchIterator a(idx, 10, 9), b(idx, 10, 9), c(idx, 10, 10);
  bool differs = false;
  for (int i = 0; i < 20; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= x != c.next();
  }
  CHECK(differs);
  const auto saved = a.state();
  std::vector<std::vector<std::size_t>> expected;
  for (int i = 0; i < 15; ++i) expected.push_back(a.next());
  BatchIterator r(idx, 10, 9);
  r.restore(saved);
  for (int i = 0; i < 15; ++i) CHECK(r.next() == expected[static_cast<std::size_t>(i)]);
  CHECK_THROWS_AS(r.restore("garbage"), DatasetError);
}

TEST_CASE("one epoch of labels is a permutation of the train labels") {
  const auto dir = temp_dir("labels");
  generate_dataset(small_config(), dir);
  const auto data = Dataset::open(dir);
  const auto task = full_task(data);
  BatchIterator it(task.train, 7, 3);
  std::multiset<std::size_t> got, want;
  for (auto i : task.train) want.insert(data.class_of(i));
  for (std::size_t b = 0; b < it.batches_per_epoch(); ++b) {
    const auto batch = it.next_batch(task);
    CHECK(batch.inputs.shape()[0] == batch.labels.size());
    CHECK(batch.inputs.shape()[1] == 2);
    got.insert(batch.labels.begin(), batch.labels.end());
  }
  CHECK(got == want);
}

TEST_CASE("batch tensor decodes interleaved I/Q into two channels") {
  const auto dir = temp_dir("decode");
  generate_dataset(small_config(), dir);
  const auto data = Dataset::open(dir);
  const auto task = full_task(data);
  const std::vector<std::size_t> pick{task.train[2], task.test[0]};
  const auto batch = make_batch(task, pick);
  const std::size_t len = data.sample_len();
  for (std::size_t k = 0; k < pick.size(); ++k) {
    const auto s = data.sample(pick[k]);
    for (std::size_t n = 0; n < len; ++n) {
      CHECK(batch.inputs.at(k, 0, n) == s[2 * n]);
      CHECK(batch.inputs.at(k, 1, n) == s[2 * n + 1]);
    }
  }
}

TEST_CASE("subset tasks renumber labels and keep the split") {
  const auto dir = temp_dir("subset");
  generate_dataset(small_config(), dir);
  const auto data = Dataset::open(dir);
  const std::vector<std::size_t> classes{2, 0};
  const auto t = subset_task(data, classes);
  CHECK(t.num_classes == 2);
  CHECK(t.emitter_ids == std::vector<std::uint64_t>{2, 0});
  CHECK(t.test.size() == 8);
  for (auto i : t.train) CHECK(t.label(i) == (data.class_of(i) == 2 ? 0u : 1u));
  const auto full = full_task(data);
  for (auto i : full.train)
    if (data.class_of(i) == 1) CHECK_THROWS_AS(t.label(i), DatasetError);
  const std::vector<std::size_t> dup{1, 1};
  CHECK_THROWS_AS(subset_task(data, dup), DatasetError);
  const std::vector<std::size_t> missing{5};
  CHECK_THROWS_AS(subset_task(data, missing), DatasetError);
}
