#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "burstnet/dataset.hpp"
#include "burstnet/hash.hpp"
#include "shard_format.hpp"

namespace burstnet::dataset {

namespace {

constexpr std::uint64_t kSplitTag = 0x53504c4954ULL;
constexpr std::uint64_t kShuffleTag = 0x5348554646ULL;

template <class U>
U read_le(const std::vector<char>& bytes, std::size_t offset) {
  U v;
  std::memcpy(&v, bytes.data() + offset, sizeof v);
  return v;
}

}  // namespace

Dataset Dataset::open(const std::filesystem::path& dir) {
  Dataset d;
  d.manifest_ = read_manifest(dir);
  const auto& m = d.manifest_;
  const std::size_t len = m.config.sample_len;
  const std::size_t record_floats = 2 * len;
  d.data_.resize(m.total_samples() * record_floats);
  d.class_of_.resize(m.total_samples());
  for (const auto& s : m.shards) {
    const auto path = dir / s.path;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open shard " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < kShardHeaderBytes)
      throw DatasetError("shard " + s.path + " truncated at byte offset " + std::to_string(bytes.size()) +
                         " (header needs " + std::to_string(kShardHeaderBytes) + ")");
    if (std::memcmp(bytes.data(), kShardMagic, 8) != 0)
      throw DatasetError("shard " + s.path + " has a bad magic at byte offset 0");
    if (read_le<std::uint32_t>(bytes, 8) != kShardVersion)
      throw DatasetError("shard " + s.path + " has unsupported version at byte offset 8");
    if (read_le<std::uint32_t>(bytes, 12) != kShardDtypeF32)
      throw DatasetError("shard " + s.path + " has unsupported dtype at byte offset 12");
    if (read_le<std::uint64_t>(bytes, 16) != len)
      throw DatasetError("shard " + s.path + " sample length at byte offset 16 disagrees with the manifest");
    if (read_le<std::uint64_t>(bytes, 24) != s.count)
      throw DatasetError("shard " + s.path + " record count at byte offset 24 disagrees with the manifest");
    const std::size_t expected = kShardHeaderBytes + s.count * record_floats * sizeof(float);
    if (bytes.size() != expected) {
      const std::size_t complete = (bytes.size() - kShardHeaderBytes) / (record_floats * sizeof(float));
      throw DatasetError("shard " + s.path + " is " + std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(expected) + "; record " + std::to_string(complete) + " at byte offset " +
                         std::to_string(kShardHeaderBytes + complete * record_floats * sizeof(float)) +
                         " is incomplete");
    }
    Fnv1a h;
    h.update(bytes.data(), bytes.size());
    if (h.digest() != s.checksum) throw DatasetError("shard " + s.path + " fails its checksum");
    std::memcpy(d.data_.data() + s.first_index * record_floats, bytes.data() + kShardHeaderBytes,
                s.count * record_floats * sizeof(float));
    std::fill_n(d.class_of_.begin() + static_cast<std::ptrdiff_t>(s.first_index), s.count, s.class_id);
  }
  return d;
}

std::span<const float> Dataset::sample(std::size_t index) const {
  if (index >= size()) throw DatasetError("sample index " + std::to_string(index) + " out of range");
  const std::size_t n = 2 * sample_len();
  return std::span<const float>(data_).subspan(index * n, n);
}

Split split_dataset(const DatasetManifest& m) {
  Split split;
  std::size_t first = 0;
  for (std::size_t c = 0; c < m.per_class_counts.size(); ++c) {
    const std::size_t count = m.per_class_counts[c];
    if (count < m.config.test_per_class + 1)
      throw DatasetError("class " + std::to_string(c) + " has " + std::to_string(count) + " samples; needs at least " +
                         std::to_string(m.config.test_per_class + 1));
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), first);
    std::mt19937_64 rng(derive_seed(m.config.seed, {kSplitTag, c}));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m.config.test_per_class));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(m.config.test_per_class), idx.end());
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m.config.test_per_class));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(m.config.test_per_class), idx.end());
    first += count;
  }
  return split;
}

std::size_t TaskView::label(std::size_t sample_index) const {
  const auto l = label_of_class.at(dataset->class_of(sample_index));
  if (l == kExcluded) throw DatasetError("sample " + std::to_string(sample_index) + " is not part of this task");
  return l;
}

TaskView full_task(const Dataset& data) {
  std::vector<std::size_t> all(data.manifest().config.num_classes);
  std::iota(all.begin(), all.end(), 0);
  return subset_task(data, all);
}

TaskView subset_task(const Dataset& data, std::span<const std::size_t> class_ids) {
  const auto& m = data.manifest();
  TaskView t;
  t.dataset = &data;
  t.label_of_class.assign(m.config.num_classes, TaskView::kExcluded);
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    const auto c = class_ids[i];
    if (c >= m.config.num_classes)
      throw DatasetError("class " + std::to_string(c) + " does not exist (dataset has " +
                         std::to_string(m.config.num_classes) + ")");
    if (t.label_of_class[c] != TaskView::kExcluded) throw DatasetError("class " + std::to_string(c) + " listed twice");
    t.label_of_class[c] = i;
    t.emitter_ids.push_back(m.emitter_ids[c]);
  }
  t.num_classes = class_ids.size();
  const auto split = split_dataset(m);
  for (auto i : split.train)
    if (t.label_of_class[data.class_of(i)] != TaskView::kExcluded) t.train.push_back(i);
  for (auto i : split.test)
    if (t.label_of_class[data.class_of(i)] != TaskView::kExcluded) t.test.push_back(i);
  return t;
}

Batch make_batch(const TaskView& task, std::span<const std::size_t> indices) {
  const std::size_t len = task.dataset->sample_len();
  if (indices.empty()) throw DatasetError("empty batch");
  Batch b;
  b.inputs = Tensor<float>({indices.size(), 2, len});
  b.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto s = task.dataset->sample(indices[k]);
    float* re = b.inputs.data() + k * 2 * len;
    float* im = re + len;
    for (std::size_t n = 0; n < len; ++n) {
      re[n] = s[2 * n];
      im[n] = s[2 * n + 1];
    }
    b.labels.push_back(task.label(indices[k]));
  }
  return b;
}

void add_awgn_to_row(Tensor<float>& inputs, std::size_t row, double snr_db, std::uint64_t seed) {
  const std::size_t len = inputs.shape()[2];
  float* re = inputs.data() + row * 2 * len;
  float* im = re + len;
  signal::IQBurst burst;
  burst.samples.resize(len);
  for (std::size_t n = 0; n < len; ++n) burst.samples[n] = {re[n], im[n]};
  burst = signal::add_awgn(burst, snr_db, seed);
  for (std::size_t n = 0; n < len; ++n) {
    re[n] = static_cast<float>(burst.samples[n].real());
    im[n] = static_cast<float>(burst.samples[n].imag());
  }
}

BatchIterator::BatchIterator(std::vector<std::size_t> indices, std::size_t batch_size, std::uint64_t shuffle_seed,
                             bool shuffle)
    : indices_(std::move(indices)), batch_size_(batch_size), seed_(shuffle_seed), shuffle_(shuffle) {
  if (batch_size_ == 0) throw DatasetError("batch size must be positive");
  if (indices_.empty()) throw DatasetError("cannot iterate an empty index list");
  reshuffle();
}

void BatchIterator::reshuffle() {
  order_ = indices_;
  if (shuffle_) {
    std::mt19937_64 rng(derive_seed(seed_, {kShuffleTag, epoch_}));
    std::shuffle(order_.begin(), order_.end(), rng);
  }
}

std::size_t BatchIterator::batches_per_epoch() const noexcept {
  return (indices_.size() + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> BatchIterator::next() {
  if (cursor_ >= order_.size()) {
    ++epoch_;
    cursor_ = 0;
    reshuffle();
  }
  const std::size_t end = std::min(cursor_ + batch_size_, order_.size());
  std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return out;
}

Batch BatchIterator::next_batch(const TaskView& task) {
  const auto idx = next();
  return make_batch(task, idx);
}

std::string BatchIterator::state() const {
  return "batch_iterator v1 " + std::to_string(epoch_) + " " + std::to_string(cursor_);
}

void BatchIterator::restore(const std::string& state) {
  std::istringstream in(state);
  std::string tag, version;
  std::size_t epoch = 0, cursor = 0;
  if (!(in >> tag >> version >> epoch >> cursor) || tag != "batch_iterator" || version != "v1" ||
      cursor > indices_.size())
    throw DatasetError("malformed batch iterator state '" + state + "'");
  epoch_ = epoch;
  cursor_ = cursor;
  reshuffle();
}

}  // namespace burstnet::dataset
