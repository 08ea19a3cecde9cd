#include "burstnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "burstnet/hash.hpp"

namespace burstnet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[9] = "BNETCKPT";
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;

class Writer {
 public:
  template <class U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof v);
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size())
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what + " at byte offset " +
                            std::to_string(pos_));
  }
  template <class U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  void get_bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    std::string s(n, '\0');
    get_bytes(s.data(), n, what);
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_record(Writer& w, const TensorRecord& r) {
  w.put_string(r.name);
  std::visit(
      [&](const auto& t) {
        using T = typename std::decay_t<decltype(t)>::value_type;
        w.put(std::is_same_v<T, float> ? kDtypeF32 : kDtypeF64);
        w.put(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) w.put(static_cast<std::uint64_t>(d));
        w.put_bytes(t.data(), t.size() * sizeof(T));
      },
      r.value);
}

template <class T>
Tensor<T> read_tensor(Reader& r, const Shape& shape) {
  std::vector<T> data(shape_numel(shape));
  r.get_bytes(data.data(), data.size() * sizeof(T), "tensor data");
  return Tensor<T>(shape, std::move(data));
}

TensorRecord get_record(Reader& r) {
  TensorRecord rec;
  rec.name = r.get_string("record name");
  const auto dtype = r.get<std::uint8_t>("dtype");
  const auto rank = r.get<std::uint32_t>("rank");
  if (rank == 0 || rank > 8) throw CheckpointError("record '" + rec.name + "' has invalid rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = static_cast<std::size_t>(r.get<std::uint64_t>("dimension"));
    if (d == 0 || d > (std::size_t{1} << 32))
      throw CheckpointError("record '" + rec.name + "' has invalid dimension " + std::to_string(d));
  }
  if (dtype == kDtypeF32)
    rec.value = read_tensor<float>(r, shape);
  else if (dtype == kDtypeF64)
    rec.value = read_tensor<double>(r, shape);
  else
    throw CheckpointError("record '" + rec.name + "' has unknown dtype tag " + std::to_string(dtype));
  return rec;
}

template <class T>
const Tensor<T>& record_as(const TensorRecord& r) {
  if (const auto* t = std::get_if<Tensor<T>>(&r.value)) return *t;
  throw CheckpointError("record '" + r.name + "' has the wrong dtype for this model");
}

}  // namespace

const Shape& TensorRecord::shape() const {
  return std::visit([](const auto& t) -> const Shape& { return t.shape(); }, value);
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  Writer w;
  w.put_bytes(kMagic, 8);
  w.put(c.format_version);
  w.put_string(to_canonical_text(c.spec));
  w.put(c.init_seed);
  w.put(static_cast<std::uint32_t>(c.parameters.size()));
  for (const auto& r : c.parameters) put_record(w, r);
  w.put(static_cast<std::uint32_t>(c.velocity.size()));
  for (const auto& r : c.velocity) put_record(w, r);
  w.put(c.iteration);
  w.put_string(c.rng_state);
  w.put_string(c.metadata);
  Fnv1a h;
  h.update(w.out.data(), w.out.size());
  w.put(h.digest());
  return std::move(w.out);
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[8];
  r.get_bytes(magic, 8, "magic");
  if (std::memcmp(magic, kMagic, 8) != 0) throw CheckpointError("not a checkpoint file (bad magic)");
  Checkpoint c;
  c.format_version = r.get<std::uint32_t>("format version");
  if (c.format_version != kCheckpointVersion)
    throw CheckpointError("checkpoint format_version " + std::to_string(c.format_version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  const auto spec_text = r.get_string("network spec");
  try {
    c.spec = spec_from_text(spec_text);
  } catch (const SpecError& e) {
    throw CheckpointError(std::string("checkpoint spec is invalid: ") + e.what());
  }
  c.init_seed = r.get<std::uint64_t>("init seed");
  const auto n_params = r.get<std::uint32_t>("parameter count");
  for (std::uint32_t i = 0; i < n_params; ++i) c.parameters.push_back(get_record(r));
  const auto n_vel = r.get<std::uint32_t>("velocity count");
  for (std::uint32_t i = 0; i < n_vel; ++i) c.velocity.push_back(get_record(r));
  c.iteration = r.get<std::uint64_t>("iteration");
  c.rng_state = r.get_string("rng state");
  c.metadata = r.get_string("metadata");
  const std::size_t body = r.pos();
  const auto stored = r.get<std::uint64_t>("checksum");
  if (r.pos() != bytes.size())
    throw CheckpointError("checkpoint has " + std::to_string(bytes.size() - r.pos()) + " trailing bytes");
  Fnv1a h;
  h.update(bytes.data(), body);
  if (h.digest() != stored) throw CheckpointError("checkpoint checksum mismatch");

  // Shape consistency against the embedded spec.
  const Model<float> reference(c.spec, 0);
  const auto params = reference.parameters();
  if (params.size() != c.parameters.size())
    throw CheckpointError("checkpoint holds " + std::to_string(c.parameters.size()) + " tensors; its spec defines " +
                          std::to_string(params.size()));
  std::size_t trainable = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != c.parameters[i].name)
      throw CheckpointError("checkpoint tensor " + std::to_string(i) + " is '" + c.parameters[i].name +
                            "', spec expects '" + params[i].name + "'");
    if (params[i].value.shape() != c.parameters[i].shape())
      throw CheckpointError("tensor '" + params[i].name + "' has shape " + shape_string(c.parameters[i].shape()) +
                            ", spec expects " + shape_string(params[i].value.shape()));
    if (params[i].trainable) {
      if (!c.velocity.empty()) {
        if (trainable >= c.velocity.size() || c.velocity[trainable].name != params[i].name ||
            c.velocity[trainable].shape() != params[i].value.shape())
          throw CheckpointError("velocity buffer for '" + params[i].name + "' is missing or misshapen");
      }
      ++trainable;
    }
  }
  if (!c.velocity.empty() && c.velocity.size() != trainable)
    throw CheckpointError("checkpoint holds " + std::to_string(c.velocity.size()) + " velocity buffers for " +
                          std::to_string(trainable) + " trainable tensors");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

template <class T>
Checkpoint make_checkpoint(const Model<T>& model, std::span<const Tensor<T>> velocity, std::uint64_t iteration,
                           std::string rng_state, std::string metadata) {
  Checkpoint c;
  c.spec = model.spec();
  c.init_seed = model.init_seed();
  std::vector<std::string> trainable_names;
  for (const auto& p : model.parameters()) {
    c.parameters.push_back({p.name, p.value});
    if (p.trainable) trainable_names.push_back(p.name);
  }
  if (!velocity.empty()) {
    if (velocity.size() != trainable_names.size())
      throw CheckpointError("velocity has " + std::to_string(velocity.size()) + " buffers for " +
                            std::to_string(trainable_names.size()) + " trainable tensors");
    for (std::size_t i = 0; i < velocity.size(); ++i) c.velocity.push_back({trainable_names[i], velocity[i]});
  }
  c.iteration = iteration;
  c.rng_state = std::move(rng_state);
  c.metadata = std::move(metadata);
  return c;
}

template <class T>
Model<T> restore_model(const Checkpoint& ckpt) {
  Model<T> model(ckpt.spec, ckpt.init_seed);
  auto params = model.parameters();
  if (params.size() != ckpt.parameters.size())
    throw CheckpointError("checkpoint tensor count does not match its spec");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = record_as<T>(ckpt.parameters[i]);
    if (params[i].name != ckpt.parameters[i].name || params[i].value.shape() != src.shape())
      throw CheckpointError("checkpoint tensor '" + ckpt.parameters[i].name + "' does not match the model");
    params[i].value = src;
  }
  return model;
}

template <class T>
std::vector<Tensor<T>> restore_velocity(const Checkpoint& ckpt, const Model<T>& model) {
  std::vector<Tensor<T>> v;
  std::size_t k = 0;
  for (const auto& p : model.parameters()) {
    if (!p.trainable) continue;
    if (ckpt.velocity.empty()) {
      v.emplace_back(p.value.shape());
    } else {
      const auto& rec = ckpt.velocity.at(k);
      if (rec.name != p.name || rec.shape() != p.value.shape())
        throw CheckpointError("velocity buffer '" + rec.name + "' does not match parameter '" + p.name + "'");
      v.push_back(record_as<T>(rec));
    }
    ++k;
  }
  return v;
}

template Checkpoint make_checkpoint<float>(const Model<float>&, std::span<const Tensor<float>>, std::uint64_t,
                                           std::string, std::string);
template Checkpoint make_checkpoint<double>(const Model<double>&, std::span<const Tensor<double>>, std::uint64_t,
                                            std::string, std::string);
template Model<float> restore_model<float>(const Checkpoint&);
template Model<double> restore_model<double>(const Checkpoint&);
template std::vector<Tensor<float>> restore_velocity<float>(const Checkpoint&, const Model<float>&);
template std::vector<Tensor<double>> restore_velocity<double>(const Checkpoint&, const Model<double>&);

}  // namespace burstnet
