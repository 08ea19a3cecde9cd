#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "burstnet/model.hpp"
#include "burstnet/network_spec.hpp"
#include "burstnet/tensor.hpp"

namespace burstnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorRecord {
  std::string name;
  std::variant<Tensor<float>, Tensor<double>> value;

  const Shape& shape() const;
  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

// File layout (all integers little-endian):
//   "BNETCKPT" | u32 version | u32 len + canonical spec text | u64 init_seed
//   | u32 n + parameter records | u32 n + velocity records | u64 iteration
//   | u32 len + rng state | u32 len + metadata JSON | u64 FNV-1a of all prior bytes
// record: u32 len + name | u8 dtype (1 = f32, 2 = f64) | u32 rank | u64 dims | raw data
struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  NetworkSpec spec;
  std::uint64_t init_seed = 0;
  std::vector<TensorRecord> parameters;  // every parameter and buffer, model order
  std::vector<TensorRecord> velocity;    // momentum buffers of trainable parameters
  std::uint64_t iteration = 0;
  std::string rng_state;
  std::string metadata = "{}";

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

// Atomic write (temporary file then rename).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <class T>
Checkpoint make_checkpoint(const Model<T>& model, std::span<const Tensor<T>> velocity, std::uint64_t iteration,
                           std::string rng_state, std::string metadata);

// Rebuilds the model from the embedded spec and copies every stored tensor.
template <class T>
Model<T> restore_model(const Checkpoint& ckpt);

// Velocity buffers aligned with the model's trainable parameters; zeros when
// the checkpoint carries none.
template <class T>
std::vector<Tensor<T>> restore_velocity(const Checkpoint& ckpt, const Model<T>& model);

}  // namespace burstnet
