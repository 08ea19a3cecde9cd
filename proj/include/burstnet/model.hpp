#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "burstnet/network_spec.hpp"
#include "burstnet/ops.hpp"
#include "burstnet/tensor.hpp"

namespace burstnet {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;          // same shape as value; empty for buffers
  bool trainable = true;   // false for batch-norm running statistics
};

// The Inception-residual classifier:
//   stem conv -> BN -> ReLU -> maxpool -> stages of blocks -> global avgpool -> fc
// Parameters are stored in construction order; names are stable and used by
// checkpoints.
template <class T>
class Model {
 public:
  Model(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::uint64_t init_seed() const noexcept { return seed_; }

  std::span<Parameter<T>> parameters() noexcept { return params_; }
  std::span<const Parameter<T>> parameters() const noexcept { return params_; }
  Parameter<T>& parameter(std::string_view name);
  const Parameter<T>& parameter(std::string_view name) const;

  // batch: [N x input_channels x input_length] -> logits [N x num_classes].
  // Train mode updates batch-norm running statistics and records the trace
  // consumed by the next backward().
  Tensor<T> forward(const Tensor<T>& batch, ops::Mode mode);

  // Writes parameter gradients for the last train-mode forward. Valid once per
  // forward; returns the gradient with respect to the input batch.
  Tensor<T> backward(const Tensor<T>& dlogits, bool need_input_grad = false);

  void zero_grad();

  // Fresh fc head of width `num_classes`; every other parameter is kept.
  void replace_head(std::size_t num_classes, std::uint64_t seed);

  // FNV-1a over names and raw bytes of every parameter and buffer.
  std::uint64_t checksum() const;

  // Hash of the ReLU masks and maxpool winners of the last train-mode
  // forward. Two forwards with equal signatures traverse the same linear
  // region of the network.
  std::uint64_t activation_signature() const;

  std::size_t feature_dim() const noexcept { return feature_dim_; }

  struct ConvUnit {
    std::size_t weight = 0, bias = 0, stride = 1;
  };
  struct BnUnit {
    std::size_t gamma = 0, beta = 0, mean = 0, var = 0;
  };
  struct BlockUnit {
    std::vector<ConvUnit> branch_conv;
    std::vector<BnUnit> branch_bn;
    std::vector<std::size_t> branch_channels;
    ConvUnit merge_conv;
    BnUnit merge_bn;
    std::optional<ConvUnit> shortcut_conv;
    std::optional<BnUnit> shortcut_bn;
  };

 private:
  struct BlockTrace {
    Tensor<T> input;
    std::vector<ops::BatchNormCache<T>> branch_bn;
    std::vector<Tensor<T>> branch_out;
    Tensor<T> concat;
    ops::BatchNormCache<T> merge_bn;
    ops::BatchNormCache<T> shortcut_bn;
    Tensor<T> output;
  };
  struct Trace {
    Tensor<T> input;
    ops::BatchNormCache<T> stem_bn;
    Tensor<T> stem_out;
    std::vector<std::size_t> pool_argmax;
    std::vector<BlockTrace> blocks;
    Shape feature_map_shape;
    Tensor<T> features;
  };

  std::size_t add_param(std::string name, Shape shape, bool trainable);
  ConvUnit add_conv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t kernel,
                    std::size_t stride);
  BnUnit add_bn(const std::string& prefix, std::size_t channels);

  Tensor<T> conv_forward(const ConvUnit& u, const Tensor<T>& x) const;
  Tensor<T> bn_forward(const BnUnit& u, const Tensor<T>& x, ops::Mode mode, ops::BatchNormCache<T>* cache);
  Tensor<T> block_forward(const BlockUnit& b, Tensor<T> x, ops::Mode mode, BlockTrace* trace);
  Tensor<T> conv_backward(const ConvUnit& u, const Tensor<T>& x, const Tensor<T>& dy, bool need_input);
  Tensor<T> bn_backward(const BnUnit& u, const ops::BatchNormCache<T>& cache, const Tensor<T>& dy);
  Tensor<T> block_backward(const BlockUnit& b, BlockTrace& trace, const Tensor<T>& dy);

  NetworkSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<Parameter<T>> params_;
  ConvUnit stem_conv_;
  BnUnit stem_bn_;
  std::vector<BlockUnit> blocks_;
  std::size_t fc_weight_ = 0, fc_bias_ = 0;
  std::size_t feature_dim_ = 0;
  std::optional<Trace> trace_;
};

template <class T>
Model<T> build_model(const NetworkSpec& spec, std::uint64_t seed) {
  return Model<T>(spec, seed);
}

extern template class Model<float>;
extern template class Model<double>;

}  // namespace burstnet
