#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "burstnet/tensor.hpp"

// Layer primitives for the 1D classifier. Activations are laid out
// [batch x channels x length]; every op has a paired backward. The functions
// in this namespace are the OpenMP kernels; `burstnet::reference` holds the
// serial definitions they are tested against.
namespace burstnet::ops {

enum class Mode { train, eval };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

// "Same" padding: output length ceil(L / stride), extra zero on the right.
struct Padding {
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t out_length = 0;
};
Padding same_padding(std::size_t length, std::size_t kernel, std::size_t stride);

template <class T>
struct Conv1dGrads {
  Tensor<T> input;  // empty when not requested
  Tensor<T> weights;
  Tensor<T> bias;
};

// x: [N x C_in x L], w: [C_out x C_in x K], b: [C_out] -> [N x C_out x ceil(L/stride)]
template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride);

template <class T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                               const Tensor<T>& dy, bool need_input_grad = true);

// Caller-owned running statistics. Empty spans mean "never populated".
template <class T>
struct RunningStats {
  std::span<T> mean;
  std::span<T> var;
};

template <class T>
struct BatchNormCache {
  Tensor<T> normalized;         // x_hat
  std::vector<double> inv_std;  // per channel
  Mode mode = Mode::train;
};

template <class T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

// Train mode normalizes with batch statistics and folds them into `stats`
// (stats = momentum * stats + (1 - momentum) * batch, unbiased variance).
// Eval mode reads `stats` only. `cache` may be null when no backward follows.
template <class T>
Tensor<T> batchnorm1d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Mode mode,
                      RunningStats<T> stats, BatchNormCache<T>* cache,
                      double epsilon = kBatchNormEpsilon, double momentum = kBatchNormMomentum);

template <class T>
BatchNormGrads<T> batchnorm1d_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                       const Tensor<T>& dy);

template <class T>
Tensor<T> relu(const Tensor<T>& x);

// Gradient is passed where the forward output is positive (input > 0).
template <class T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& dy);

template <class T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// x: [N x C x L] -> [N x C x ((L - window) / stride + 1)]; ties pick the lowest index.
template <class T>
MaxPoolResult<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride);

template <class T>
Tensor<T> maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                             const Tensor<T>& dy);

// x: [N x C x L] -> [N x C]
template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x);

template <class T>
Tensor<T> global_avgpool_backward(const Shape& input_shape, const Tensor<T>& dy);

template <class T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

// x: [N x D], w: [D x M], b: [M] -> [N x M]
template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

// Stacks [N x C_i x L] inputs along the channel axis, preserving order.
template <class T>
Tensor<T> depth_concat(std::span<const Tensor<T>> inputs);

// Inverse of depth_concat: splits dy back into per-branch channel slices.
template <class T>
std::vector<Tensor<T>> depth_concat_backward(const Tensor<T>& dy,
                                             std::span<const std::size_t> channels);

template <class T>
Tensor<T> residual_add(const Tensor<T>& main, const Tensor<T>& shortcut);

template <class T>
struct SoftmaxCrossEntropy {
  double loss = 0.0;       // mean negative log-likelihood
  Tensor<T> probabilities;  // [N x M]
};

template <class T>
SoftmaxCrossEntropy<T> softmax_crossentropy(const Tensor<T>& logits,
                                            std::span<const std::size_t> labels);

// (softmax - one_hot) / N
template <class T>
Tensor<T> softmax_crossentropy_backward(const Tensor<T>& probabilities,
                                        std::span<const std::size_t> labels);

}  // namespace burstnet::ops

namespace burstnet::reference {

// Direct serial definitions with double accumulation.

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride);

template <class T>
ops::Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                                    const Tensor<T>& dy);

template <class T>
Tensor<T> batchnorm1d_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            double epsilon = ops::kBatchNormEpsilon);

template <class T>
ops::BatchNormGrads<T> batchnorm1d_train_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                                                  const Tensor<T>& dy,
                                                  double epsilon = ops::kBatchNormEpsilon);

template <class T>
Tensor<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride);

template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x);

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <class T>
ops::DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

}  // namespace burstnet::reference
