#include "burstnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "burstnet/gemm.hpp"

namespace burstnet::ops {
namespace {

using std::ptrdiff_t;
using std::size_t;

// Per-thread scratch buffers reused across calls; conv1d needs up to three.
template <class T>
std::vector<T>& scratch(int slot, size_t n) {
  thread_local std::vector<T> buffers[3];
  auto& buf = buffers[slot];
  if (buf.size() < n) buf.resize(n);
  return buf;
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank)
    throw std::invalid_argument(std::string(op) + ": " + what + " must have rank " +
                                std::to_string(rank) + ", got " + shape_string(s));
}

template <class T>
void im2col(const Tensor<T>& x, size_t kernel, size_t stride, const Padding& pad, T* col) {
  const size_t n_batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const size_t out_len = pad.out_length;
  const size_t cols = n_batch * out_len;
  const auto rows = static_cast<long long>(channels * kernel);
#pragma omp parallel for schedule(static)
  for (long long row = 0; row < rows; ++row) {
    const size_t ci = static_cast<size_t>(row) / kernel;
    const ptrdiff_t shift = static_cast<ptrdiff_t>(static_cast<size_t>(row) % kernel) -
                            static_cast<ptrdiff_t>(pad.left);
    T* dst = col + static_cast<size_t>(row) * cols;
    for (size_t n = 0; n < n_batch; ++n) {
      const T* src = x.data() + (n * channels + ci) * length;
      T* d = dst + n * out_len;
      for (size_t l = 0; l < out_len; ++l) {
        const ptrdiff_t j = static_cast<ptrdiff_t>(l * stride) + shift;
        d[l] = (j >= 0 && j < static_cast<ptrdiff_t>(length)) ? src[j] : T{0};
      }
    }
  }
}

template <class T>
void check_conv_shapes(const Tensor<T>& x, const Tensor<T>& w, size_t stride) {
  require_rank(x.shape(), 3, "conv1d", "input");
  require_rank(w.shape(), 3, "conv1d", "weights");
  if (x.dim(1) != w.dim(1))
    throw std::invalid_argument("conv1d: input " + shape_string(x.shape()) + " has " +
                                std::to_string(x.dim(1)) + " channels but weights " +
                                shape_string(w.shape()) + " expect " + std::to_string(w.dim(1)));
  if (stride != 1 && stride != 2)
    throw std::invalid_argument("conv1d: stride must be 1 or 2, got " + std::to_string(stride));
}

}  // namespace

Padding same_padding(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (kernel == 0 || stride == 0) throw std::invalid_argument("same_padding: kernel and stride must be >= 1");
  Padding p;
  p.out_length = (length + stride - 1) / stride;
  const std::size_t needed = (p.out_length - 1) * stride + kernel;
  const std::size_t total = needed > length ? needed - length : 0;
  p.left = total / 2;
  p.right = total - p.left;
  return p;
}

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride) {
  check_conv_shapes(x, w, stride);
  const size_t n_batch = x.dim(0), c_in = x.dim(1);
  const size_t c_out = w.dim(0), kernel = w.dim(2);
  if (b.size() != c_out)
    throw std::invalid_argument("conv1d: bias " + shape_string(b.shape()) + " does not match weights " +
                                shape_string(w.shape()));
  const Padding pad = same_padding(x.dim(2), kernel, stride);
  const size_t out_len = pad.out_length;
  const size_t cols = n_batch * out_len;
  const size_t rows = c_in * kernel;

  auto& col = scratch<T>(0, rows * cols);
  im2col(x, kernel, stride, pad, col.data());
  auto& prod = scratch<T>(1, c_out * cols);
  gemm<T>(Transpose::no, Transpose::no, c_out, cols, rows, T{1}, w.data(), rows, col.data(), cols,
          T{0}, prod.data(), cols);

  Tensor<T> y({n_batch, c_out, out_len});
  const auto planes = static_cast<long long>(n_batch * c_out);
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < planes; ++p) {
    const size_t n = static_cast<size_t>(p) / c_out, co = static_cast<size_t>(p) % c_out;
    const T* src = prod.data() + co * cols + n * out_len;
    T* dst = y.data() + static_cast<size_t>(p) * out_len;
    const T bias = b[co];
    for (size_t l = 0; l < out_len; ++l) dst[l] = src[l] + bias;
  }
  return y;
}

template <class T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                               const Tensor<T>& dy, bool need_input_grad) {
  check_conv_shapes(x, w, stride);
  const size_t n_batch = x.dim(0), c_in = x.dim(1), length = x.dim(2);
  const size_t c_out = w.dim(0), kernel = w.dim(2);
  const Padding pad = same_padding(length, kernel, stride);
  const size_t out_len = pad.out_length;
  if (dy.shape() != Shape{n_batch, c_out, out_len})
    throw std::invalid_argument("conv1d_backward: upstream gradient " + shape_string(dy.shape()) +
                                " does not match output [" + std::to_string(n_batch) + " x " +
                                std::to_string(c_out) + " x " + std::to_string(out_len) + "]");
  const size_t cols = n_batch * out_len;
  const size_t rows = c_in * kernel;

  auto& dprod = scratch<T>(1, c_out * cols);
  Conv1dGrads<T> g;
  g.bias = Tensor<T>({c_out});
#pragma omp parallel for schedule(static)
  for (long long co_l = 0; co_l < static_cast<long long>(c_out); ++co_l) {
    const size_t co = static_cast<size_t>(co_l);
    double sum = 0.0;
    for (size_t n = 0; n < n_batch; ++n) {
      const T* src = dy.data() + (n * c_out + co) * out_len;
      T* dst = dprod.data() + co * cols + n * out_len;
      for (size_t l = 0; l < out_len; ++l) {
        dst[l] = src[l];
        sum += src[l];
      }
    }
    g.bias[co] = static_cast<T>(sum);
  }

  auto& col = scratch<T>(0, rows * cols);
  im2col(x, kernel, stride, pad, col.data());
  g.weights = Tensor<T>(w.shape());
  gemm<T>(Transpose::no, Transpose::yes, c_out, rows, cols, T{1}, dprod.data(), cols, col.data(),
          cols, T{0}, g.weights.data(), rows);

  if (need_input_grad) {
    auto& dcol = scratch<T>(2, rows * cols);
    gemm<T>(Transpose::yes, Transpose::no, rows, cols, c_out, T{1}, w.data(), rows, dprod.data(),
            cols, T{0}, dcol.data(), cols);
    g.input = Tensor<T>(x.shape());
    const auto planes = static_cast<long long>(n_batch * c_in);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < planes; ++p) {
      const size_t n = static_cast<size_t>(p) / c_in, ci = static_cast<size_t>(p) % c_in;
      T* dst = g.input.data() + static_cast<size_t>(p) * length;
      for (size_t k = 0; k < kernel; ++k) {
        const T* src = dcol.data() + (ci * kernel + k) * cols + n * out_len;
        const ptrdiff_t shift = static_cast<ptrdiff_t>(k) - static_cast<ptrdiff_t>(pad.left);
        for (size_t l = 0; l < out_len; ++l) {
          const ptrdiff_t j = static_cast<ptrdiff_t>(l * stride) + shift;
          if (j >= 0 && j < static_cast<ptrdiff_t>(length)) dst[j] += src[l];
        }
      }
    }
  }
  return g;
}

template <class T>
Tensor<T> batchnorm1d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Mode mode,
                      RunningStats<T> stats, BatchNormCache<T>* cache, double epsilon,
                      double momentum) {
  require_rank(x.shape(), 3, "batchnorm1d", "input");
  const size_t n_batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  if (gamma.size() != channels || beta.size() != channels)
    throw std::invalid_argument("batchnorm1d: gamma/beta " + shape_string(gamma.shape()) + "/" +
                                shape_string(beta.shape()) + " do not match input " +
                                shape_string(x.shape()));
  const bool have_stats = stats.mean.size() == channels && stats.var.size() == channels;
  if (mode == Mode::eval && !have_stats)
    throw std::invalid_argument("batchnorm1d: eval mode requires populated running statistics");
  const size_t count = n_batch * length;
  if (mode == Mode::train && count < 2)
    throw std::invalid_argument("batchnorm1d: train mode needs at least 2 values per channel, got " +
                                std::to_string(count));

  Tensor<T> y(x.shape());
  if (cache) {
    cache->normalized = Tensor<T>(x.shape());
    cache->inv_std.assign(channels, 0.0);
    cache->mode = mode;
  }
#pragma omp parallel for schedule(static)
  for (long long c_l = 0; c_l < static_cast<long long>(channels); ++c_l) {
    const size_t c = static_cast<size_t>(c_l);
    double mean, var;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (size_t n = 0; n < n_batch; ++n) {
        const T* src = x.data() + (n * channels + c) * length;
        for (size_t l = 0; l < length; ++l) sum += src[l];
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (size_t n = 0; n < n_batch; ++n) {
        const T* src = x.data() + (n * channels + c) * length;
        for (size_t l = 0; l < length; ++l) {
          const double d = src[l] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      if (have_stats) {
        const double unbiased = sq / static_cast<double>(count - 1);
        stats.mean[c] = static_cast<T>(momentum * stats.mean[c] + (1.0 - momentum) * mean);
        stats.var[c] = static_cast<T>(momentum * stats.var[c] + (1.0 - momentum) * unbiased);
      }
    } else {
      mean = stats.mean[c];
      var = stats.var[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + epsilon);
    const double g = gamma[c], bt = beta[c];
    for (size_t n = 0; n < n_batch; ++n) {
      const size_t off = (n * channels + c) * length;
      const T* src = x.data() + off;
      T* dst = y.data() + off;
      T* xh = cache ? cache->normalized.data() + off : nullptr;
      for (size_t l = 0; l < length; ++l) {
        const double h = (src[l] - mean) * inv_std;
        if (xh) xh[l] = static_cast<T>(h);
        dst[l] = static_cast<T>(g * h + bt);
      }
    }
    if (cache) cache->inv_std[c] = inv_std;
  }
  return y;
}

template <class T>
BatchNormGrads<T> batchnorm1d_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                       const Tensor<T>& dy) {
  const Tensor<T>& xh = cache.normalized;
  if (dy.shape() != xh.shape())
    throw std::invalid_argument("batchnorm1d_backward: upstream gradient " + shape_string(dy.shape()) +
                                " does not match cached input " + shape_string(xh.shape()));
  const size_t n_batch = xh.dim(0), channels = xh.dim(1), length = xh.dim(2);
  const double count = static_cast<double>(n_batch * length);
  BatchNormGrads<T> g{Tensor<T>(xh.shape()), Tensor<T>({channels}), Tensor<T>({channels})};
#pragma omp parallel for schedule(static)
  for (long long c_l = 0; c_l < static_cast<long long>(channels); ++c_l) {
    const size_t c = static_cast<size_t>(c_l);
    double dbeta = 0.0, dgamma = 0.0;
    for (size_t n = 0; n < n_batch; ++n) {
      const size_t off = (n * channels + c) * length;
      for (size_t l = 0; l < length; ++l) {
        dbeta += dy[off + l];
        dgamma += static_cast<double>(dy[off + l]) * xh[off + l];
      }
    }
    g.beta[c] = static_cast<T>(dbeta);
    g.gamma[c] = static_cast<T>(dgamma);
    const double scale = gamma[c] * cache.inv_std[c];
    for (size_t n = 0; n < n_batch; ++n) {
      const size_t off = (n * channels + c) * length;
      for (size_t l = 0; l < length; ++l) {
        if (cache.mode == Mode::train) {
          g.input[off + l] = static_cast<T>(
              scale * (dy[off + l] - dbeta / count - xh[off + l] * dgamma / count));
        } else {
          g.input[off + l] = static_cast<T>(scale * dy[off + l]);
        }
      }
    }
  }
  return g;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const T* src = x.data();
  T* dst = y.data();
  const auto n = static_cast<long long>(x.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < n; ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
  return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& dy) {
  if (output.shape() != dy.shape())
    throw std::invalid_argument("relu_backward: shape mismatch " + shape_string(output.shape()) +
                                " vs " + shape_string(dy.shape()));
  Tensor<T> dx(dy.shape());
  const T* out = output.data();
  const T* g = dy.data();
  T* dst = dx.data();
  const auto n = static_cast<long long>(dy.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < n; ++i) dst[i] = out[i] > T{0} ? g[i] : T{0};
  return dx;
}

template <class T>
MaxPoolResult<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride) {
  require_rank(x.shape(), 3, "maxpool1d", "input");
  if (window == 0 || stride == 0) throw std::invalid_argument("maxpool1d: window and stride must be >= 1");
  const size_t length = x.dim(2);
  if (length < window)
    throw std::invalid_argument("maxpool1d: input length " + std::to_string(length) +
                                " is shorter than window " + std::to_string(window));
  const size_t planes = x.dim(0) * x.dim(1);
  const size_t out_len = (length - window) / stride + 1;
  MaxPoolResult<T> r{Tensor<T>({x.dim(0), x.dim(1), out_len}), std::vector<size_t>(planes * out_len)};
#pragma omp parallel for schedule(static)
  for (long long p_l = 0; p_l < static_cast<long long>(planes); ++p_l) {
    const size_t p = static_cast<size_t>(p_l);
    const T* src = x.data() + p * length;
    for (size_t o = 0; o < out_len; ++o) {
      size_t best = o * stride;
      for (size_t j = best + 1; j < o * stride + window; ++j)
        if (src[j] > src[best]) best = j;
      r.output[p * out_len + o] = src[best];
      r.argmax[p * out_len + o] = p * length + best;
    }
  }
  return r;
}

template <class T>
Tensor<T> maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                             const Tensor<T>& dy) {
  if (argmax.size() != dy.size())
    throw std::invalid_argument("maxpool1d_backward: argmax/gradient size mismatch");
  Tensor<T> dx(input_shape);
  const size_t out_len = dy.dim(2);
  const size_t planes = dy.dim(0) * dy.dim(1);
  // Windows of one plane may overlap; each plane is owned by one thread.
#pragma omp parallel for schedule(static)
  for (long long p_l = 0; p_l < static_cast<long long>(planes); ++p_l) {
    const size_t p = static_cast<size_t>(p_l);
    for (size_t o = 0; o < out_len; ++o) dx[argmax[p * out_len + o]] += dy[p * out_len + o];
  }
  return dx;
}

template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x) {
  require_rank(x.shape(), 3, "global_avgpool", "input");
  const size_t planes = x.dim(0) * x.dim(1), length = x.dim(2);
  Tensor<T> y({x.dim(0), x.dim(1)});
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(planes); ++p) {
    const T* src = x.data() + static_cast<size_t>(p) * length;
    double sum = 0.0;
    for (size_t l = 0; l < length; ++l) sum += src[l];
    y[static_cast<size_t>(p)] = static_cast<T>(sum / static_cast<double>(length));
  }
  return y;
}

template <class T>
Tensor<T> global_avgpool_backward(const Shape& input_shape, const Tensor<T>& dy) {
  require_rank(input_shape, 3, "global_avgpool_backward", "input shape");
  const size_t planes = input_shape[0] * input_shape[1], length = input_shape[2];
  if (dy.size() != planes)
    throw std::invalid_argument("global_avgpool_backward: gradient " + shape_string(dy.shape()) +
                                " does not match input " + shape_string(input_shape));
  Tensor<T> dx(input_shape);
  const T inv = static_cast<T>(1.0 / static_cast<double>(length));
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(planes); ++p) {
    T* dst = dx.data() + static_cast<size_t>(p) * length;
    const T g = dy[static_cast<size_t>(p)] * inv;
    for (size_t l = 0; l < length; ++l) dst[l] = g;
  }
  return dx;
}

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(x.shape(), 2, "dense", "input");
  require_rank(w.shape(), 2, "dense", "weights");
  if (x.dim(1) != w.dim(0) || b.size() != w.dim(1))
    throw std::invalid_argument("dense: input " + shape_string(x.shape()) + ", weights " +
                                shape_string(w.shape()) + " and bias " + shape_string(b.shape()) +
                                " do not agree");
  const size_t n = x.dim(0), d = x.dim(1), m = w.dim(1);
  Tensor<T> y({n, m});
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) y[i * m + j] = b[j];
  gemm<T>(Transpose::no, Transpose::no, n, m, d, T{1}, x.data(), d, w.data(), m, T{1}, y.data(), m);
  return y;
}

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
  const size_t n = x.dim(0), d = x.dim(1), m = w.dim(1);
  if (dy.shape() != Shape{n, m})
    throw std::invalid_argument("dense_backward: gradient " + shape_string(dy.shape()) +
                                " does not match output [" + std::to_string(n) + " x " +
                                std::to_string(m) + "]");
  DenseGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({m})};
  gemm<T>(Transpose::no, Transpose::yes, n, d, m, T{1}, dy.data(), m, w.data(), m, T{0},
          g.input.data(), d);
  gemm<T>(Transpose::yes, Transpose::no, d, m, n, T{1}, x.data(), d, dy.data(), m, T{0},
          g.weights.data(), m);
  for (size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += dy[i * m + j];
    g.bias[j] = static_cast<T>(s);
  }
  return g;
}

template <class T>
Tensor<T> depth_concat(std::span<const Tensor<T>> inputs) {
  if (inputs.empty()) throw std::invalid_argument("depth_concat: no inputs");
  for (const auto& t : inputs) require_rank(t.shape(), 3, "depth_concat", "input");
  const size_t n_batch = inputs[0].dim(0), length = inputs[0].dim(2);
  size_t total = 0;
  for (const auto& t : inputs) {
    if (t.dim(0) != n_batch || t.dim(2) != length)
      throw std::invalid_argument("depth_concat: input " + shape_string(t.shape()) +
                                  " does not match " + shape_string(inputs[0].shape()));
    total += t.dim(1);
  }
  Tensor<T> y({n_batch, total, length});
#pragma omp parallel for schedule(static)
  for (long long n_l = 0; n_l < static_cast<long long>(n_batch); ++n_l) {
    const size_t n = static_cast<size_t>(n_l);
    T* dst = y.data() + n * total * length;
    for (const auto& t : inputs) {
      const size_t chunk = t.dim(1) * length;
      std::copy_n(t.data() + n * chunk, chunk, dst);
      dst += chunk;
    }
  }
  return y;
}

template <class T>
std::vector<Tensor<T>> depth_concat_backward(const Tensor<T>& dy, std::span<const std::size_t> channels) {
  require_rank(dy.shape(), 3, "depth_concat_backward", "gradient");
  const size_t n_batch = dy.dim(0), total = dy.dim(1), length = dy.dim(2);
  size_t sum = 0;
  for (auto c : channels) sum += c;
  if (sum != total)
    throw std::invalid_argument("depth_concat_backward: branch channels sum to " + std::to_string(sum) +
                                " but gradient has " + std::to_string(total));
  std::vector<Tensor<T>> out;
  out.reserve(channels.size());
  size_t offset = 0;
  for (auto c : channels) {
    Tensor<T> part({n_batch, c, length});
    for (size_t n = 0; n < n_batch; ++n)
      std::copy_n(dy.data() + (n * total + offset) * length, c * length, part.data() + n * c * length);
    out.push_back(std::move(part));
    offset += c;
  }
  return out;
}

template <class T>
Tensor<T> residual_add(const Tensor<T>& main, const Tensor<T>& shortcut) {
  if (main.shape() != shortcut.shape())
    throw std::invalid_argument("residual_add: main " + shape_string(main.shape()) +
                                " and shortcut " + shape_string(shortcut.shape()) + " differ");
  Tensor<T> y(main.shape());
  const auto n = static_cast<long long>(main.size());
  const T* a = main.data();
  const T* b = shortcut.data();
  T* dst = y.data();
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < n; ++i) dst[i] = a[i] + b[i];
  return y;
}

template <class T>
SoftmaxCrossEntropy<T> softmax_crossentropy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  require_rank(logits.shape(), 2, "softmax_crossentropy", "logits");
  const size_t n = logits.dim(0), m = logits.dim(1);
  if (labels.size() != n)
    throw std::invalid_argument("softmax_crossentropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " rows");
  for (auto y : labels)
    if (y >= m)
      throw std::invalid_argument("softmax_crossentropy: label " + std::to_string(y) +
                                  " out of range [0, " + std::to_string(m) + ")");
  SoftmaxCrossEntropy<T> r{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const T* row = logits.data() + i * m;
    double mx = row[0];
    for (size_t j = 1; j < m; ++j) mx = std::max<double>(mx, row[j]);
    double z = 0.0;
    for (size_t j = 0; j < m; ++j) z += std::exp(row[j] - mx);
    const double log_z = std::log(z);
    for (size_t j = 0; j < m; ++j) r.probabilities[i * m + j] = static_cast<T>(std::exp(row[j] - mx - log_z));
    total += log_z - (row[labels[i]] - mx);
  }
  r.loss = total / static_cast<double>(n);
  return r;
}

template <class T>
Tensor<T> softmax_crossentropy_backward(const Tensor<T>& probabilities, std::span<const std::size_t> labels) {
  const size_t n = probabilities.dim(0), m = probabilities.dim(1);
  Tensor<T> g = probabilities;
  const T inv = static_cast<T>(1.0 / static_cast<double>(n));
  for (size_t i = 0; i < n; ++i) {
    g[i * m + labels[i]] -= T{1};
    for (size_t j = 0; j < m; ++j) g[i * m + j] *= inv;
  }
  return g;
}

#define BURSTNET_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);  \
  template Conv1dGrads<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                                          const Tensor<T>&, bool);                               \
  template Tensor<T> batchnorm1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Mode,     \
                                 RunningStats<T>, BatchNormCache<T>*, double, double);           \
  template BatchNormGrads<T> batchnorm1d_backward(const BatchNormCache<T>&, const Tensor<T>&,    \
                                                  const Tensor<T>&);                             \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template MaxPoolResult<T> maxpool1d(const Tensor<T>&, std::size_t, std::size_t);               \
  template Tensor<T> maxpool1d_backward(const Shape&, const std::vector<std::size_t>&,           \
                                        const Tensor<T>&);                                       \
  template Tensor<T> global_avgpool(const Tensor<T>&);                                           \
  template Tensor<T> global_avgpool_backward(const Shape&, const Tensor<T>&);                    \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> depth_concat(std::span<const Tensor<T>>);                                   \
  template std::vector<Tensor<T>> depth_concat_backward(const Tensor<T>&,                        \
                                                        std::span<const std::size_t>);           \
  template Tensor<T> residual_add(const Tensor<T>&, const Tensor<T>&);                           \
  template SoftmaxCrossEntropy<T> softmax_crossentropy(const Tensor<T>&,                         \
                                                       std::span<const std::size_t>);            \
  template Tensor<T> softmax_crossentropy_backward(const Tensor<T>&, std::span<const std::size_t>);

BURSTNET_INSTANTIATE_OPS(float)
BURSTNET_INSTANTIATE_OPS(double)

#undef BURSTNET_INSTANTIATE_OPS

}  // namespace burstnet::ops
