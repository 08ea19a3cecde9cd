#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "burstnet/ops.hpp"

namespace burstnet::reference {

using std::size_t;

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride) {
  if (x.dim(1) != w.dim(1))
    throw std::invalid_argument("reference::conv1d: channel mismatch " + shape_string(x.shape()) +
                                " vs " + shape_string(w.shape()));
  const size_t n_batch = x.dim(0), c_in = x.dim(1), length = x.dim(2);
  const size_t c_out = w.dim(0), kernel = w.dim(2);
  const auto pad = ops::same_padding(length, kernel, stride);
  Tensor<T> y({n_batch, c_out, pad.out_length});
  for (size_t n = 0; n < n_batch; ++n)
    for (size_t co = 0; co < c_out; ++co)
      for (size_t l = 0; l < pad.out_length; ++l) {
        double acc = b[co];
        for (size_t ci = 0; ci < c_in; ++ci)
          for (size_t k = 0; k < kernel; ++k) {
            const long j = static_cast<long>(l * stride + k) - static_cast<long>(pad.left);
            if (j < 0 || j >= static_cast<long>(length)) continue;
            acc += static_cast<double>(w.at(co, ci, k)) * x.at(n, ci, static_cast<size_t>(j));
          }
        y.at(n, co, l) = static_cast<T>(acc);
      }
  return y;
}

template <class T>
ops::Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                                    const Tensor<T>& dy) {
  const size_t n_batch = x.dim(0), c_in = x.dim(1), length = x.dim(2);
  const size_t c_out = w.dim(0), kernel = w.dim(2);
  const auto pad = ops::same_padding(length, kernel, stride);
  std::vector<double> dx(x.size(), 0.0), dw(w.size(), 0.0), db(c_out, 0.0);
  for (size_t n = 0; n < n_batch; ++n)
    for (size_t co = 0; co < c_out; ++co)
      for (size_t l = 0; l < pad.out_length; ++l) {
        const double g = dy.at(n, co, l);
        db[co] += g;
        for (size_t ci = 0; ci < c_in; ++ci)
          for (size_t k = 0; k < kernel; ++k) {
            const long j = static_cast<long>(l * stride + k) - static_cast<long>(pad.left);
            if (j < 0 || j >= static_cast<long>(length)) continue;
            const size_t xi = (n * c_in + ci) * length + static_cast<size_t>(j);
            const size_t wi = (co * c_in + ci) * kernel + k;
            dw[wi] += g * x[xi];
            dx[xi] += g * w[wi];
          }
      }
  ops::Conv1dGrads<T> out{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({c_out})};
  for (size_t i = 0; i < dx.size(); ++i) out.input[i] = static_cast<T>(dx[i]);
  for (size_t i = 0; i < dw.size(); ++i) out.weights[i] = static_cast<T>(dw[i]);
  for (size_t i = 0; i < db.size(); ++i) out.bias[i] = static_cast<T>(db[i]);
  return out;
}

namespace {

template <class T>
void channel_moments(const Tensor<T>& x, size_t c, double& mean, double& var) {
  const size_t n_batch = x.dim(0), length = x.dim(2);
  double sum = 0.0;
  for (size_t n = 0; n < n_batch; ++n)
    for (size_t l = 0; l < length; ++l) sum += x.at(n, c, l);
  const double count = static_cast<double>(n_batch * length);
  mean = sum / count;
  double sq = 0.0;
  for (size_t n = 0; n < n_batch; ++n)
    for (size_t l = 0; l < length; ++l) sq += (x.at(n, c, l) - mean) * (x.at(n, c, l) - mean);
  var = sq / count;
}

}  // namespace

template <class T>
Tensor<T> batchnorm1d_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            double epsilon) {
  Tensor<T> y(x.shape());
  for (size_t c = 0; c < x.dim(1); ++c) {
    double mean, var;
    channel_moments(x, c, mean, var);
    const double inv_std = 1.0 / std::sqrt(var + epsilon);
    for (size_t n = 0; n < x.dim(0); ++n)
      for (size_t l = 0; l < x.dim(2); ++l)
        y.at(n, c, l) = static_cast<T>(gamma[c] * (x.at(n, c, l) - mean) * inv_std + beta[c]);
  }
  return y;
}

// Textbook form: dx = g/sigma * (dy - mean(dy) - x_hat * mean(dy * x_hat)).
template <class T>
ops::BatchNormGrads<T> batchnorm1d_train_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                                                  const Tensor<T>& dy, double epsilon) {
  const size_t n_batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const double count = static_cast<double>(n_batch * length);
  ops::BatchNormGrads<T> g{Tensor<T>(x.shape()), Tensor<T>({channels}), Tensor<T>({channels})};
  for (size_t c = 0; c < channels; ++c) {
    double mean, var;
    channel_moments(x, c, mean, var);
    const double inv_std = 1.0 / std::sqrt(var + epsilon);
    double mean_dy = 0.0, mean_dy_xh = 0.0;
    for (size_t n = 0; n < n_batch; ++n)
      for (size_t l = 0; l < length; ++l) {
        const double xh = (x.at(n, c, l) - mean) * inv_std;
        mean_dy += dy.at(n, c, l);
        mean_dy_xh += dy.at(n, c, l) * xh;
      }
    g.beta[c] = static_cast<T>(mean_dy);
    g.gamma[c] = static_cast<T>(mean_dy_xh);
    mean_dy /= count;
    mean_dy_xh /= count;
    for (size_t n = 0; n < n_batch; ++n)
      for (size_t l = 0; l < length; ++l) {
        const double xh = (x.at(n, c, l) - mean) * inv_std;
        g.input.at(n, c, l) =
            static_cast<T>(gamma[c] * inv_std * (dy.at(n, c, l) - mean_dy - xh * mean_dy_xh));
      }
  }
  return g;
}

template <class T>
Tensor<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride) {
  const size_t out_len = (x.dim(2) - window) / stride + 1;
  Tensor<T> y({x.dim(0), x.dim(1), out_len});
  for (size_t n = 0; n < x.dim(0); ++n)
    for (size_t c = 0; c < x.dim(1); ++c)
      for (size_t o = 0; o < out_len; ++o) {
        T best = x.at(n, c, o * stride);
        for (size_t j = 1; j < window; ++j) best = std::max(best, x.at(n, c, o * stride + j));
        y.at(n, c, o) = best;
      }
  return y;
}

template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x) {
  Tensor<T> y({x.dim(0), x.dim(1)});
  for (size_t n = 0; n < x.dim(0); ++n)
    for (size_t c = 0; c < x.dim(1); ++c) {
      double s = 0.0;
      for (size_t l = 0; l < x.dim(2); ++l) s += x.at(n, c, l);
      y.at(n, c) = static_cast<T>(s / static_cast<double>(x.dim(2)));
    }
  return y;
}

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const size_t n = x.dim(0), d = x.dim(1), m = w.dim(1);
  Tensor<T> y({n, m});
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) {
      double acc = b[j];
      for (size_t p = 0; p < d; ++p) acc += static_cast<double>(x.at(i, p)) * w.at(p, j);
      y.at(i, j) = static_cast<T>(acc);
    }
  return y;
}

template <class T>
ops::DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
  const size_t n = x.dim(0), d = x.dim(1), m = w.dim(1);
  ops::DenseGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({m})};
  for (size_t i = 0; i < n; ++i)
    for (size_t p = 0; p < d; ++p) {
      double acc = 0.0;
      for (size_t j = 0; j < m; ++j) acc += static_cast<double>(dy.at(i, j)) * w.at(p, j);
      g.input.at(i, p) = static_cast<T>(acc);
    }
  for (size_t p = 0; p < d; ++p)
    for (size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) acc += static_cast<double>(x.at(i, p)) * dy.at(i, j);
      g.weights.at(p, j) = static_cast<T>(acc);
    }
  for (size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += dy.at(i, j);
    g.bias[j] = static_cast<T>(acc);
  }
  return g;
}

#define BURSTNET_INSTANTIATE_REFERENCE(T)                                                        \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);  \
  template ops::Conv1dGrads<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, std::size_t,  \
                                               const Tensor<T>&);                                \
  template Tensor<T> batchnorm1d_train(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                       double);                                                  \
  template ops::BatchNormGrads<T> batchnorm1d_train_backward(const Tensor<T>&, const Tensor<T>&, \
                                                             const Tensor<T>&, double);          \
  template Tensor<T> maxpool1d(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> global_avgpool(const Tensor<T>&);                                           \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template ops::DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

BURSTNET_INSTANTIATE_REFERENCE(float)
BURSTNET_INSTANTIATE_REFERENCE(double)

#undef BURSTNET_INSTANTIATE_REFERENCE

}  // namespace burstnet::reference
