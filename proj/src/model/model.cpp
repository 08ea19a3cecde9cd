#include "burstnet/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "burstnet/hash.hpp"

namespace burstnet {

namespace {

template <class T>
void add_into(Tensor<T>& acc, const Tensor<T>& x) {
  if (acc.shape() != x.shape())
    throw std::logic_error("gradient accumulation shape mismatch " + shape_string(acc.shape()) +
                           " vs " + shape_string(x.shape()));
  T* a = acc.data();
  const T* b = x.data();
  const auto n = static_cast<long long>(acc.size());
#pragma omp parallel for simd schedule(static)
  for (long long i = 0; i < n; ++i) a[i] += b[i];
}

template <class T>
void fill_normal(Tensor<T>& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

template <class T>
void hash_mask(Fnv1a& h, const Tensor<T>& t) {
  std::uint8_t byte = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    byte = static_cast<std::uint8_t>((byte << 1) | (t[i] > T{0} ? 1 : 0));
    if (i % 8 == 7) h.update(&byte, 1);
  }
  h.update(&byte, 1);
}

}  // namespace

template <class T>
Model<T>::Model(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  validate(spec_);
  const auto audit = audit_shapes(spec_);
  feature_dim_ = audit.feature_dim;

  stem_conv_ = add_conv("stem.conv", spec_.input_channels, spec_.stem.channels, spec_.stem.kernel,
                        spec_.stem.stride);
  stem_bn_ = add_bn("stem.bn", spec_.stem.channels);
  for (std::size_t s = 0; s < spec_.stages.size(); ++s) {
    for (std::size_t b = 0; b < spec_.stages[s].blocks.size(); ++b) {
      const auto& bs = spec_.stages[s].blocks[b];
      const std::string prefix = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
      const std::size_t stride = bs.downsample ? 2 : 1;
      BlockUnit unit;
      for (std::size_t i = 0; i < bs.branch_channels.size(); ++i) {
        const std::string bp = prefix + ".branch" + std::to_string(i + 1);
        unit.branch_conv.push_back(
            add_conv(bp + ".conv", bs.input_channels, bs.branch_channels[i], bs.branch_kernel_sizes[i], stride));
        unit.branch_bn.push_back(add_bn(bp + ".bn", bs.branch_channels[i]));
      }
      unit.branch_channels = bs.branch_channels;
      unit.merge_conv = add_conv(prefix + ".merge.conv", bs.output_channels, bs.output_channels, 1, 1);
      unit.merge_bn = add_bn(prefix + ".merge.bn", bs.output_channels);
      if (bs.downsample || bs.input_channels != bs.output_channels) {
        unit.shortcut_conv = add_conv(prefix + ".shortcut.conv", bs.input_channels, bs.output_channels, 1, stride);
        unit.shortcut_bn = add_bn(prefix + ".shortcut.bn", bs.output_channels);
      }
      blocks_.push_back(std::move(unit));
    }
  }
  fc_weight_ = add_param("head.fc.weight", {feature_dim_, spec_.num_classes}, true);
  fc_bias_ = add_param("head.fc.bias", {spec_.num_classes}, true);

  // He-style fan-in scaling for every conv/fc weight, in parameter order.
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    if (!p.trainable) continue;
    const auto& shape = p.value.shape();
    const bool is_weight = p.name.ends_with(".weight");
    if (!is_weight) continue;
    const std::size_t fan_in = shape.size() == 3 ? shape[1] * shape[2] : shape[0];
    fill_normal(p.value, std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
  }
}

template <class T>
std::size_t Model<T>::add_param(std::string name, Shape shape, bool trainable) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value = Tensor<T>(shape);
  if (trainable) p.grad = Tensor<T>(shape);
  p.trainable = trainable;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <class T>
typename Model<T>::ConvUnit Model<T>::add_conv(const std::string& prefix, std::size_t in, std::size_t out,
                                               std::size_t kernel, std::size_t stride) {
  ConvUnit u;
  u.weight = add_param(prefix + ".weight", {out, in, kernel}, true);
  u.bias = add_param(prefix + ".bias", {out}, true);
  u.stride = stride;
  return u;
}

template <class T>
typename Model<T>::BnUnit Model<T>::add_bn(const std::string& prefix, std::size_t channels) {
  BnUnit u;
  u.gamma = add_param(prefix + ".gamma", {channels}, true);
  params_[u.gamma].value.fill(T{1});
  u.beta = add_param(prefix + ".beta", {channels}, true);
  u.mean = add_param(prefix + ".running_mean", {channels}, false);
  u.var = add_param(prefix + ".running_var", {channels}, false);
  params_[u.var].value.fill(T{1});
  return u;
}

template <class T>
Parameter<T>& Model<T>::parameter(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

template <class T>
const Parameter<T>& Model<T>::parameter(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

template <class T>
Tensor<T> Model<T>::conv_forward(const ConvUnit& u, const Tensor<T>& x) const {
  return ops::conv1d(x, params_[u.weight].value, params_[u.bias].value, u.stride);
}

template <class T>
Tensor<T> Model<T>::bn_forward(const BnUnit& u, const Tensor<T>& x, ops::Mode mode,
                               ops::BatchNormCache<T>* cache) {
  ops::RunningStats<T> stats{params_[u.mean].value.values(), params_[u.var].value.values()};
  return ops::batchnorm1d(x, params_[u.gamma].value, params_[u.beta].value, mode, stats, cache);
}

template <class T>
Tensor<T> Model<T>::block_forward(const BlockUnit& b, Tensor<T> x, ops::Mode mode, BlockTrace* trace) {
  const std::size_t branches = b.branch_conv.size();
  if (trace) trace->branch_bn.resize(branches);
  std::vector<Tensor<T>> outs;
  outs.reserve(branches);
  for (std::size_t i = 0; i < branches; ++i) {
    auto c = conv_forward(b.branch_conv[i], x);
    auto n = bn_forward(b.branch_bn[i], c, mode, trace ? &trace->branch_bn[i] : nullptr);
    outs.push_back(ops::relu(n));
  }
  auto cat = ops::depth_concat<T>(outs);
  auto merged = bn_forward(b.merge_bn, conv_forward(b.merge_conv, cat), mode, trace ? &trace->merge_bn : nullptr);
  Tensor<T> sum;
  if (b.shortcut_conv) {
    auto s = bn_forward(*b.shortcut_bn, conv_forward(*b.shortcut_conv, x), mode,
                        trace ? &trace->shortcut_bn : nullptr);
    sum = ops::residual_add(merged, s);
  } else {
    sum = ops::residual_add(merged, x);
  }
  auto out = ops::relu(sum);
  if (trace) {
    trace->input = std::move(x);
    trace->branch_out = std::move(outs);
    trace->concat = std::move(cat);
    trace->output = out;
  }
  return out;
}

template <class T>
Tensor<T> Model<T>::forward(const Tensor<T>& batch, ops::Mode mode) {
  if (batch.rank() != 3 || batch.dim(1) != spec_.input_channels || batch.dim(2) != spec_.input_length)
    throw std::invalid_argument("forward: batch " + shape_string(batch.shape()) + " does not match [N x " +
                                std::to_string(spec_.input_channels) + " x " +
                                std::to_string(spec_.input_length) + "]");
  const bool train = mode == ops::Mode::train;
  trace_.reset();
  Trace trace;

  auto x = bn_forward(stem_bn_, conv_forward(stem_conv_, batch), mode, train ? &trace.stem_bn : nullptr);
  x = ops::relu(x);
  auto pooled = ops::maxpool1d(x, spec_.pool.window, spec_.pool.stride);
  if (train) {
    trace.input = batch;
    trace.stem_out = std::move(x);
    trace.pool_argmax = std::move(pooled.argmax);
    trace.blocks.resize(blocks_.size());
  }
  x = std::move(pooled.output);
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    x = block_forward(blocks_[i], std::move(x), mode, train ? &trace.blocks[i] : nullptr);
  auto features = ops::global_avgpool(x);
  auto logits = ops::dense(features, params_[fc_weight_].value, params_[fc_bias_].value);
  if (train) {
    trace.feature_map_shape = x.shape();
    trace.features = std::move(features);
    trace_ = std::move(trace);
  }
  return logits;
}

template <class T>
Tensor<T> Model<T>::conv_backward(const ConvUnit& u, const Tensor<T>& x, const Tensor<T>& dy, bool need_input) {
  auto g = ops::conv1d_backward(x, params_[u.weight].value, u.stride, dy, need_input);
  params_[u.weight].grad = std::move(g.weights);
  params_[u.bias].grad = std::move(g.bias);
  return std::move(g.input);
}

template <class T>
Tensor<T> Model<T>::bn_backward(const BnUnit& u, const ops::BatchNormCache<T>& cache, const Tensor<T>& dy) {
  auto g = ops::batchnorm1d_backward(cache, params_[u.gamma].value, dy);
  params_[u.gamma].grad = std::move(g.gamma);
  params_[u.beta].grad = std::move(g.beta);
  return std::move(g.input);
}

template <class T>
Tensor<T> Model<T>::block_backward(const BlockUnit& b, BlockTrace& trace, const Tensor<T>& dy) {
  auto dsum = ops::relu_backward(trace.output, dy);
  auto dmerged = bn_backward(b.merge_bn, trace.merge_bn, dsum);
  auto dcat = conv_backward(b.merge_conv, trace.concat, dmerged, true);
  auto dbranches = ops::depth_concat_backward(dcat, std::span<const std::size_t>(b.branch_channels));
  Tensor<T> dx;
  if (b.shortcut_conv) {
    auto ds = bn_backward(*b.shortcut_bn, trace.shortcut_bn, dsum);
    dx = conv_backward(*b.shortcut_conv, trace.input, ds, true);
  } else {
    dx = std::move(dsum);
  }
  for (std::size_t i = 0; i < b.branch_conv.size(); ++i) {
    auto dr = ops::relu_backward(trace.branch_out[i], dbranches[i]);
    auto dn = bn_backward(b.branch_bn[i], trace.branch_bn[i], dr);
    add_into(dx, conv_backward(b.branch_conv[i], trace.input, dn, true));
  }
  return dx;
}

template <class T>
Tensor<T> Model<T>::backward(const Tensor<T>& dlogits, bool need_input_grad) {
  if (!trace_) throw std::logic_error("backward() requires a preceding train-mode forward()");
  Trace trace = std::move(*trace_);
  trace_.reset();

  auto fc = ops::dense_backward(trace.features, params_[fc_weight_].value, dlogits);
  params_[fc_weight_].grad = std::move(fc.weights);
  params_[fc_bias_].grad = std::move(fc.bias);
  auto dx = ops::global_avgpool_backward(trace.feature_map_shape, fc.input);
  for (std::size_t i = blocks_.size(); i-- > 0;) dx = block_backward(blocks_[i], trace.blocks[i], dx);
  dx = ops::maxpool1d_backward(trace.stem_out.shape(), trace.pool_argmax, dx);
  dx = ops::relu_backward(trace.stem_out, dx);
  dx = bn_backward(stem_bn_, trace.stem_bn, dx);
  return conv_backward(stem_conv_, trace.input, dx, need_input_grad);
}

template <class T>
void Model<T>::zero_grad() {
  for (auto& p : params_)
    if (p.trainable) p.grad.fill(T{0});
}

template <class T>
void Model<T>::replace_head(std::size_t num_classes, std::uint64_t seed) {
  if (num_classes == 0) throw std::invalid_argument("replace_head: num_classes must be positive");
  spec_.num_classes = num_classes;
  auto& w = params_[fc_weight_];
  auto& b = params_[fc_bias_];
  w.value = Tensor<T>({feature_dim_, num_classes});
  w.grad = Tensor<T>({feature_dim_, num_classes});
  b.value = Tensor<T>({num_classes});
  b.grad = Tensor<T>({num_classes});
  std::mt19937_64 rng(derive_seed(seed, {0x4845414455ULL, num_classes}));
  fill_normal(w.value, std::sqrt(2.0 / static_cast<double>(feature_dim_)), rng);
  trace_.reset();
}

template <class T>
std::uint64_t Model<T>::checksum() const {
  Fnv1a h;
  for (const auto& p : params_) {
    h.update(p.name);
    h.update(p.value.data(), p.value.size() * sizeof(T));
  }
  return h.digest();
}

template <class T>
std::uint64_t Model<T>::activation_signature() const {
  if (!trace_) throw std::logic_error("activation_signature() requires a train-mode forward()");
  Fnv1a h;
  hash_mask(h, trace_->stem_out);
  h.update(trace_->pool_argmax.data(), trace_->pool_argmax.size() * sizeof(std::size_t));
  for (const auto& b : trace_->blocks) {
    for (const auto& o : b.branch_out) hash_mask(h, o);
    hash_mask(h, b.output);
  }
  return h.digest();
}

template class Model<float>;
template class Model<double>;

}  // namespace burstnet
