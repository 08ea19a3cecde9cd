// Serial reference kernels vs the OpenMP kernels, plus one full training step.
//   bench_kernels [repeats]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>

#include "burstnet/gemm.hpp"
#include "burstnet/model.hpp"
#include "burstnet/network_spec.hpp"
#include "burstnet/ops.hpp"

using namespace burstnet;

namespace {

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

Tensor<float> random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor<float> t(std::move(shape));
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

double max_rel_diff(std::span<const float> a, std::span<const float> b) {
  double worst = 0.0, scale = 1e-30;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
    scale = std::max(scale, std::abs(static_cast<double>(b[i])));
  }
  return worst / scale;
}

void row(const char* name, double ref_ms, double fast_ms, double diff) {
  std::printf("%-34s %10.2f %10.2f %8.1fx %10.2e\n", name, ref_ms, fast_ms, ref_ms / fast_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::mt19937_64 rng(42);
  std::printf("OpenMP threads: %d, best of %d\n", omp_get_max_threads(), repeats);
  std::printf("%-34s %10s %10s %9s %10s\n", "kernel", "serial ms", "omp ms", "speedup", "rel diff");

  {
    const std::size_t m = 128, n = 4096, k = 288;
    auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    Tensor<float> c_ref({m, n}), c_fast({m, n});
    const double t_ref = best_ms(repeats, [&] {
      reference::gemm<float>(Transpose::no, Transpose::no, m, n, k, 1.0f, a.data(), k, b.data(), n, 0.0f,
                             c_ref.data(), n);
    });
    const double t_fast = best_ms(repeats, [&] {
      gemm<float>(Transpose::no, Transpose::no, m, n, k, 1.0f, a.data(), k, b.data(), n, 0.0f, c_fast.data(), n);
    });
    row("gemm 128x4096x288", t_ref, t_fast, max_rel_diff(c_fast.values(), c_ref.values()));
  }

  {
    auto x = random_tensor({32, 32, 256}, rng), w = random_tensor({32, 32, 5}, rng), b = random_tensor({32}, rng);
    Tensor<float> y_ref, y_fast;
    const double t_ref = best_ms(repeats, [&] { y_ref = reference::conv1d(x, w, b, 1); });
    const double t_fast = best_ms(repeats, [&] { y_fast = ops::conv1d(x, w, b, 1); });
    row("conv1d N32 C32 L256 K5", t_ref, t_fast, max_rel_diff(y_fast.values(), y_ref.values()));

    auto dy = random_tensor(y_ref.shape(), rng);
    ops::Conv1dGrads<float> g_ref, g_fast;
    const double tb_ref = best_ms(repeats, [&] { g_ref = reference::conv1d_backward(x, w, 1, dy); });
    const double tb_fast = best_ms(repeats, [&] { g_fast = ops::conv1d_backward(x, w, 1, dy); });
    row("conv1d backward (dx, dw, db)", tb_ref, tb_fast, max_rel_diff(g_fast.weights.values(), g_ref.weights.values()));
  }

  {
    Model<float> model(default_network_spec(20, 1024, 32), 7);
    auto batch = random_tensor({32, 2, 1024}, rng);
    std::vector<std::size_t> labels(32);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 20;
    const double t = best_ms(repeats, [&] {
      const auto logits = model.forward(batch, ops::Mode::train);
      const auto sce = ops::softmax_crossentropy(logits, std::span<const std::size_t>(labels));
      model.backward(ops::softmax_crossentropy_backward(sce.probabilities, std::span<const std::size_t>(labels)));
    });
    std::printf("%-34s %10s %10.2f\n", "train step, width 32, batch 32", "-", t);
  }
  return 0;
}
