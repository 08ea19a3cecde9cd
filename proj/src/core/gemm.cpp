#include "burstnet/gemm.hpp"

#include <algorithm>
#include <vector>

namespace burstnet {
namespace {

template <class T>
struct Blocking;

template <>
struct Blocking<float> {
  static constexpr std::size_t mr = 8;
  static constexpr std::size_t nr = 32;
  static constexpr std::size_t kc = 256;
  static constexpr std::size_t nc = 3072;
};

template <>
struct Blocking<double> {
  static constexpr std::size_t mr = 8;
  static constexpr std::size_t nr = 16;
  static constexpr std::size_t kc = 256;
  static constexpr std::size_t nc = 1536;
};

// Element (row, col) of op(X) where X is stored row-major with leading dim ld.
template <class T>
inline T element(const T* x, std::size_t ld, bool trans, std::size_t row, std::size_t col) {
  return trans ? x[col * ld + row] : x[row * ld + col];
}

// Packs rows [0, m) x cols [p0, p0 + kc) of op(A) into mr-row panels laid out
// k-major, zero-filling the ragged last panel.
template <class T, std::size_t MR>
void pack_a(const T* a, std::size_t lda, bool trans, std::size_t m, std::size_t p0,
            std::size_t kc, T* out) {
  const std::size_t panels = (m + MR - 1) / MR;
#pragma omp parallel for schedule(static)
  for (std::size_t panel = 0; panel < panels; ++panel) {
    T* dst = out + panel * MR * kc;
    const std::size_t i0 = panel * MR;
    const std::size_t rows = std::min(MR, m - i0);
    if (!trans) {
      for (std::size_t i = 0; i < rows; ++i) {
        const T* src = a + (i0 + i) * lda + p0;
        for (std::size_t p = 0; p < kc; ++p) dst[p * MR + i] = src[p];
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = a + (p0 + p) * lda + i0;
        for (std::size_t i = 0; i < rows; ++i) dst[p * MR + i] = src[i];
      }
    }
    for (std::size_t i = rows; i < MR; ++i)
      for (std::size_t p = 0; p < kc; ++p) dst[p * MR + i] = T{0};
  }
}

template <class T, std::size_t NR>
void pack_b(const T* b, std::size_t ldb, bool trans, std::size_t j0, std::size_t nc,
            std::size_t p0, std::size_t kc, T* out) {
  const std::size_t panels = (nc + NR - 1) / NR;
#pragma omp parallel for schedule(static)
  for (std::size_t panel = 0; panel < panels; ++panel) {
    T* dst = out + panel * NR * kc;
    const std::size_t jp = j0 + panel * NR;
    const std::size_t cols = std::min(NR, j0 + nc - jp);
    if (!trans) {
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = b + (p0 + p) * ldb + jp;
        T* d = dst + p * NR;
        for (std::size_t j = 0; j < cols; ++j) d[j] = src[j];
        for (std::size_t j = cols; j < NR; ++j) d[j] = T{0};
      }
    } else {
      for (std::size_t j = 0; j < cols; ++j) {
        const T* src = b + (jp + j) * ldb + p0;
        for (std::size_t p = 0; p < kc; ++p) dst[p * NR + j] = src[p];
      }
      for (std::size_t p = 0; p < kc; ++p)
        for (std::size_t j = cols; j < NR; ++j) dst[p * NR + j] = T{0};
    }
  }
}

template <class T, std::size_t MR, std::size_t NR>
inline void micro_kernel(std::size_t kc, const T* __restrict ap, const T* __restrict bp,
                         T* __restrict c, std::size_t ldc, std::size_t rows, std::size_t cols,
                         T alpha, T beta, bool first) {
  T acc[MR][NR] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    const T* brow = bp + p * NR;
    const T* acol = ap + p * MR;
    for (std::size_t i = 0; i < MR; ++i) {
      const T ai = acol[i];
#pragma omp simd
      for (std::size_t j = 0; j < NR; ++j) acc[i][j] += ai * brow[j];
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    T* crow = c + i * ldc;
    if (first && beta == T{0}) {
      for (std::size_t j = 0; j < cols; ++j) crow[j] = alpha * acc[i][j];
    } else if (first) {
      for (std::size_t j = 0; j < cols; ++j) crow[j] = beta * crow[j] + alpha * acc[i][j];
    } else {
      for (std::size_t j = 0; j < cols; ++j) crow[j] += alpha * acc[i][j];
    }
  }
}

}  // namespace

template <class T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
          std::size_t ldc) {
  using B = Blocking<T>;
  constexpr std::size_t MR = B::mr;
  constexpr std::size_t NR = B::nr;
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = beta == T{0} ? T{0} : beta * c[i * ldc + j];
    return;
  }
  const bool ta = trans_a == Transpose::yes;
  const bool tb = trans_b == Transpose::yes;

  const std::size_t a_panels = (m + MR - 1) / MR;
  std::vector<T> a_pack(a_panels * MR * B::kc);
  std::vector<T> b_pack(((std::min(n, B::nc) + NR - 1) / NR) * NR * B::kc);

  for (std::size_t j0 = 0; j0 < n; j0 += B::nc) {
    const std::size_t nc = std::min(B::nc, n - j0);
    const std::size_t b_panels = (nc + NR - 1) / NR;
    for (std::size_t p0 = 0; p0 < k; p0 += B::kc) {
      const std::size_t kc = std::min(B::kc, k - p0);
      const bool first = p0 == 0;
      pack_a<T, MR>(a, lda, ta, m, p0, kc, a_pack.data());
      pack_b<T, NR>(b, ldb, tb, j0, nc, p0, kc, b_pack.data());
      const auto tiles = static_cast<long long>(b_panels * a_panels);
#pragma omp parallel for schedule(static)
      for (long long t = 0; t < tiles; ++t) {
        const std::size_t jp = static_cast<std::size_t>(t) / a_panels;
        const std::size_t ip = static_cast<std::size_t>(t) % a_panels;
        const std::size_t i0 = ip * MR;
        const std::size_t jj = j0 + jp * NR;
        micro_kernel<T, MR, NR>(kc, a_pack.data() + ip * MR * kc, b_pack.data() + jp * NR * kc,
                                c + i0 * ldc + jj, ldc, std::min(MR, m - i0),
                                std::min(NR, j0 + nc - jj), alpha, beta, first);
      }
    }
  }
}

namespace reference {

template <class T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
          std::size_t ldc) {
  const bool ta = trans_a == Transpose::yes;
  const bool tb = trans_b == Transpose::yes;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p)
        acc += static_cast<double>(element(a, lda, ta, i, p)) * element(b, ldb, tb, p, j);
      T& out = c[i * ldc + j];
      out = static_cast<T>(alpha * acc + (beta == T{0} ? 0.0 : static_cast<double>(beta) * out));
    }
  }
}

template void gemm<float>(Transpose, Transpose, std::size_t, std::size_t, std::size_t, float,
                          const float*, std::size_t, const float*, std::size_t, float, float*,
                          std::size_t);
template void gemm<double>(Transpose, Transpose, std::size_t, std::size_t, std::size_t, double,
                           const double*, std::size_t, const double*, std::size_t, double,
                           double*, std::size_t);

}  // namespace reference

template void gemm<float>(Transpose, Transpose, std::size_t, std::size_t, std::size_t, float,
                          const float*, std::size_t, const float*, std::size_t, float, float*,
                          std::size_t);
template void gemm<double>(Transpose, Transpose, std::size_t, std::size_t, std::size_t, double,
                           const double*, std::size_t, const double*, std::size_t, double,
                           double*, std::size_t);

}  // namespace burstnet
