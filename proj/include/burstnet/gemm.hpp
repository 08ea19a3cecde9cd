#pragma once

#include <cstddef>

namespace burstnet {

enum class Transpose : bool { no = false, yes = true };

// Row-major C = alpha * op(A) * op(B) + beta * C, where op(A) is m x k and
// op(B) is k x n. Work is split over output tiles only, so every element of C
// is reduced in the same order regardless of the OpenMP thread count.
template <class T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
          std::size_t ldc);

namespace reference {

// Triple loop with double accumulation. Slow; used as a test oracle and a
// benchmark baseline.
template <class T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
          std::size_t ldc);

}  // namespace reference
}  // namespace burstnet
