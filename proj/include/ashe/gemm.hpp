#pragma once

namespace ashe {

// Row-major C[M,N] = alpha * op(A) * op(B) + beta * C, delegated to BLAS.
// op(A) is A when transA is false, A^T otherwise; leading dimensions follow
// the row-major convention (stride between consecutive rows of the stored
// matrix).
void gemm(bool transA, bool transB, int M, int N, int K, float alpha,
          const float* A, int lda, const float* B, int ldb, float beta,
          float* C, int ldc);
void gemm(bool transA, bool transB, int M, int N, int K, double alpha,
          const double* A, int lda, const double* B, int ldb, double beta,
          double* C, int ldc);

// Pin the BLAS thread count (1 keeps reductions bit-reproducible and is the
// right choice for per-sample convolution GEMMs).
void set_blas_threads(int n);

}  // namespace ashe
