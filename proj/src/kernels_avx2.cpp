// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2/FMA variants of the dense kernels. Compiled with -mavx2 -mfma; only
// reachable through the dispatch table after a runtime CPU check.

#include "augrisk/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace augrisk::kernels {
namespace {

constexpr std::size_t kLanes = 4;  // doubles per __m256d

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d va = _mm256_loadu_pd(a + i);
    __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_fmadd_pd(va, vb, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void matvec_avx2(const double* a, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void matvec_t_avx2(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  std::fill(y, y + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(x[r], a + r * cols, y, cols);
}

void ger_avx2(double alpha, const double* x, const double* y, double* a,
              std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    axpy_avx2(alpha * x[r], y, a + r * cols, cols);
}

void clamp_avx2(double lo, double hi, double* x, std::size_t n) {
  __m256d vlo = _mm256_set1_pd(lo);
  __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d v = _mm256_loadu_pd(x + i);
    v = _mm256_min_pd(_mm256_max_pd(v, vlo), vhi);
    _mm256_storeu_pd(x + i, v);
  }
  for (; i < n; ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

const detail::KernelTable kAvx2Table = {
    dot_avx2,    axpy_avx2, scal_avx2, matvec_avx2,
    matvec_t_avx2, ger_avx2, clamp_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2Table; }
}  // namespace detail

}  // namespace augrisk::kernels
