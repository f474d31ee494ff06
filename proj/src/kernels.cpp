// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace augrisk::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void matvec_scalar(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = dot_scalar(a + r * cols, x, cols);
}

void matvec_t_scalar(const double* a, const double* x, double* y,
                     std::size_t rows, std::size_t cols) {
  std::fill(y, y + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    axpy_scalar(x[r], a + r * cols, y, cols);
}

void ger_scalar(double alpha, const double* x, const double* y, double* a,
                std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    axpy_scalar(alpha * x[r], y, a + r * cols, cols);
}

void clamp_scalar(double lo, double hi, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

const detail::KernelTable kScalarTable = {
    dot_scalar,    axpy_scalar, scal_scalar, matvec_scalar,
    matvec_t_scalar, ger_scalar, clamp_scalar,
};

struct Dispatch {
  const detail::KernelTable* table;
  Backend backend;
};

Dispatch pick_default() {
  if (const detail::KernelTable* t = detail::avx2_table(); t && avx2_supported())
    return {t, Backend::avx2};
  return {&kScalarTable, Backend::scalar};
}

Dispatch& dispatch() {
  static Dispatch d = pick_default();
  return d;
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() { return kScalarTable; }
}  // namespace detail

#if !defined(AUGRISK_HAVE_AVX2_TU)
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

bool avx2_supported() {
#if (defined(__x86_64__) || defined(_M_X64)) && \
    (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return dispatch().backend; }

void set_backend(Backend b) {
  switch (b) {
    case Backend::scalar:
      dispatch() = {&kScalarTable, Backend::scalar};
      return;
    case Backend::avx2:
      if (const detail::KernelTable* t = detail::avx2_table();
          t && avx2_supported()) {
        dispatch() = {t, Backend::avx2};
        return;
      }
      throw std::invalid_argument("kernels: AVX2 backend not available on this machine");
  }
  throw std::invalid_argument("kernels: unknown backend");
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}

void scal(double alpha, double* x, std::size_t n) {
  dispatch().table->scal(alpha, x, n);
}

void matvec(const double* a, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  dispatch().table->matvec(a, x, y, rows, cols);
}

void matvec_t(const double* a, const double* x, double* y, std::size_t rows,
              std::size_t cols) {
  dispatch().table->matvec_t(a, x, y, rows, cols);
}

void ger(double alpha, const double* x, const double* y, double* a,
         std::size_t rows, std::size_t cols) {
  dispatch().table->ger(alpha, x, y, a, rows, cols);
}

void clamp(double lo, double hi, double* x, std::size_t n) {
  dispatch().table->clamp(lo, hi, x, n);
}

}  // namespace augrisk::kernels
