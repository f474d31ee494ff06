// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense double-precision kernels behind the model, attack and solver loops.
// A scalar reference implementation always exists; an AVX2/FMA variant is
// selected at runtime when the CPU supports it. The two backends are
// equivalence-tested against each other (reductions may differ by rounding,
// never by more).

#pragma once

#include <cstddef>

namespace augrisk::kernels {

enum class Backend { scalar, avx2 };

/// True when the running CPU (and this build) can execute the AVX2 kernels.
bool avx2_supported();

/// Backend currently in use. Auto-detected on first use.
Backend active_backend();

/// Force a backend, e.g. to cross-check results. Throws if unsupported.
void set_backend(Backend b);

const char* backend_name(Backend b);

// y = A x          (A row-major, rows x cols; x: cols, y: rows)
void matvec(const double* a, const double* x, double* y, std::size_t rows,
            std::size_t cols);

// y = A^T x        (A row-major, rows x cols; x: rows, y: cols)
void matvec_t(const double* a, const double* x, double* y, std::size_t rows,
              std::size_t cols);

// A += alpha * x y^T   (x: rows, y: cols)
void ger(double alpha, const double* x, const double* y, double* a,
         std::size_t rows, std::size_t cols);

double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x *= alpha
void scal(double alpha, double* x, std::size_t n);

// x[i] = min(max(x[i], lo), hi)
void clamp(double lo, double hi, double* x, std::size_t n);

namespace detail {

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  void (*matvec)(const double*, const double*, double*, std::size_t,
                 std::size_t);
  void (*matvec_t)(const double*, const double*, double*, std::size_t,
                   std::size_t);
  void (*ger)(double, const double*, const double*, double*, std::size_t,
              std::size_t);
  void (*clamp)(double, double, double*, std::size_t);
};

const KernelTable& scalar_table();

// Defined in the AVX2 translation unit; returns nullptr when this build has
// no AVX2 kernels at all (non-x86 targets).
const KernelTable* avx2_table();

}  // namespace detail

}  // namespace augrisk::kernels
