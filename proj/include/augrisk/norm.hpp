// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace augrisk {

enum class NormKind { l2, linf };

inline const char* norm_name(NormKind n) {
  return n == NormKind::l2 ? "l2" : "linf";
}

inline NormKind parse_norm(const std::string& s) {
  if (s == "l2") return NormKind::l2;
  if (s == "linf") return NormKind::linf;
  throw std::invalid_argument("unknown norm '" + s + "' (expected l2 or linf)");
}

inline double vector_norm(const std::vector<double>& v, NormKind n) {
  if (n == NormKind::l2) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
  }
  double acc = 0.0;
  for (double x : v) acc = std::max(acc, std::abs(x));
  return acc;
}

}  // namespace augrisk
