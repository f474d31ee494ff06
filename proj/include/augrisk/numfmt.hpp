// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

namespace augrisk {

/// Shortest decimal form that round-trips the exact double value.
/// Locale-independent; used for every number we serialize.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_int(std::string_view s, long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace augrisk
