#pragma once

#include <cstdio>
#include <string>

namespace rlt {

/// Shortest round-trip-safe decimal: 17 significant digits, '.' separator.
inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace rlt
