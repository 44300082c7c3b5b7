#pragma once

#include <cstdio>
#include <string>

namespace uavplan {

/// Formats a float with 9 significant digits, the precision used by every CSV export.
inline std::string csv_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace uavplan
