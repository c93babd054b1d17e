#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace policylab {

// Shortest decimal string that round-trips the double, always keeping a
// fractional digit ("2.0", "0.15") and preferring fixed notation in the
// human range. Used for prompt text and stable file output.
inline std::string format_real(double v) {
  char buf[64];
  const double mag = v < 0 ? -v : v;
  if (v == static_cast<long long>(v) && mag < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return std::string(buf);
  }
  if (mag >= 1e-4 && mag < 1e15) {
    for (int decimals = 1; decimals <= 17; ++decimals) {
      std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
      if (std::strtod(buf, nullptr) == v) return std::string(buf);
    }
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s(buf);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

inline std::string format_real_list(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_real(values[i]);
  }
  out += "]";
  return out;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return std::string(buf);
}

inline long long round_count(double v) { return static_cast<long long>(v + (v >= 0 ? 0.5 : -0.5)); }

}  // namespace policylab
