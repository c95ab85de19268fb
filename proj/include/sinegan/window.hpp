#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sinegan/common.hpp"

namespace sinegan {

enum class WindowKind { rectangular, hamming, blackman_harris_4term };

inline const char* window_name(WindowKind k) {
  switch (k) {
    case WindowKind::rectangular: return "rectangular";
    case WindowKind::hamming: return "hamming";
    case WindowKind::blackman_harris_4term: return "blackman_harris";
  }
  return "?";
}

inline WindowKind window_from_name(const std::string& s) {
  if (s == "rectangular") return WindowKind::rectangular;
  if (s == "hamming") return WindowKind::hamming;
  if (s == "blackman_harris" || s == "blackman_harris_4term")
    return WindowKind::blackman_harris_4term;
  throw ConfigError("unknown window kind: " + s);
}

// Symmetric windows, win[n] == win[N-1-n].
inline std::vector<double> make_window(WindowKind kind, int n) {
  SINEGAN_CHECK(n >= 1, "window length must be >= 1");
  std::vector<double> w(static_cast<size_t>(n), 1.0);
  if (kind == WindowKind::rectangular || n == 1) return w;
  const double denom = static_cast<double>(n - 1);
  if (kind == WindowKind::hamming) {
    for (int i = 0; i < n; ++i)
      w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / denom);
  } else {
    // 4-term minimum-sidelobe coefficients.
    const double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
    for (int i = 0; i < n; ++i) {
      const double t = 2.0 * M_PI * i / denom;
      w[i] = a0 - a1 * std::cos(t) + a2 * std::cos(2.0 * t) -
             a3 * std::cos(3.0 * t);
    }
  }
  return w;
}

}  // namespace sinegan
