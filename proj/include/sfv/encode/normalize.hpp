#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sfv/core/error.hpp"

namespace sfv {

// Signed power normalization sign(z)|z|^a, in place.
inline void power_normalize_inplace(std::span<double> v, double a = 0.5) {
  if (!(a > 0.0 && a <= 1.0))
    throw ParameterError("power exponent must lie in (0, 1], got " + std::to_string(a));
  if (a == 1.0) return;
  if (a == 0.5) {
    for (double& z : v) z = std::copysign(std::sqrt(std::abs(z)), z);
    return;
  }
  for (double& z : v) z = std::copysign(std::pow(std::abs(z), a), z);
}

inline std::vector<double> power_normalize(std::span<const double> v, double a = 0.5) {
  std::vector<double> out(v.begin(), v.end());
  power_normalize_inplace(out, a);
  return out;
}

// Scales v to unit L2 norm in place. Returns false (and leaves v untouched)
// when the norm is zero.
inline bool l2_normalize_inplace(std::span<double> v) {
  double ss = 0.0;
  for (double z : v) ss += z * z;
  if (ss == 0.0) return false;
  const double inv = 1.0 / std::sqrt(ss);
  for (double& z : v) z *= inv;
  return true;
}

struct L2Normalized {
  std::vector<double> values;
  bool zero_norm = false;  // input was the zero vector and was returned unchanged
};

inline L2Normalized l2_normalize(std::span<const double> v) {
  L2Normalized r{std::vector<double>(v.begin(), v.end()), false};
  r.zero_norm = !l2_normalize_inplace(r.values);
  return r;
}

}  // namespace sfv
