#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "sfv/core/error.hpp"

namespace sfv {

enum class EncoderKind { kFv, kSfv, kBow };

inline std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kFv: return "fv";
    case EncoderKind::kSfv: return "sfv";
    case EncoderKind::kBow: return "bow";
  }
  return "?";
}

inline EncoderKind parse_encoder_kind(std::string_view s) {
  if (s == "fv") return EncoderKind::kFv;
  if (s == "sfv") return EncoderKind::kSfv;
  if (s == "bow") return EncoderKind::kBow;
  throw ParameterError("unknown encoder kind '" + std::string(s) + "' (expected fv, sfv or bow)");
}

// Predicted per-descriptor operation counts. The posterior stage costs 3MD for
// both encoders; the gradient stage costs 8 per (component, dimension) over all
// M components for FV and over the k selected ones for SFV. BOW is a nearest
// centroid search, 3MD.
struct ComplexityEstimate {
  double posterior_ops = 0.0;
  double gradient_ops = 0.0;
  double total() const noexcept { return posterior_ops + gradient_ops; }
};

inline ComplexityEstimate complexity_predict(std::size_t m, std::size_t d, std::size_t k, EncoderKind kind) {
  if (k < 1 || k > m) throw ParameterError("complexity_predict: k must lie in [1, M]");
  const double md = static_cast<double>(m) * static_cast<double>(d);
  switch (kind) {
    case EncoderKind::kFv: return {3.0 * md, 8.0 * md};
    case EncoderKind::kSfv: return {3.0 * md, 8.0 * static_cast<double>(k) * static_cast<double>(d)};
    case EncoderKind::kBow: return {3.0 * md, 0.0};
  }
  return {};
}

// FV cost over SFV cost.
inline double predicted_speedup(std::size_t m, std::size_t d, std::size_t k) {
  return complexity_predict(m, d, k, EncoderKind::kFv).total() /
         complexity_predict(m, d, k, EncoderKind::kSfv).total();
}

}  // namespace sfv
