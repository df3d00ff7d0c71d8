#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sfv/analysis/complexity.hpp"
#include "sfv/encode/bow.hpp"
#include "sfv/encode/fisher.hpp"

namespace sfv {

struct TimingRecord {
  EncoderKind kind = EncoderKind::kFv;
  std::size_t components = 0;
  std::size_t dim = 0;
  std::size_t k = 0;
  std::size_t descriptors_per_image = 0;  // mean over images
  std::size_t images = 0;
  double median_seconds = 0.0;  // per image
  double iqr_seconds = 0.0;
  std::size_t repetitions = 0;
  std::vector<double> samples;  // per-image seconds of each measured repetition
};

struct BenchConfig {
  std::size_t repetitions = 5;
  std::size_t warmup = 1;
  std::size_t threads = 1;
};

// Linear-interpolated quantile of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InputError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace detail {

inline double encode_once(const GaussianMixture& gmm, std::span<const DescriptorSet> images, EncoderKind kind,
                          std::size_t k, std::size_t threads) {
  double sink = 0.0;
  for (const auto& img : images) {
    switch (kind) {
      case EncoderKind::kFv: sink += fv_encode(gmm, img, true, threads).values()[0]; break;
      case EncoderKind::kSfv: sink += sfv_encode(gmm, img, k, true, threads).values()[0]; break;
      case EncoderKind::kBow: sink += bow_encode(gmm, img).values[0]; break;
    }
  }
  return sink;
}

inline double time_once(const GaussianMixture& gmm, std::span<const DescriptorSet> images, EncoderKind kind,
                        std::size_t k, std::size_t threads) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  volatile double sink = encode_once(gmm, images, kind, k, threads);
  (void)sink;
  const auto t1 = clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(images.size());
}

inline TimingRecord make_record(const GaussianMixture& gmm, std::span<const DescriptorSet> images,
                                EncoderKind kind, std::size_t k, std::vector<double> samples) {
  TimingRecord r;
  r.kind = kind;
  r.components = gmm.components();
  r.dim = gmm.dim();
  r.k = kind == EncoderKind::kSfv ? k : gmm.components();
  std::size_t total = 0;
  for (const auto& img : images) total += img.size();
  r.descriptors_per_image = total / images.size();
  r.images = images.size();
  r.median_seconds = quantile(samples, 0.5);
  r.iqr_seconds = quantile(samples, 0.75) - quantile(samples, 0.25);
  r.repetitions = samples.size();
  r.samples = std::move(samples);
  return r;
}

inline void check_bench_inputs(const GaussianMixture& gmm, std::span<const DescriptorSet> images,
                               const BenchConfig& config) {
  if (images.empty()) throw InputError("bench: no images to encode");
  if (config.repetitions < 3) throw ParameterError("bench: repetitions must be >= 3");
  if (config.warmup < 1) throw ParameterError("bench: at least one warmup run is required");
  for (const auto& img : images)
    if (img.dim() != gmm.dim()) throw DimensionError("bench: descriptor dim does not match mixture D");
}

}  // namespace detail

// Median per-image wall time of one encoder over `images`, after discarding
// the warmup runs.
inline TimingRecord bench_encode(const GaussianMixture& gmm, std::span<const DescriptorSet> images,
                                 EncoderKind kind, std::size_t k, const BenchConfig& config = {}) {
  detail::check_bench_inputs(gmm, images, config);
  if (kind == EncoderKind::kSfv && (k < 1 || k > gmm.components()))
    throw ParameterError("bench: k must lie in [1, M]");
  for (std::size_t w = 0; w < config.warmup; ++w) detail::time_once(gmm, images, kind, k, config.threads);
  std::vector<double> samples;
  for (std::size_t r = 0; r < config.repetitions; ++r)
    samples.push_back(detail::time_once(gmm, images, kind, k, config.threads));
  return detail::make_record(gmm, images, kind, k, std::move(samples));
}

struct SpeedupReport {
  TimingRecord fv;
  TimingRecord sfv;
  double measured_ratio = 0.0;   // median FV time / median SFV time
  double predicted_ratio = 0.0;  // from complexity_predict
};

// FV and SFV on identical inputs, repetitions interleaved so slow drifts in
// machine load affect both encoders alike.
inline SpeedupReport bench_compare(const GaussianMixture& gmm, std::span<const DescriptorSet> images,
                                   std::size_t k, const BenchConfig& config = {}) {
  detail::check_bench_inputs(gmm, images, config);
  if (k < 1 || k > gmm.components()) throw ParameterError("bench: k must lie in [1, M]");
  for (std::size_t w = 0; w < config.warmup; ++w) {
    detail::time_once(gmm, images, EncoderKind::kFv, k, config.threads);
    detail::time_once(gmm, images, EncoderKind::kSfv, k, config.threads);
  }
  std::vector<double> fv, sfv;
  for (std::size_t r = 0; r < config.repetitions; ++r) {
    fv.push_back(detail::time_once(gmm, images, EncoderKind::kFv, k, config.threads));
    sfv.push_back(detail::time_once(gmm, images, EncoderKind::kSfv, k, config.threads));
  }
  SpeedupReport rep{detail::make_record(gmm, images, EncoderKind::kFv, k, std::move(fv)),
                    detail::make_record(gmm, images, EncoderKind::kSfv, k, std::move(sfv)), 0.0,
                    predicted_speedup(gmm.components(), gmm.dim(), k)};
  rep.measured_ratio = rep.fv.median_seconds / rep.sfv.median_seconds;
  return rep;
}

}  // namespace sfv
