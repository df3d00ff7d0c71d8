#pragma once

// Seeded synthetic descriptor datasets standing in for extracted local
// features: labeled "images", each a set of descriptors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sfv/core/random.hpp"
#include "sfv/model/gmm.hpp"

namespace sfv::synth {

struct LabeledImages {
  std::vector<DescriptorSet> images;
  std::vector<std::size_t> labels;
  std::vector<bool> is_train;
  std::size_t class_count = 0;
};

// Mixture with N(0, spread^2) means, variances uniform in [0.5, 1.5] and
// weights proportional to uniform(0.5, 1.5).
inline GaussianMixture random_mixture(std::size_t m, std::size_t d, std::uint64_t seed, double spread = 3.0) {
  Rng rng(seed);
  std::vector<double> w(m);
  double total = 0.0;
  for (double& x : w) total += (x = rng.uniform(0.5, 1.5));
  for (double& x : w) x /= total;
  Matrix means(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  Matrix vars(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    means.data()[i] = rng.normal(0.0, spread);
    vars.data()[i] = rng.uniform(0.5, 1.5);
  }
  return GaussianMixture(std::move(w), std::move(means), std::move(vars));
}

// n draws from a diagonal mixture.
inline DescriptorSet sample_mixture(const GaussianMixture& gmm, std::size_t n, Rng& rng) {
  const std::size_t d = gmm.dim();
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const auto& w = gmm.weights();
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t c = 0;
    while (c + 1 < w.size() && u >= w[c]) u -= w[c++];
    for (std::size_t j = 0; j < d; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.normal(gmm.means()(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)),
                     std::sqrt(gmm.variances()(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j))));
  }
  return DescriptorSet(std::move(out));
}

namespace detail {

inline Matrix random_centers(std::size_t count, std::size_t d, double spread, Rng& rng) {
  Matrix c(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal(0.0, spread);
  return c;
}

inline std::size_t draw_index(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform() * cdf.back();
  std::size_t i = 0;
  while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
  return i;
}

inline void split_flags(LabeledImages& out, std::size_t per_class, std::size_t train_per_class) {
  for (std::size_t i = 0; i < out.labels.size(); ++i) out.is_train.push_back(i % per_class < train_per_class);
}

}  // namespace detail

// Multi-class blob task. All classes draw descriptors around a shared set of
// blob centers; each class prefers its own random subset of `class_blobs`
// blobs, receiving `class_signal` of its mass there and the rest uniformly.
struct BlobTaskConfig {
  std::size_t classes = 10;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 50;
  std::size_t descriptors_per_image = 100;
  std::size_t dim = 64;
  std::size_t blobs = 64;
  std::size_t class_blobs = 6;
  double class_signal = 0.3;
  double center_spread = 2.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
};

inline LabeledImages blob_task(const BlobTaskConfig& cfg) {
  Rng rng(cfg.seed);
  const Matrix centers = detail::random_centers(cfg.blobs, cfg.dim, cfg.center_spread, rng);
  std::vector<std::vector<double>> cdfs(cfg.classes);
  for (auto& cdf : cdfs) {
    std::vector<double> w(cfg.blobs, (1.0 - cfg.class_signal) / static_cast<double>(cfg.blobs));
    const auto perm = rng.permutation(cfg.blobs);
    for (std::size_t i = 0; i < cfg.class_blobs && i < cfg.blobs; ++i)
      w[perm[i]] += cfg.class_signal / static_cast<double>(cfg.class_blobs);
    double acc = 0.0;
    for (double x : w) cdf.push_back(acc += x);
  }
  LabeledImages out;
  out.class_count = cfg.classes;
  const std::size_t per_class = cfg.train_per_class + cfg.test_per_class;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Matrix x(static_cast<Eigen::Index>(cfg.descriptors_per_image), static_cast<Eigen::Index>(cfg.dim));
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto b = static_cast<Eigen::Index>(detail::draw_index(cdfs[c], rng));
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = centers(b, j) + rng.normal(0.0, cfg.noise_sd);
      }
      out.images.emplace_back(std::move(x));
      out.labels.push_back(c);
    }
  }
  detail::split_flags(out, per_class, cfg.train_per_class);
  return out;
}

// Two classes built on identical, well-separated blob centers drawn with equal
// probability; they differ only in the spread around the centers. Hard
// assignment histograms carry no class information by construction.
struct VarianceContrastConfig {
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 100;
  std::size_t descriptors_per_image = 200;
  std::size_t dim = 32;
  std::size_t blobs = 16;
  double center_spread = 8.0;
  double sd_low = 1.0;
  double sd_high = 1.25;
  std::uint64_t seed = 2;
};

inline LabeledImages variance_contrast_task(const VarianceContrastConfig& cfg) {
  Rng rng(cfg.seed);
  const Matrix centers = detail::random_centers(cfg.blobs, cfg.dim, cfg.center_spread, rng);
  LabeledImages out;
  out.class_count = 2;
  const std::size_t per_class = cfg.train_per_class + cfg.test_per_class;
  for (std::size_t c = 0; c < 2; ++c) {
    const double sd = c == 0 ? cfg.sd_low : cfg.sd_high;
    for (std::size_t i = 0; i < per_class; ++i) {
      Matrix x(static_cast<Eigen::Index>(cfg.descriptors_per_image), static_cast<Eigen::Index>(cfg.dim));
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto b = static_cast<Eigen::Index>(rng.index(cfg.blobs));
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = centers(b, j) + rng.normal(0.0, sd);
      }
      out.images.emplace_back(std::move(x));
      out.labels.push_back(c);
    }
  }
  detail::split_flags(out, per_class, cfg.train_per_class);
  return out;
}

// Stacks (a subsample of) every image's descriptors into one set, e.g. for
// fitting a mixture or a codebook.
inline DescriptorSet pool_descriptors(const std::vector<DescriptorSet>& images, std::size_t per_image_cap,
                                      const std::vector<bool>* only = nullptr) {
  std::size_t rows = 0;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (!only || (*only)[i]) rows += std::min(per_image_cap, images[i].size());
  if (rows == 0) throw InputError("pool_descriptors: no descriptors selected");
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(images.front().dim()));
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (only && !(*only)[i]) continue;
    const auto take = static_cast<Eigen::Index>(std::min(per_image_cap, images[i].size()));
    out.middleRows(at, take) = images[i].matrix().topRows(take);
    at += take;
  }
  return DescriptorSet(std::move(out));
}

}  // namespace sfv::synth
