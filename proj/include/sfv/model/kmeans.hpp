#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sfv/core/random.hpp"
#include "sfv/core/types.hpp"

namespace sfv {

// A set of K centroids (K x D). Used as the BOW vocabulary and as EM seeds.
class Codebook {
 public:
  explicit Codebook(Matrix centroids) : centroids_(std::move(centroids)) {
    if (centroids_.rows() < 1 || centroids_.cols() < 1)
      throw InputError("codebook must hold at least one centroid");
    if (!centroids_.allFinite()) throw InputError("codebook centroids must be finite");
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(centroids_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(centroids_.cols()); }
  const Matrix& centroids() const noexcept { return centroids_; }

 private:
  Matrix centroids_;
};

inline double squared_distance(std::span<const double> a, const double* b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// Index of the nearest centroid by Euclidean distance; ties go to the lower index.
inline std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.data() + c * centroids.cols());
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

// k-means++ seeding: returns k row indices of `data`.
inline std::vector<std::size_t> kmeans_pp_seed(const Matrix& data, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (k < 1 || k > n)
    throw InsufficientDataError("k-means++ needs 1 <= k <= N (k = " + std::to_string(k) +
                                ", N = " + std::to_string(n) + ")");
  std::vector<std::size_t> seeds;
  seeds.reserve(k);
  seeds.push_back(rng.index(n));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (seeds.size() < k) {
    const double* c = data.data() + seeds.back() * data.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(row_span(data, static_cast<Eigen::Index>(i)), c));
      total += d2[i];
    }
    std::size_t pick;
    if (total <= 0.0) {
      // Remaining points coincide with existing seeds; take any unused index.
      pick = rng.index(n);
    } else {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    }
    seeds.push_back(pick);
  }
  return seeds;
}

struct KMeansConfig {
  std::size_t max_iterations = 50;
  std::uint64_t seed = 0;
};

// Lloyd iterations from a k-means++ start. Empty clusters are re-seeded with
// the point farthest from its assigned centroid.
inline Codebook kmeans(const DescriptorSet& descriptors, std::size_t k, const KMeansConfig& config = {}) {
  const Matrix& x = descriptors.matrix();
  const std::size_t n = descriptors.size();
  const auto dim = x.cols();
  Rng rng(config.seed);
  const auto seeds = kmeans_pp_seed(x, k, rng);
  Matrix centroids(static_cast<Eigen::Index>(k), dim);
  for (std::size_t c = 0; c < k; ++c)
    centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(seeds[c]));

  std::vector<std::size_t> assign(n, k);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = nearest_centroid(centroids, descriptors.row(i));
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(assign[i])) += x.row(static_cast<Eigen::Index>(i));
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto r = static_cast<Eigen::Index>(c);
      if (counts[c] > 0) {
        centroids.row(r) = sums.row(r) / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(descriptors.row(i),
                                          centroids.data() + assign[i] * static_cast<std::size_t>(dim));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centroids.row(r) = x.row(static_cast<Eigen::Index>(far));
      assign[far] = c;
    }
  }
  return Codebook(std::move(centroids));
}

}  // namespace sfv
