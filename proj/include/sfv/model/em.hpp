#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sfv/core/parallel.hpp"
#include "sfv/core/random.hpp"
#include "sfv/model/gmm.hpp"
#include "sfv/model/kmeans.hpp"

namespace sfv {

struct EmConfig {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;           // on the mean log-likelihood per descriptor
  std::uint64_t seed = 0;
  double variance_floor_factor = 1e-4;  // times the global per-dimension variance
  std::size_t init_sample = 10000;   // descriptors used for k-means++ seeding
  std::size_t threads = 1;
  // Starting point; replaces k-means++ seeding when set.
  std::optional<GaussianMixture> initial;
};

struct ReseedEvent {
  std::size_t iteration;
  std::size_t component;
  std::size_t descriptor;  // descriptor whose position became the new mean
};

struct EmFitLog {
  // Mean log-likelihood per descriptor, one entry per evaluated parameter set.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;  // M-steps performed
  bool converged = false;
  std::vector<ReseedEvent> reseeds;
  std::vector<double> variance_floor;

  double final_log_likelihood() const {
    return log_likelihood.empty() ? -std::numeric_limits<double>::infinity()
                                  : log_likelihood.back();
  }
};

struct EmResult {
  GaussianMixture gmm;
  EmFitLog log;
};

namespace detail {

struct EmStats {
  std::vector<double> s0;  // M
  Matrix s1;               // M x D
  Matrix s2;               // M x D
  double log_likelihood = 0.0;
  double worst_ll = std::numeric_limits<double>::infinity();
  std::size_t worst_index = 0;

  EmStats(std::size_t m, std::size_t d)
      : s0(m, 0.0),
        s1(Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d))),
        s2(Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d))) {}

  void merge(const EmStats& o) {
    for (std::size_t k = 0; k < s0.size(); ++k) s0[k] += o.s0[k];
    s1 += o.s1;
    s2 += o.s2;
    log_likelihood += o.log_likelihood;
    if (o.worst_ll < worst_ll) {
      worst_ll = o.worst_ll;
      worst_index = o.worst_index;
    }
  }
};

inline EmStats e_step(const GaussianMixture& gmm, const DescriptorSet& x, std::size_t threads) {
  constexpr std::size_t kBatch = 64;
  const std::size_t m = gmm.components(), d = gmm.dim();
  const auto chunks = split_range(x.size(), threads);
  std::vector<EmStats> partial(chunks.size(), EmStats(m, d));
  for_each_chunk(chunks, [&](std::size_t t, Chunk c) {
    EmStats& st = partial[t];
    Matrix log_probs, work;
    for (std::size_t n = c.begin; n < c.end; ++n) {
      const std::size_t i = (n - c.begin) % kBatch;
      if (i == 0) {
        const std::size_t rows = std::min(kBatch, c.end - n);
        gmm.weighted_log_probs_batch(
            x.matrix().middleRows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows)), log_probs, work);
      }
      const auto xn = x.row(n);
      std::span<double> gamma(log_probs.data() + i * m, m);
      const double ll = normalize_log_probs(gamma);
      st.log_likelihood += ll;
      if (ll < st.worst_ll) {
        st.worst_ll = ll;
        st.worst_index = n;
      }
      for (std::size_t k = 0; k < m; ++k) {
        const double g = gamma[k];
        if (g == 0.0) continue;
        st.s0[k] += g;
        double* r1 = st.s1.data() + k * d;
        double* r2 = st.s2.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) {
          const double gx = g * xn[j];
          r1[j] += gx;
          r2[j] += gx * xn[j];
        }
      }
    }
  });
  EmStats total = std::move(partial[0]);
  for (std::size_t t = 1; t < partial.size(); ++t) total.merge(partial[t]);
  total.log_likelihood /= static_cast<double>(x.size());
  return total;
}

// k-means++ seeding on a subsample of up to `sample_cap` descriptors; each
// seed cluster starts with its sample mean, floored sample variance and
// population share.
inline GaussianMixture seed_mixture(const DescriptorSet& descriptors, std::size_t m, std::uint64_t seed,
                                    std::size_t sample_cap, const std::vector<double>& floor,
                                    const Eigen::RowVectorXd& global_var) {
  const std::size_t n = descriptors.size();
  const auto dd = static_cast<Eigen::Index>(descriptors.dim());
  const Matrix& x = descriptors.matrix();
  Rng rng(seed);
  const std::size_t sample_n = std::min(n, std::max(sample_cap, m));
  Matrix sample(static_cast<Eigen::Index>(sample_n), dd);
  if (sample_n == n) {
    sample = x;
  } else {
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < sample_n; ++i)
      sample.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
  }
  const auto seeds = kmeans_pp_seed(sample, m, rng);
  Matrix centers(static_cast<Eigen::Index>(m), dd);
  for (std::size_t k = 0; k < m; ++k)
    centers.row(static_cast<Eigen::Index>(k)) = sample.row(static_cast<Eigen::Index>(seeds[k]));

  std::vector<double> weights(m, 0.0);
  Matrix means = Matrix::Zero(static_cast<Eigen::Index>(m), dd);
  Matrix sq = Matrix::Zero(static_cast<Eigen::Index>(m), dd);
  for (Eigen::Index i = 0; i < sample.rows(); ++i) {
    const auto a = static_cast<Eigen::Index>(nearest_centroid(centers, row_span(sample, i)));
    weights[static_cast<std::size_t>(a)] += 1.0;
    means.row(a) += sample.row(i);
    sq.row(a) += sample.row(i).cwiseAbs2();
  }
  Matrix variances(static_cast<Eigen::Index>(m), dd);
  double wsum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double c = weights[k];
    for (Eigen::Index j = 0; j < dd; ++j) {
      double v = global_var(j);
      if (c >= 2.0) {
        const double mu = means(r, j) / c;
        means(r, j) = mu;
        v = sq(r, j) / c - mu * mu;
      } else {
        // Singleton or empty seed cluster (duplicate seeds): keep the seed
        // position with the global variance.
        means(r, j) = centers(r, j);
      }
      variances(r, j) = std::max(v, floor[static_cast<std::size_t>(j)]);
    }
    weights[k] = std::max(c, 1.0);
    wsum += weights[k];
  }
  for (double& w : weights) w /= wsum;
  return GaussianMixture(std::move(weights), std::move(means), std::move(variances));
}

}  // namespace detail

// Maximum-likelihood fit of an M-component diagonal mixture by EM.
//
// Starts from config.initial or from detail::seed_mixture. Every M-step floors
// each variance at variance_floor_factor times the global variance of that
// dimension. A component whose responsibility mass falls to ~0 is re-seeded at
// the descriptor with the lowest log-likelihood (recorded in log.reseeds).
// Deterministic for a fixed seed and thread count.
inline EmResult em_fit(const DescriptorSet& descriptors, std::size_t components,
                       const EmConfig& config = {}) {
  const std::size_t n = descriptors.size(), d = descriptors.dim(), m = components;
  if (m < 1) throw ParameterError("em_fit: component count must be >= 1");
  if (n < m)
    throw InsufficientDataError("em_fit: need N >= M (N = " + std::to_string(n) +
                                ", M = " + std::to_string(m) + ")");
  const Matrix& x = descriptors.matrix();
  const auto dd = static_cast<Eigen::Index>(d);

  const Eigen::RowVectorXd global_mean = x.colwise().mean();
  const Eigen::RowVectorXd global_var =
      (x.rowwise() - global_mean).array().square().colwise().mean();
  EmFitLog log;
  log.variance_floor.resize(d);
  for (std::size_t j = 0; j < d; ++j)
    log.variance_floor[j] =
        std::max(config.variance_floor_factor * global_var(static_cast<Eigen::Index>(j)), 1e-10);
  auto floored = [&](Eigen::Index j, double v) {
    return std::max(v, log.variance_floor[static_cast<std::size_t>(j)]);
  };

  std::optional<GaussianMixture> gmm;
  if (config.initial) {
    if (config.initial->components() != m || config.initial->dim() != d)
      throw DimensionError("em_fit: initial mixture shape does not match M x D");
    gmm = config.initial;
  } else {
    gmm.emplace(detail::seed_mixture(descriptors, m, config.seed, config.init_sample, log.variance_floor,
                                     global_var));
  }
  std::vector<double> weights = gmm->weights();
  Matrix means = gmm->means();
  Matrix variances = gmm->variances();

  const double empty_mass = 1e-10 * static_cast<double>(n);
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const auto st = detail::e_step(*gmm, descriptors, config.threads);
    log.log_likelihood.push_back(st.log_likelihood);
    if (it > 0 && st.log_likelihood - previous < config.tolerance) {
      log.converged = true;
      break;
    }
    previous = st.log_likelihood;

    // M-step.
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      if (st.s0[k] <= empty_mass) {
        means.row(r) = x.row(static_cast<Eigen::Index>(st.worst_index));
        for (Eigen::Index j = 0; j < dd; ++j) variances(r, j) = floored(j, global_var(j));
        weights[k] = 1.0 / static_cast<double>(n);
        log.reseeds.push_back({it, k, st.worst_index});
      } else {
        const double inv = 1.0 / st.s0[k];
        for (Eigen::Index j = 0; j < dd; ++j) {
          const double mu = st.s1(r, j) * inv;
          means(r, j) = mu;
          variances(r, j) = floored(j, st.s2(r, j) * inv - mu * mu);
        }
        weights[k] = st.s0[k] / static_cast<double>(n);
      }
      total += weights[k];
    }
    for (double& w : weights) w /= total;
    gmm.emplace(weights, means, variances);
    ++log.iterations;
  }
  if (!log.converged)
    log.log_likelihood.push_back(detail::e_step(*gmm, descriptors, config.threads).log_likelihood);
  return {std::move(*gmm), std::move(log)};
}

}  // namespace sfv
