#pragma once

#include <algorithm>
#include <limits>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sfv/core/parallel.hpp"
#include "sfv/encode/normalize.hpp"
#include "sfv/model/gmm.hpp"

namespace sfv {

// A Fisher vector of length 2*M*D laid out as M blocks of
// [mean gradient (D) | sigma gradient (D)].
class FisherCode {
 public:
  FisherCode(std::size_t components, std::size_t dim)
      : components_(components), dim_(dim), values_(2 * components * dim, 0.0) {}
  FisherCode(std::size_t components, std::size_t dim, std::vector<double> values)
      : components_(components), dim_(dim), values_(std::move(values)) {
    if (values_.size() != 2 * components_ * dim_)
      throw DimensionError("fisher code length " + std::to_string(values_.size()) +
                           " != 2*M*D = " + std::to_string(2 * components_ * dim_));
  }

  std::size_t components() const noexcept { return components_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  // The [mean | sigma] sub-vector of component k, length 2D.
  std::span<const double> block(std::size_t k) const { return {values_.data() + 2 * k * dim_, 2 * dim_}; }
  std::span<const double> mean_block(std::size_t k) const { return {values_.data() + 2 * k * dim_, dim_}; }
  std::span<const double> sigma_block(std::size_t k) const {
    return {values_.data() + (2 * k + 1) * dim_, dim_};
  }

 private:
  std::size_t components_;
  std::size_t dim_;
  std::vector<double> values_;
};

namespace detail {

// Writes the indices of the k largest values to out[0..k), largest first,
// ties to the lower index. One pass over a sorted buffer of size k, so the
// cost is about one comparison per entry when k is much smaller than M.
inline void top_k_into(std::span<const double> values, std::size_t k, std::size_t* out) {
  std::size_t filled = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (filled == k && !(v > values[out[k - 1]])) continue;
    std::size_t pos = filled < k ? filled++ : k - 1;
    while (pos > 0 && v > values[out[pos - 1]]) {
      out[pos] = out[pos - 1];
      --pos;
    }
    out[pos] = i;
  }
}

}  // namespace detail

// Indices of the k largest entries of `values`, largest first; ties go to the
// lower index.
inline std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  if (k < 1 || k > values.size())
    throw ParameterError("k = " + std::to_string(k) + " must lie in [1, M = " +
                         std::to_string(values.size()) + "]");
  std::vector<std::size_t> idx(k);
  detail::top_k_into(values, k, idx.data());
  return idx;
}

// Top-k cluster indices for one descriptor by posterior.
inline std::vector<std::size_t> select_top_k(const GaussianMixture& gmm, std::span<const double> x,
                                             std::size_t k) {
  if (k < 1 || k > gmm.components())
    throw ParameterError("k = " + std::to_string(k) + " must lie in [1, M = " +
                         std::to_string(gmm.components()) + "]");
  return top_k_indices(posteriors(gmm, x), k);
}

// Per-descriptor top-k cluster indices for a whole set, N rows of k entries.
class SelectionMask {
 public:
  SelectionMask(std::size_t components, std::size_t k) : components_(components), k_(k) {}

  void push_back(std::span<const std::size_t> row) {
    if (row.size() != k_) throw DimensionError("selection row must hold exactly k indices");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] >= components_) throw InputError("selected index out of range");
      for (std::size_t j = 0; j < i; ++j)
        if (row[j] == row[i]) throw InputError("selected indices must be distinct");
    }
    indices_.insert(indices_.end(), row.begin(), row.end());
  }

  std::size_t size() const noexcept { return k_ == 0 ? 0 : indices_.size() / k_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t components() const noexcept { return components_; }
  std::span<const std::size_t> row(std::size_t n) const { return {indices_.data() + n * k_, k_}; }
  bool selects(std::size_t n, std::size_t component) const {
    const auto r = row(n);
    return std::find(r.begin(), r.end(), component) != r.end();
  }

 private:
  std::size_t components_;
  std::size_t k_;
  std::vector<std::size_t> indices_;
};

inline SelectionMask selection_mask(const GaussianMixture& gmm, const DescriptorSet& descriptors,
                                    std::size_t k) {
  if (descriptors.dim() != gmm.dim())
    throw DimensionError("descriptor dim does not match mixture D");
  SelectionMask mask(gmm.components(), k);
  for (std::size_t n = 0; n < descriptors.size(); ++n)
    mask.push_back(select_top_k(gmm, descriptors.row(n), k));
  return mask;
}

namespace detail {

// Adds gamma-weighted mean and sigma gradients of component `k` at x into the
// 2D-long block starting at `block`. About 8 flops per dimension.
inline void add_component_gradient(const GaussianMixture& gmm, std::span<const double> x,
                                   std::size_t k, double gamma, double* block) {
  const std::size_t d = gmm.dim();
  const double* mu = gmm.mean_row(k);
  const double* isd = gmm.inv_sd_row(k);
  const double cm = gamma * gmm.mean_coef(k);
  const double cs = gamma * gmm.sigma_coef(k);
  double* gm = block;
  double* gs = block + d;
  for (std::size_t j = 0; j < d; ++j) {
    const double z = (x[j] - mu[j]) * isd[j];
    gm[j] += cm * z;
    gs[j] += cs * (z * z - 1.0);
  }
}

// Descriptors per posterior batch in the pooled encoders.
inline constexpr std::size_t kPosteriorBatch = 64;

// Work buffers reused across descriptors within one encoding call.
struct EncodeScratch {
  std::vector<double> gamma;
  std::vector<std::size_t> order;
  Matrix log_probs;
  Matrix work;
  explicit EncodeScratch(std::size_t m) : gamma(m), order(m) {}
};

// Gradient stage given the posteriors of all M components: every component
// (k == M) or only the k highest posteriors.
inline void add_gradients(const GaussianMixture& gmm, std::span<const double> x, std::span<const double> gamma,
                          std::size_t k, std::size_t* order, double* out) {
  const std::size_t m = gmm.components(), d = gmm.dim();
  if (k >= m) {
    for (std::size_t c = 0; c < m; ++c) add_component_gradient(gmm, x, c, gamma[c], out + 2 * c * d);
    return;
  }
  top_k_into(gamma, k, order);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t c = order[i];
    add_component_gradient(gmm, x, c, gamma[c], out + 2 * c * d);
  }
}

// Single descriptor: posterior stage for all M components, then gradients.
inline void accumulate_descriptor(const GaussianMixture& gmm, std::span<const double> x,
                                  std::size_t k, EncodeScratch& s, double* out) {
  gmm.weighted_log_probs(x, s.gamma);
  normalize_log_probs(s.gamma);
  add_gradients(gmm, x, s.gamma, k, s.order.data(), out);
}

// Rows [begin, end) of a set, with posteriors computed a batch at a time.
inline void accumulate_rows(const GaussianMixture& gmm, const DescriptorSet& descriptors, std::size_t begin,
                            std::size_t end, std::size_t k, EncodeScratch& s, double* out) {
  const std::size_t m = gmm.components();
  for (std::size_t b = begin; b < end; b += kPosteriorBatch) {
    const std::size_t rows = std::min(kPosteriorBatch, end - b);
    gmm.weighted_log_probs_batch(
        descriptors.matrix().middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(rows)),
        s.log_probs, s.work);
    for (std::size_t i = 0; i < rows; ++i) {
      std::span<double> gamma(s.log_probs.data() + i * m, m);
      normalize_log_probs(gamma);
      add_gradients(gmm, descriptors.row(b + i), gamma, k, s.order.data(), out);
    }
  }
}

inline FisherCode encode_pooled(const GaussianMixture& gmm, const DescriptorSet& descriptors,
                                std::size_t k, bool normalize, std::size_t threads) {
  if (descriptors.dim() != gmm.dim())
    throw DimensionError("descriptor dim " + std::to_string(descriptors.dim()) +
                         " does not match mixture D = " + std::to_string(gmm.dim()));
  const std::size_t m = gmm.components(), d = gmm.dim(), len = 2 * m * d;
  const auto chunks = split_range(descriptors.size(), threads);
  std::vector<std::vector<double>> partial(chunks.size());
  for_each_chunk(chunks, [&](std::size_t t, Chunk c) {
    partial[t].assign(len, 0.0);
    EncodeScratch scratch(m);
    accumulate_rows(gmm, descriptors, c.begin, c.end, k, scratch, partial[t].data());
  });
  std::vector<double> sum = std::move(partial[0]);
  for (std::size_t t = 1; t < partial.size(); ++t)
    for (std::size_t i = 0; i < len; ++i) sum[i] += partial[t][i];
  const double inv_n = 1.0 / static_cast<double>(descriptors.size());
  for (double& v : sum) v *= inv_n;
  if (normalize) {
    power_normalize_inplace(sum, 0.5);
    l2_normalize_inplace(sum);
  }
  return FisherCode(m, d, std::move(sum));
}

}  // namespace detail

// Unpooled, unnormalized Fisher code of a single descriptor over all M components.
inline FisherCode fv_code_row(const GaussianMixture& gmm, std::span<const double> x) {
  gmm.check_input(x);
  FisherCode code(gmm.components(), gmm.dim());
  detail::EncodeScratch scratch(gmm.components());
  detail::accumulate_descriptor(gmm, x, gmm.components(), scratch, code.values().data());
  return code;
}

// Single-descriptor sparse code: gradient blocks only for the top-k components.
inline FisherCode sfv_code_row(const GaussianMixture& gmm, std::span<const double> x, std::size_t k) {
  gmm.check_input(x);
  if (k < 1 || k > gmm.components())
    throw ParameterError("k = " + std::to_string(k) + " must lie in [1, M = " +
                         std::to_string(gmm.components()) + "]");
  FisherCode code(gmm.components(), gmm.dim());
  detail::EncodeScratch scratch(gmm.components());
  detail::accumulate_descriptor(gmm, x, k, scratch, code.values().data());
  return code;
}

// Average of fv_code_row over the set; with `normalize`, signed square root
// followed by L2 normalization.
inline FisherCode fv_encode(const GaussianMixture& gmm, const DescriptorSet& descriptors,
                            bool normalize = true, std::size_t threads = 1) {
  return detail::encode_pooled(gmm, descriptors, gmm.components(), normalize, threads);
}

// Sparse Fisher vector: like fv_encode, but each descriptor contributes
// gradient blocks only for its k highest-posterior components, weighted by
// the unrenormalized posteriors.
inline FisherCode sfv_encode(const GaussianMixture& gmm, const DescriptorSet& descriptors,
                             std::size_t k, bool normalize = true, std::size_t threads = 1) {
  if (k < 1 || k > gmm.components())
    throw ParameterError("k = " + std::to_string(k) + " must lie in [1, M = " +
                         std::to_string(gmm.components()) + "]");
  return detail::encode_pooled(gmm, descriptors, k, normalize, threads);
}

}  // namespace sfv
