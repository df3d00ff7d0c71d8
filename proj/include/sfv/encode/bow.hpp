#pragma once

#include <cstddef>
#include <vector>

#include "sfv/encode/normalize.hpp"
#include "sfv/model/gmm.hpp"
#include "sfv/model/kmeans.hpp"

namespace sfv {

struct BowHistogram {
  std::vector<std::size_t> counts;
  std::vector<double> values;  // counts, L2-normalized
};

// Hard-assignment histogram over the codebook, L2-normalized.
inline BowHistogram bow_encode(const Matrix& centroids, const DescriptorSet& descriptors) {
  if (static_cast<std::size_t>(centroids.cols()) != descriptors.dim())
    throw DimensionError("bow_encode: codebook dim does not match descriptor dim");
  BowHistogram h;
  h.counts.assign(static_cast<std::size_t>(centroids.rows()), 0);
  for (std::size_t n = 0; n < descriptors.size(); ++n) ++h.counts[nearest_centroid(centroids, descriptors.row(n))];
  h.values.assign(h.counts.begin(), h.counts.end());
  l2_normalize_inplace(h.values);
  return h;
}

inline BowHistogram bow_encode(const Codebook& codebook, const DescriptorSet& descriptors) {
  return bow_encode(codebook.centroids(), descriptors);
}

// Uses the mixture means as the vocabulary.
inline BowHistogram bow_encode(const GaussianMixture& gmm, const DescriptorSet& descriptors) {
  return bow_encode(gmm.means(), descriptors);
}

}  // namespace sfv
