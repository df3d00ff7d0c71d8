#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sfv/analysis/complexity.hpp"
#include "sfv/core/random.hpp"
#include "sfv/encode/fisher.hpp"

namespace sfv {

struct SimilarityPair {
  std::size_t first;
  std::size_t second;
  double descriptor_cosine;
  double code_cosine;
};

struct SimilarityReport {
  EncoderKind kind = EncoderKind::kFv;
  std::size_t k = 0;
  std::vector<SimilarityPair> pairs;
  std::size_t excluded_pairs = 0;  // pairs involving a zero-norm descriptor or code
  std::optional<double> pearson;   // undefined with < 2 pairs or zero variance
};

// Cosine similarity, or nullopt if either vector has zero norm.
inline std::optional<double> cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return std::nullopt;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

// Pearson correlation by a single-pass co-moment update.
inline std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson_correlation: length mismatch");
  if (x.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double dx = x[i] - mx, dy = y[i] - my;
    mx += dx / n;
    my += dy / n;
    sxx += dx * (x[i] - mx);
    syy += dy * (y[i] - my);
    sxy += dx * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Uniform sample of `count` rows without replacement (all rows if count >= N).
inline DescriptorSet sample_descriptors(const DescriptorSet& set, std::size_t count, std::uint64_t seed) {
  if (count >= set.size()) return set;
  Rng rng(seed);
  const auto perm = rng.permutation(set.size());
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(set.dim()));
  for (std::size_t i = 0; i < count; ++i)
    out.row(static_cast<Eigen::Index>(i)) = set.matrix().row(static_cast<Eigen::Index>(perm[i]));
  return DescriptorSet(std::move(out));
}

// Pairwise cosine similarities of descriptors against those of their
// unnormalized per-descriptor codes, over all pairs i < j.
inline SimilarityReport similarity_correspondence(const GaussianMixture& gmm, const DescriptorSet& sample,
                                                  EncoderKind kind, std::size_t k) {
  if (sample.size() < 2) throw InputError("similarity_correspondence: need at least 2 descriptors");
  if (kind == EncoderKind::kBow) throw ParameterError("similarity_correspondence: fv or sfv only");
  if (sample.dim() != gmm.dim()) throw DimensionError("descriptor dim does not match mixture D");
  SimilarityReport rep;
  rep.kind = kind;
  rep.k = kind == EncoderKind::kSfv ? k : gmm.components();
  std::vector<FisherCode> codes;
  codes.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i)
    codes.push_back(kind == EncoderKind::kSfv ? sfv_code_row(gmm, sample.row(i), k) : fv_code_row(gmm, sample.row(i)));

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = i + 1; j < sample.size(); ++j) {
      const auto dc = cosine_similarity(sample.row(i), sample.row(j));
      const auto cc = cosine_similarity(codes[i].values(), codes[j].values());
      if (!dc || !cc) {
        ++rep.excluded_pairs;
        continue;
      }
      rep.pairs.push_back({i, j, *dc, *cc});
      xs.push_back(*dc);
      ys.push_back(*cc);
    }
  }
  rep.pearson = pearson_correlation(xs, ys);
  return rep;
}

}  // namespace sfv
