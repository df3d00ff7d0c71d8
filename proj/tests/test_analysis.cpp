#include <gtest/gtest.h>

#include <cmath>

#include "sfv/analysis/bench.hpp"
#include "sfv/analysis/complexity.hpp"
#include "sfv/analysis/similarity.hpp"
#include "sfv/synth/datasets.hpp"

namespace {

using sfv::EncoderKind;

TEST(Complexity, Examples) {
  EXPECT_DOUBLE_EQ(sfv::complexity_predict(256, 64, 5, EncoderKind::kFv).total(), 180224.0);
  EXPECT_DOUBLE_EQ(sfv::complexity_predict(256, 64, 5, EncoderKind::kSfv).total(), 51712.0);
  EXPECT_NEAR(sfv::predicted_speedup(256, 64, 5), 180224.0 / 51712.0, 1e-15);
  EXPECT_THROW(sfv::complexity_predict(8, 4, 9, EncoderKind::kSfv), sfv::ParameterError);
  EXPECT_THROW(sfv::complexity_predict(8, 4, 0, EncoderKind::kFv), sfv::ParameterError);
}

TEST(Complexity, FullSelectionCostsTheSame) {
  for (std::size_t m : {1u, 7u, 64u})
    EXPECT_DOUBLE_EQ(sfv::complexity_predict(m, 16, m, EncoderKind::kSfv).total(),
                     sfv::complexity_predict(m, 16, m, EncoderKind::kFv).total());
}

TEST(Complexity, PropertySpeedupGrowsWithComponents) {
  for (std::size_t k : {1u, 5u, 10u}) {
    double prev = 0.0;
    for (std::size_t m = 16; m <= 1024; m *= 2) {
      const double r = sfv::predicted_speedup(m, 64, k);
      EXPECT_GT(r, prev);
      EXPECT_LT(r, 11.0 / 3.0);
      prev = r;
    }
  }
}

TEST(Complexity, KindNamesRoundTrip) {
  for (auto k : {EncoderKind::kFv, EncoderKind::kSfv, EncoderKind::kBow})
    EXPECT_EQ(sfv::parse_encoder_kind(sfv::to_string(k)), k);
  EXPECT_THROW(sfv::parse_encoder_kind("vlad"), sfv::ParameterError);
}

double two_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

TEST(Pearson, MatchesTwoPassOracle) {
  sfv::Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.index(500);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal(1e3, 1.0);
      y[i] = 0.3 * x[i] + rng.normal();
    }
    EXPECT_NEAR(*sfv::pearson_correlation(x, y), two_pass_pearson(x, y), 1e-12);
  }
}

TEST(Pearson, UndefinedCases) {
  EXPECT_FALSE(sfv::pearson_correlation(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
  EXPECT_FALSE(
      sfv::pearson_correlation(std::vector<double>{1.0, 1.0, 1.0}, std::vector<double>{1.0, 2.0, 3.0}).has_value());
  EXPECT_NEAR(*sfv::pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{-2, -4, -6}), -1.0, 1e-15);
}

TEST(Cosine, Examples) {
  EXPECT_NEAR(*sfv::cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 2}), 0.0, 1e-15);
  EXPECT_NEAR(*sfv::cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 1.0, 1e-15);
  EXPECT_FALSE(sfv::cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 2}).has_value());
}

TEST(Similarity, IdenticalDescriptorsGiveUnitCodeCosine) {
  const auto g = sfv::synth::random_mixture(4, 3, 2);
  sfv::Matrix x(3, 3);
  x << 0.5, -1, 2, 0.5, -1, 2, 0.5, -1, 2;
  const auto rep = sfv::similarity_correspondence(g, sfv::DescriptorSet(x), EncoderKind::kSfv, 2);
  ASSERT_EQ(rep.pairs.size(), 3u);
  for (const auto& p : rep.pairs) {
    EXPECT_NEAR(p.descriptor_cosine, 1.0, 1e-12);
    EXPECT_NEAR(p.code_cosine, 1.0, 1e-12);
  }
  EXPECT_FALSE(rep.pearson.has_value());  // zero variance
}

TEST(Similarity, TwoDescriptorsLeaveCorrelationUndefined) {
  const auto g = sfv::synth::random_mixture(4, 3, 3);
  sfv::Rng rng(4);
  const auto rep =
      sfv::similarity_correspondence(g, sfv::synth::sample_mixture(g, 2, rng), EncoderKind::kFv, 4);
  EXPECT_EQ(rep.pairs.size(), 1u);
  EXPECT_FALSE(rep.pearson.has_value());
}

TEST(Similarity, PairCountAndSampling) {
  const auto g = sfv::synth::random_mixture(6, 4, 5);
  sfv::Rng rng(6);
  const auto all = sfv::synth::sample_mixture(g, 100, rng);
  const auto s = sfv::sample_descriptors(all, 20, 7);
  EXPECT_EQ(s.size(), 20u);
  EXPECT_EQ(sfv::sample_descriptors(all, 20, 7).matrix(), s.matrix());
  const auto rep = sfv::similarity_correspondence(g, s, EncoderKind::kFv, 6);
  EXPECT_EQ(rep.pairs.size() + rep.excluded_pairs, 190u);
  EXPECT_TRUE(rep.pearson.has_value());
  EXPECT_THROW(sfv::similarity_correspondence(g, s, EncoderKind::kBow, 6), sfv::ParameterError);
}

TEST(Bench, RecordSanity) {
  const auto g = sfv::synth::random_mixture(8, 4, 8);
  sfv::Rng rng(9);
  std::vector<sfv::DescriptorSet> images;
  for (int i = 0; i < 3; ++i) images.push_back(sfv::synth::sample_mixture(g, 50, rng));
  sfv::BenchConfig cfg;
  cfg.repetitions = 3;
  const auto r = sfv::bench_encode(g, images, EncoderKind::kSfv, 2, cfg);
  EXPECT_EQ(r.components, 8u);
  EXPECT_EQ(r.dim, 4u);
  EXPECT_EQ(r.images, 3u);
  EXPECT_EQ(r.descriptors_per_image, 50u);
  EXPECT_EQ(r.samples.size(), 3u);
  EXPECT_GT(r.median_seconds, 0.0);
  EXPECT_GE(r.iqr_seconds, 0.0);
  const auto cmp = sfv::bench_compare(g, images, 2, cfg);
  EXPECT_GT(cmp.measured_ratio, 0.0);
  EXPECT_DOUBLE_EQ(cmp.predicted_ratio, sfv::predicted_speedup(8, 4, 2));
}

TEST(Bench, RejectsBadConfiguration) {
  const auto g = sfv::synth::random_mixture(4, 2, 10);
  sfv::Rng rng(11);
  std::vector<sfv::DescriptorSet> images{sfv::synth::sample_mixture(g, 5, rng)};
  sfv::BenchConfig cfg;
  cfg.repetitions = 2;
  EXPECT_THROW(sfv::bench_encode(g, images, EncoderKind::kFv, 1, cfg), sfv::ParameterError);
  EXPECT_THROW(sfv::bench_encode(g, std::span<const sfv::DescriptorSet>{}, EncoderKind::kFv, 1), sfv::InputError);
  EXPECT_THROW(sfv::bench_compare(g, images, 5), sfv::ParameterError);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(sfv::quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(sfv::quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sfv::quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
}

}  // namespace
