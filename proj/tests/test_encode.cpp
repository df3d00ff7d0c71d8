#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sfv/encode/bow.hpp"
#include "sfv/encode/fisher.hpp"
#include "sfv/synth/datasets.hpp"

namespace {

using sfv::DescriptorSet;
using sfv::GaussianMixture;
using sfv::Matrix;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  sfv::Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

GaussianMixture with_mean(const GaussianMixture& g, std::size_t m, std::size_t d, double delta) {
  Matrix mu = g.means();
  mu(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d)) += delta;
  return GaussianMixture(g.weights(), mu, g.variances());
}

GaussianMixture with_sd(const GaussianMixture& g, std::size_t m, std::size_t d, double delta) {
  Matrix var = g.variances();
  double& v = var(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  v = std::pow(std::sqrt(v) + delta, 2);
  return GaussianMixture(g.weights(), g.means(), var);
}

bool close_rel(double a, double b, double rel, double abs_floor) {
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

// ---- per-descriptor codes ----

TEST(FvCodeRow, SingleComponentAtMean) {
  Matrix mu(1, 1), var(1, 1);
  mu << 2.5;
  var << 1.0;
  const GaussianMixture g({1.0}, mu, var);
  const double x[] = {2.5};
  const auto code = sfv::fv_code_row(g, x);
  ASSERT_EQ(code.size(), 2u);
  EXPECT_EQ(code.mean_block(0)[0], 0.0);
  EXPECT_NEAR(code.sigma_block(0)[0], -1.0 / std::sqrt(2.0), 1e-15);

  const auto g3 = sfv::synth::random_mixture(1, 3, 5);
  const auto c3 = sfv::fv_code_row(g3, vec(sfv::row_span(g3.means(), 0)));
  for (double v : c3.mean_block(0)) EXPECT_EQ(v, 0.0);
}

TEST(FvCodeRow, MatchesFiniteDifferencesOfLogDensity) {
  const auto g = sfv::synth::random_mixture(4, 3, 7, 1.0);
  sfv::Rng rng(8);
  const auto probes = sfv::synth::sample_mixture(g, 20, rng);
  const double h = 1e-4;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto x = probes.row(p);
    const auto code = sfv::fv_code_row(g, x);
    for (std::size_t m = 0; m < g.components(); ++m) {
      const double w = g.weights()[m];
      for (std::size_t d = 0; d < g.dim(); ++d) {
        const double sd = std::sqrt(g.variances()(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d)));
        const double fd_mu =
            (sfv::log_density(with_mean(g, m, d, h), x) - sfv::log_density(with_mean(g, m, d, -h), x)) / (2 * h);
        const double fd_sd =
            (sfv::log_density(with_sd(g, m, d, h), x) - sfv::log_density(with_sd(g, m, d, -h), x)) / (2 * h);
        const double mu_grad = code.mean_block(m)[d] * std::sqrt(w) / sd;
        const double sd_grad = code.sigma_block(m)[d] * std::sqrt(2 * w) / sd;
        EXPECT_TRUE(close_rel(mu_grad, fd_mu, 1e-4, 1e-9)) << mu_grad << " vs " << fd_mu;
        EXPECT_TRUE(close_rel(sd_grad, fd_sd, 1e-4, 1e-9)) << sd_grad << " vs " << fd_sd;
      }
    }
  }
}

TEST(FvCodeRow, RejectsNonFinite) {
  const auto g = sfv::synth::random_mixture(2, 2, 9);
  const double x[] = {1.0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(sfv::fv_code_row(g, x), sfv::InputError);
}

// ---- pooled encoders ----

TEST(FvEncode, OutputLengthsMatchCodeDimensions) {
  const DescriptorSet x(random_matrix(3, 64, 10));
  EXPECT_EQ(sfv::fv_encode(sfv::synth::random_mixture(256, 64, 11), x).size(), 32768u);
  EXPECT_EQ(sfv::fv_encode(sfv::synth::random_mixture(64, 64, 12), x).size(), 8192u);
}

TEST(FvEncode, SingleDescriptorEqualsNormalizedRow) {
  const auto g = sfv::synth::random_mixture(5, 4, 13, 1.0);
  const Matrix x = random_matrix(1, 4, 14);
  auto row = vec(sfv::fv_code_row(g, sfv::row_span(x, 0)).values());
  EXPECT_LT(oracle::rel_diff(vec(sfv::fv_encode(g, DescriptorSet(x), false).values()), row), 1e-12);
  sfv::power_normalize_inplace(row);
  sfv::l2_normalize_inplace(row);
  EXPECT_LT(oracle::rel_diff(vec(sfv::fv_encode(g, DescriptorSet(x), true).values()), row), 1e-12);
}

TEST(FvEncode, MatchesClosedFormOracle) {
  const auto g = sfv::synth::random_mixture(6, 5, 15, 1.0);
  sfv::Rng rng(16);
  const auto x = sfv::synth::sample_mixture(g, 40, rng);
  const auto ref = oracle::masked_fisher(g, x.matrix(), g.components());
  EXPECT_LT(oracle::rel_diff(vec(sfv::fv_encode(g, x, false).values()), ref), 1e-10);
}

TEST(FvEncode, EmptyAndMismatchedInputs) {
  EXPECT_THROW(DescriptorSet(Matrix(0, 3)), sfv::InputError);
  const auto g = sfv::synth::random_mixture(2, 3, 17);
  EXPECT_THROW(sfv::fv_encode(g, DescriptorSet(random_matrix(4, 2, 1))), sfv::DimensionError);
}

TEST(SelectTopK, Examples) {
  const auto g = sfv::synth::random_mixture(6, 2, 18);
  const double x[] = {0.3, -0.2};
  auto all = sfv::select_top_k(g, x, 6);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));

  Matrix mu(2, 1), var(2, 1);
  mu << 0.0, 4.0;
  var << 1.0, 1.0;
  const GaussianMixture sym({0.5, 0.5}, mu, var);
  const double mid[] = {2.0};
  EXPECT_EQ(sfv::select_top_k(sym, mid, 1), std::vector<std::size_t>{0});
  EXPECT_THROW(sfv::select_top_k(sym, mid, 3), sfv::ParameterError);
  EXPECT_THROW(sfv::select_top_k(sym, mid, 0), sfv::ParameterError);
}

TEST(SelectTopK, MatchesFullSortOracle) {
  const auto g = sfv::synth::random_mixture(8, 4, 19, 1.0);
  sfv::Rng rng(20);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.normal(0.0, 2.0);
    const auto expected = oracle::top_k_by_sort(oracle::posteriors(g, x), 3);
    EXPECT_EQ(sfv::select_top_k(g, x, 3), expected);
  }
}

TEST(SelectTopK, PropertyTiesResolveToLowerIndex) {
  sfv::Rng rng(40);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 1 + rng.index(40), k = 1 + rng.index(m);
    std::vector<double> v(m);
    for (double& x : v) x = static_cast<double>(rng.index(4));  // many exact ties
    EXPECT_EQ(sfv::top_k_indices(v, k), oracle::top_k_by_sort(v, k));
  }
}

TEST(SfvEncode, DroppedClusterBlocksAreExactlyZero) {
  const auto g = sfv::synth::random_mixture(3, 4, 21, 1.0);
  const Matrix x = random_matrix(1, 4, 22);
  const auto top = sfv::select_top_k(g, sfv::row_span(x, 0), 2);
  const auto code = sfv::sfv_encode(g, DescriptorSet(x), 2, false);
  for (std::size_t m = 0; m < 3; ++m) {
    const bool kept = std::find(top.begin(), top.end(), m) != top.end();
    const auto block = code.block(m);
    const bool all_zero = std::all_of(block.begin(), block.end(), [](double v) { return v == 0.0; });
    EXPECT_EQ(all_zero, !kept) << "component " << m;
  }
}

TEST(SfvEncode, MatchesMaskThenEncodeOracle) {
  const auto g = sfv::synth::random_mixture(8, 6, 23, 1.0);
  sfv::Rng rng(24);
  const auto x = sfv::synth::sample_mixture(g, 50, rng);
  const auto ref = oracle::masked_fisher(g, x.matrix(), 3);
  EXPECT_LT(oracle::rel_diff(vec(sfv::sfv_encode(g, x, 3, false).values()), ref), 1e-10);
}

TEST(SfvEncode, InvalidK) {
  const auto g = sfv::synth::random_mixture(4, 2, 25);
  const DescriptorSet x(random_matrix(3, 2, 26));
  EXPECT_THROW(sfv::sfv_encode(g, x, 0), sfv::ParameterError);
  EXPECT_THROW(sfv::sfv_encode(g, x, 5), sfv::ParameterError);
}

TEST(SfvEncode, PropertyFullKEqualsFisherVector) {
  sfv::Rng rng(27);
  for (std::uint64_t t = 0; t < 25; ++t) {
    const std::size_t m = 1 + rng.index(32), d = 1 + rng.index(12), n = 1 + rng.index(200);
    const auto g = sfv::synth::random_mixture(m, d, 300 + t, 0.5 + 3 * rng.uniform());
    const DescriptorSet x(random_matrix(n, d, 400 + t, 3.0));
    for (bool norm : {false, true})
      EXPECT_LT(oracle::rel_diff(vec(sfv::sfv_encode(g, x, m, norm).values()), vec(sfv::fv_encode(g, x, norm).values())),
                1e-6);
  }
}

TEST(SfvEncode, PropertySingleDescriptorHasExactlyMMinusKZeroBlocks) {
  sfv::Rng rng(28);
  for (std::uint64_t t = 0; t < 25; ++t) {
    const std::size_t m = 2 + rng.index(20), d = 1 + rng.index(8), k = 1 + rng.index(m - 1);
    const auto g = sfv::synth::random_mixture(m, d, 500 + t, 1.0);
    const auto x = sfv::synth::sample_mixture(g, 1, rng);
    const auto code = sfv::sfv_encode(g, x, k, false);
    std::size_t zero_blocks = 0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto b = code.block(c);
      zero_blocks += std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; }) ? 1 : 0;
    }
    // A selected block can only vanish if its posterior underflows to 0.
    EXPECT_GE(zero_blocks, m - k);
    const auto gamma = sfv::posteriors(g, x.row(0));
    if (std::all_of(gamma.begin(), gamma.end(), [](double v) { return v > 0.0; })) EXPECT_EQ(zero_blocks, m - k);
  }
}

TEST(Encoders, PropertyPermutationInvariantAndUnitNorm) {
  sfv::Rng rng(29);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const std::size_t m = 2 + rng.index(16), d = 1 + rng.index(8), n = 2 + rng.index(100);
    const auto g = sfv::synth::random_mixture(m, d, 600 + t, 1.5);
    const Matrix x = random_matrix(n, d, 700 + t, 2.0);
    const auto perm = rng.permutation(n);
    Matrix shuffled(x.rows(), x.cols());
    for (std::size_t i = 0; i < n; ++i) shuffled.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
    const std::size_t k = 1 + rng.index(m);
    const auto a = sfv::sfv_encode(g, DescriptorSet(x), k, true);
    const auto b = sfv::sfv_encode(g, DescriptorSet(shuffled), k, true);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-9);
    double ss = 0.0;
    for (double v : a.values()) ss += v * v;
    EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-9);
  }
}

TEST(Encoders, ThreadedAccumulationIsDeterministicAndClose) {
  const auto g = sfv::synth::random_mixture(16, 8, 31);
  const DescriptorSet x(random_matrix(500, 8, 32, 3.0));
  const auto one = vec(sfv::fv_encode(g, x, false, 1).values());
  const auto three_a = vec(sfv::fv_encode(g, x, false, 3).values());
  const auto three_b = vec(sfv::fv_encode(g, x, false, 3).values());
  EXPECT_EQ(three_a, three_b);
  EXPECT_LT(oracle::rel_diff(one, three_a), 1e-6);
  EXPECT_LT(oracle::rel_diff(vec(sfv::sfv_encode(g, x, 4, false, 1).values()),
                             vec(sfv::sfv_encode(g, x, 4, false, 4).values())),
            1e-6);
}

// ---- BOW ----

TEST(Bow, OneHotAndConcentratedMass) {
  Matrix c(4, 2);
  c << 0, 0, 10, 0, 0, 10, 10, 10;
  const sfv::Codebook book(c);
  Matrix one(1, 2);
  one << 9.0, 1.0;
  const auto h = sfv::bow_encode(book, DescriptorSet(one));
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{0, 1, 0, 0}));
  EXPECT_EQ(h.values, (std::vector<double>{0, 1, 0, 0}));

  Matrix at2(5, 2);
  for (int i = 0; i < 5; ++i) at2.row(i) = c.row(2);
  const auto h2 = sfv::bow_encode(book, DescriptorSet(at2));
  EXPECT_EQ(h2.counts, (std::vector<std::size_t>{0, 0, 5, 0}));
  EXPECT_EQ(h2.values[2], 1.0);
}

TEST(Bow, MatchesBruteForceNearestCentroidCounts) {
  const Matrix c = random_matrix(8, 3, 33, 2.0);
  const Matrix x = random_matrix(100, 3, 34, 2.0);
  const auto h = sfv::bow_encode(sfv::Codebook(c), DescriptorSet(x));
  std::vector<std::size_t> counts(8, 0);
  for (Eigen::Index i = 0; i < 100; ++i) {
    Eigen::Index best = 0;
    (c.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    ++counts[static_cast<std::size_t>(best)];
  }
  EXPECT_EQ(h.counts, counts);
  double ss = 0.0;
  for (double v : h.values) ss += v * v;
  EXPECT_NEAR(ss, 1.0, 1e-12);
}

TEST(Bow, KMeansCodebookRecoversSeparatedClusters) {
  Matrix x(60, 2);
  sfv::Rng rng(35);
  for (Eigen::Index i = 0; i < 60; ++i) {
    x(i, 0) = rng.normal(i < 30 ? -20.0 : 20.0, 1.0);
    x(i, 1) = rng.normal(0.0, 1.0);
  }
  const auto book = sfv::kmeans(DescriptorSet(x), 2, {.seed = 3});
  const double c0 = book.centroids()(0, 0), c1 = book.centroids()(1, 0);
  EXPECT_NEAR(std::min(c0, c1), x.topRows(30).col(0).mean(), 1e-9);
  EXPECT_NEAR(std::max(c0, c1), x.bottomRows(30).col(0).mean(), 1e-9);
}

// ---- normalization ----

TEST(PowerNormalize, Examples) {
  const std::vector<double> v{4.0, -9.0, 0.0};
  EXPECT_EQ(sfv::power_normalize(v, 0.5), (std::vector<double>{2.0, -3.0, 0.0}));
  EXPECT_EQ(sfv::power_normalize(v, 1.0), v);
  EXPECT_THROW(sfv::power_normalize(v, 0.0), sfv::ParameterError);
  EXPECT_THROW(sfv::power_normalize(v, 1.5), sfv::ParameterError);
}

TEST(PowerNormalize, SquaringRecoversMagnitude) {
  const Matrix r = random_matrix(1, 200, 36, 5.0);
  const auto v = vec(sfv::row_span(r, 0));
  const auto out = sfv::power_normalize(v, 0.5);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(out[i] * out[i], std::fabs(v[i]), 1e-12 * std::max(1.0, std::fabs(v[i])));
    EXPECT_EQ(std::signbit(out[i]), std::signbit(v[i]));
  }
}

TEST(L2Normalize, Examples) {
  const auto a = sfv::l2_normalize(std::vector<double>{3.0, 4.0});
  EXPECT_NEAR(a.values[0], 0.6, 1e-15);
  EXPECT_NEAR(a.values[1], 0.8, 1e-15);
  EXPECT_FALSE(a.zero_norm);
  const std::vector<double> unit{0.0, 1.0, 0.0};
  EXPECT_EQ(sfv::l2_normalize(unit).values, unit);
  const auto z = sfv::l2_normalize(std::vector<double>{0.0, 0.0});
  EXPECT_TRUE(z.zero_norm);
  EXPECT_EQ(z.values, (std::vector<double>{0.0, 0.0}));
  const Matrix r = random_matrix(1, 300, 37, 10.0);
  const auto n = sfv::l2_normalize(sfv::row_span(r, 0)).values;
  double ss = 0.0;
  for (double v : n) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-12);
}

}  // namespace
