#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sfv/core/types.hpp"

namespace sfv {

// Numerically stable log(sum(exp(v))).
inline double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// Diagonal-covariance Gaussian mixture. Immutable once built; all derived
// constants used by the encoders are computed in the constructor.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, Matrix means, Matrix variances)
      : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
    const auto m = static_cast<Eigen::Index>(weights_.size());
    if (m < 1) throw InputError("mixture needs at least one component");
    if (means_.rows() != m || variances_.rows() != m)
      throw DimensionError("mixture means/variances must have one row per component");
    if (means_.cols() < 1 || variances_.cols() != means_.cols())
      throw DimensionError("mixture means and variances must share dimension D >= 1");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw InputError("mixture weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw InputError("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    if (!means_.allFinite()) throw InputError("mixture means must be finite");
    for (Eigen::Index i = 0; i < variances_.size(); ++i) {
      const double v = variances_.data()[i];
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError("mixture variances must be positive");
    }

    const double d = static_cast<double>(dim());
    inv_var_ = variances_.cwiseInverse();
    inv_sd_ = variances_.cwiseSqrt().cwiseInverse();
    log_norm_.resize(weights_.size());
    mean_coef_.resize(weights_.size());
    sigma_coef_.resize(weights_.size());
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      const double log_det = variances_.row(r).array().log().sum();
      log_norm_[k] = std::log(weights_[k]) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
      mean_coef_[k] = 1.0 / std::sqrt(weights_[k]);
      sigma_coef_[k] = 1.0 / std::sqrt(2.0 * weights_[k]);
    }

    // Batched form: with c the mean of the component means, u = x - c and
    // v_m = mu_m - c,  sum_j iv (x_j - mu_j)^2 = iv.u^2 - 2 (iv*v).u + iv.v^2.
    // Centering keeps the cancellation error near eps times the squared
    // distances involved rather than the squared raw coordinates.
    const Eigen::Index dd = means_.cols();
    center_ = means_.colwise().mean();
    const Matrix v = means_.rowwise() - center_;
    quad_.resize(2 * dd, m);
    quad_.topRows(dd) = -0.5 * inv_var_.transpose();
    quad_.bottomRows(dd) = v.cwiseProduct(inv_var_).transpose();
    quad_offset_.resize(m);
    for (Eigen::Index k = 0; k < m; ++k)
      quad_offset_(k) = log_norm_[static_cast<std::size_t>(k)] -
                        0.5 * v.row(k).cwiseProduct(v.row(k)).cwiseProduct(inv_var_.row(k)).sum();
  }

  std::size_t components() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(means_.cols()); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const Matrix& means() const noexcept { return means_; }
  const Matrix& variances() const noexcept { return variances_; }

  // Per-component log(w_m) + log N(x; mu_m, diag(var_m)). `out` has M entries.
  // No validation; callers check dimensions and finiteness.
  void weighted_log_probs(std::span<const double> x, std::span<double> out) const {
    const std::size_t dd = dim();
    for (std::size_t k = 0; k < components(); ++k) {
      const double* mu = means_.data() + k * dd;
      const double* iv = inv_var_.data() + k * dd;
      // Four independent partial sums: no single serial add chain, fixed order.
      double q0 = 0.0, q1 = 0.0, q2 = 0.0, q3 = 0.0;
      std::size_t j = 0;
      for (; j + 4 <= dd; j += 4) {
        const double d0 = x[j] - mu[j], d1 = x[j + 1] - mu[j + 1];
        const double d2 = x[j + 2] - mu[j + 2], d3 = x[j + 3] - mu[j + 3];
        q0 += d0 * d0 * iv[j];
        q1 += d1 * d1 * iv[j + 1];
        q2 += d2 * d2 * iv[j + 2];
        q3 += d3 * d3 * iv[j + 3];
      }
      for (; j < dd; ++j) {
        const double diff = x[j] - mu[j];
        q0 += diff * diff * iv[j];
      }
      out[k] = log_norm_[k] - 0.5 * ((q0 + q1) + (q2 + q3));
    }
  }

  // weighted_log_probs for every row of `x` at once (out is rows x M), as one
  // matrix product. `work` is caller-owned scratch. Agrees with the per-row
  // form up to rounding; no validation.
  void weighted_log_probs_batch(const Eigen::Ref<const Matrix>& x, Matrix& out, Matrix& work) const {
    const Eigen::Index b = x.rows(), dd = means_.cols();
    work.resize(b, 2 * dd);
    work.rightCols(dd) = x.rowwise() - center_;
    work.leftCols(dd) = work.rightCols(dd).array().square().matrix();
    out.resize(b, static_cast<Eigen::Index>(components()));
    out.noalias() = work * quad_;
    out.rowwise() += quad_offset_;
  }

  // Raw access for the encoders' inner loops.
  const double* mean_row(std::size_t k) const { return means_.data() + k * dim(); }
  const double* inv_sd_row(std::size_t k) const { return inv_sd_.data() + k * dim(); }
  double mean_coef(std::size_t k) const { return mean_coef_[k]; }   // 1/sqrt(w)
  double sigma_coef(std::size_t k) const { return sigma_coef_[k]; } // 1/sqrt(2w)

  void check_input(std::span<const double> x) const {
    if (x.size() != dim())
      throw DimensionError("input has length " + std::to_string(x.size()) + ", mixture D = " +
                           std::to_string(dim()));
    if (!all_finite(x)) throw InputError("input vector contains a non-finite value");
  }

 private:
  std::vector<double> weights_;
  Matrix means_;
  Matrix variances_;
  Matrix inv_var_;
  Matrix inv_sd_;
  std::vector<double> log_norm_;
  std::vector<double> mean_coef_;
  std::vector<double> sigma_coef_;
  Eigen::RowVectorXd center_;
  Matrix quad_;                      // 2D x M
  Eigen::RowVectorXd quad_offset_;   // M
};

// Posterior responsibilities of every component for one descriptor.
using PosteriorRow = std::vector<double>;

inline double log_density(const GaussianMixture& gmm, std::span<const double> x) {
  gmm.check_input(x);
  std::vector<double> lp(gmm.components());
  gmm.weighted_log_probs(x, lp);
  return log_sum_exp(lp);
}

// Normalizes weighted log-probabilities in place into posteriors and returns
// the log-density. Terms below kPosteriorFloor relative to the largest become
// exactly 0.
inline constexpr double kPosteriorFloor = 0x1p-958;  // 2^64 * DBL_MIN

inline double normalize_log_probs(std::span<double> lp) {
  Eigen::Map<Eigen::ArrayXd> a(lp.data(), static_cast<Eigen::Index>(lp.size()));
  const double hi = a.maxCoeff();
  if (!std::isfinite(hi)) {
    a = (a - hi).exp();
    return hi;
  }
  // The floor keeps every surviving term normal even after dividing by a sum
  // of up to 2^64 terms. Subnormal operands are very slow on x86.
  static const double kLogFloor = std::log(kPosteriorFloor);
  a = (a - hi).max(kLogFloor - 1.0).exp();
  for (double& v : lp) v = v < kPosteriorFloor ? 0.0 : v;
  const double acc = a.sum();
  a *= 1.0 / acc;
  return hi + std::log(acc);
}

inline PosteriorRow posteriors(const GaussianMixture& gmm, std::span<const double> x) {
  gmm.check_input(x);
  PosteriorRow row(gmm.components());
  gmm.weighted_log_probs(x, row);
  normalize_log_probs(row);
  return row;
}

}  // namespace sfv
