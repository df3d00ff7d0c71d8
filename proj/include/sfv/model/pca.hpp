#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sfv/core/types.hpp"

namespace sfv {

// Linear projection onto the leading principal directions. No whitening.
class PcaModel {
 public:
  PcaModel(Vector mean, Matrix projection, std::vector<double> explained_variance,
           std::vector<double> explained_ratio)
      : mean_(std::move(mean)),
        projection_(std::move(projection)),
        explained_variance_(std::move(explained_variance)),
        explained_ratio_(std::move(explained_ratio)) {
    if (projection_.rows() != mean_.size())
      throw DimensionError("pca projection rows must equal the input dimension");
    if (projection_.cols() < 1 || projection_.cols() > projection_.rows())
      throw DimensionError("pca output dimension must be in [1, input dimension]");
    const Matrix gram = projection_.transpose() * projection_;
    const Matrix eye = Matrix::Identity(gram.rows(), gram.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > 1e-8)
      throw InputError("pca projection columns are not orthonormal");
  }

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(projection_.cols()); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& projection() const noexcept { return projection_; }
  // Variance captured by each kept direction, descending.
  const std::vector<double>& explained_variance() const noexcept { return explained_variance_; }
  // explained_variance divided by the total variance of the fitted data.
  const std::vector<double>& explained_ratio() const noexcept { return explained_ratio_; }

 private:
  Vector mean_;
  Matrix projection_;
  std::vector<double> explained_variance_;
  std::vector<double> explained_ratio_;
};

// Fits a PCA projection to `output_dim` dimensions from the sample covariance
// (divisor N - 1, or N when N == 1).
inline PcaModel pca_fit(const DescriptorSet& descriptors, std::size_t output_dim) {
  const std::size_t n = descriptors.size(), dim = descriptors.dim();
  if (output_dim < 1 || output_dim > dim)
    throw DimensionError("pca output_dim " + std::to_string(output_dim) +
                         " must be in [1, " + std::to_string(dim) + "]");
  if (n < output_dim)
    throw InsufficientDataError("pca needs at least output_dim (" + std::to_string(output_dim) +
                                ") descriptors, got " + std::to_string(n));

  const Matrix& x = descriptors.matrix();
  const Vector mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  const double total = std::max(cov.trace(), 0.0);
  const double largest = std::max(evals(evals.size() - 1), 0.0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (largest > 0.0 && evals(i) > 1e-12 * largest) ++rank;
  if (rank < output_dim)
    throw RankError("pca input has rank " + std::to_string(rank) + ", cannot fit " +
                        std::to_string(output_dim) + " directions (achievable rank " +
                        std::to_string(rank) + ")",
                    rank);

  Matrix projection(dim, output_dim);
  std::vector<double> variance(output_dim), ratio(output_dim);
  for (std::size_t j = 0; j < output_dim; ++j) {
    const Eigen::Index src = evals.size() - 1 - static_cast<Eigen::Index>(j);
    Eigen::VectorXd v = evecs.col(src);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    projection.col(static_cast<Eigen::Index>(j)) = v;
    variance[j] = std::max(evals(src), 0.0);
    ratio[j] = total > 0.0 ? variance[j] / total : 0.0;
  }
  return PcaModel(mean, std::move(projection), std::move(variance), std::move(ratio));
}

// Returns (x - mean) * projection for every row.
inline DescriptorSet pca_apply(const PcaModel& model, const DescriptorSet& descriptors) {
  if (descriptors.dim() != model.input_dim())
    throw DimensionError("pca_apply: descriptor dim " + std::to_string(descriptors.dim()) +
                         " != model input dim " + std::to_string(model.input_dim()));
  Matrix out = (descriptors.matrix().rowwise() - model.mean().transpose()) * model.projection();
  return DescriptorSet(std::move(out));
}

}  // namespace sfv
