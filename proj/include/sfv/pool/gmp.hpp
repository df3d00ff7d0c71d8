#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sfv/encode/fisher.hpp"
#include "sfv/pool/solvers.hpp"

namespace sfv {

// N per-descriptor codes of dimension P, one per row.
class CodeMatrix {
 public:
  explicit CodeMatrix(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1) throw InputError("code matrix must be non-empty");
    if (!rows_.allFinite()) throw InputError("code matrix contains a non-finite value");
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(rows_.cols()); }
  const Matrix& matrix() const noexcept { return rows_; }

 private:
  Matrix rows_;
};

// Symmetric positive semidefinite N x N matrix of code inner products.
class KernelMatrix {
 public:
  // Validates symmetry (1e-9 relative to the largest entry) and PSD
  // (smallest eigenvalue >= -1e-8 * trace).
  explicit KernelMatrix(Eigen::MatrixXd k) : k_(std::move(k)) {
    if (k_.rows() < 1 || k_.rows() != k_.cols()) throw InputError("kernel matrix must be square and non-empty");
    if (!k_.allFinite()) throw InputError("kernel matrix contains a non-finite value");
    const double scale = std::max(1.0, k_.cwiseAbs().maxCoeff());
    if ((k_ - k_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw InputError("kernel matrix is not symmetric");
    k_ = 0.5 * (k_ + k_.transpose()).eval();
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k_, Eigen::EigenvaluesOnly).eigenvalues();
    if (ev.minCoeff() < -1e-8 * std::max(k_.trace(), 0.0) - 1e-300)
      throw InputError("kernel matrix is not positive semidefinite (min eigenvalue " +
                       std::to_string(ev.minCoeff()) + ")");
  }

  // Linear patch kernel of the rows: K = codes * codes^T. PSD by construction.
  static KernelMatrix from_codes(const CodeMatrix& codes) {
    Eigen::MatrixXd k = codes.matrix() * codes.matrix().transpose();
    return KernelMatrix(std::move(k), Trusted{});
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(k_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return k_; }

 private:
  struct Trusted {};
  KernelMatrix(Eigen::MatrixXd k, Trusted) : k_(std::move(k)) { k_ = 0.5 * (k_ + k_.transpose()).eval(); }
  Eigen::MatrixXd k_;
};

struct PoolingWeights {
  Vector alpha;
  double lambda = 0.0;
};

// Per-descriptor locality constraint: penalty 1 on selected entries and
// infinity elsewhere. Always has at least one selected entry.
class ConstraintVector {
 public:
  ConstraintVector(std::size_t size, std::vector<std::size_t> selected)
      : size_(size), selected_(std::move(selected)) {
    std::sort(selected_.begin(), selected_.end());
    selected_.erase(std::unique(selected_.begin(), selected_.end()), selected_.end());
    if (selected_.empty()) throw InputError("constraint vector must select at least one entry");
    if (selected_.back() >= size_) throw InputError("constraint vector index out of range");
  }

  static ConstraintVector all(std::size_t size) {
    std::vector<std::size_t> s(size);
    for (std::size_t i = 0; i < size; ++i) s[i] = i;
    return ConstraintVector(size, std::move(s));
  }

  std::size_t size() const noexcept { return size_; }
  const std::vector<std::size_t>& selected() const noexcept { return selected_; }
  bool is_selected(std::size_t j) const { return std::binary_search(selected_.begin(), selected_.end(), j); }
  double penalty(std::size_t j) const { return is_selected(j) ? 1.0 : std::numeric_limits<double>::infinity(); }
  std::vector<double> penalties() const {
    std::vector<double> d(size_, std::numeric_limits<double>::infinity());
    for (std::size_t j : selected_) d[j] = 1.0;
    return d;
  }

 private:
  std::size_t size_;
  std::vector<std::size_t> selected_;
};

// GMP in the primal: argmin ||codes * phi - 1_N||^2 + lambda ||phi||^2.
// Solved as a stacked least-squares problem [codes; sqrt(lambda) I] by QR when
// P is small enough, otherwise by CG on the normal equations.
inline Vector gmp_primal(const CodeMatrix& codes, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("gmp_primal: lambda must be a positive finite number");
  const Matrix& phi = codes.matrix();
  const Eigen::Index n = phi.rows(), p = phi.cols();
  if (p <= kDirectSolveLimit) {
    Eigen::MatrixXd stacked(n + p, p);
    stacked.topRows(n) = phi;
    stacked.bottomRows(p) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(p, p);
    Vector rhs = Vector::Zero(n + p);
    rhs.head(n).setOnes();
    return Eigen::HouseholderQR<Eigen::MatrixXd>(stacked).solve(rhs);
  }
  const Vector b = phi.transpose() * Vector::Ones(n);
  auto res = conjugate_gradient(
      [&](const Vector& v) -> Vector { return phi.transpose() * (phi * v) + lambda * v; }, b, 1e-10,
      10 * static_cast<std::size_t>(p));
  if (!res.converged) throw SingularityError("gmp_primal: conjugate gradient did not converge");
  return res.x;
}

// GMP in the dual: alpha = (K + lambda I)^-1 1_N. lambda == 0 is accepted only
// when K itself is numerically nonsingular.
inline PoolingWeights gmp_dual(const KernelMatrix& kernel, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("gmp_dual: lambda must be a non-negative finite number");
  const Eigen::Index n = kernel.matrix().rows();
  Eigen::MatrixXd a = kernel.matrix();
  a.diagonal().array() += lambda;
  try {
    return {solve_symmetric(a, Vector::Ones(n)), lambda};
  } catch (const SingularityError& e) {
    throw SingularityError(std::string("gmp_dual: K + lambda I is singular (lambda = ") +
                           std::to_string(lambda) + "): " + e.what());
  }
}

// Locality-constrained weights:
//   argmin ||K alpha - 1_N||^2 + lambda ||d .* alpha||^2
// Entries with infinite penalty are fixed at exactly zero and removed from the
// solve; the remaining block solves (K_S^T K_S + lambda diag(d_S)^2) alpha_S = K_S^T 1.
inline PoolingWeights sfv_weights(const KernelMatrix& kernel, std::span<const double> penalty, double lambda) {
  const Eigen::Index n = kernel.matrix().rows();
  if (penalty.size() != static_cast<std::size_t>(n))
    throw DimensionError("sfv_weights: penalty length must equal N");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("sfv_weights: lambda must be a positive finite number");
  std::vector<Eigen::Index> sel;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dj = penalty[static_cast<std::size_t>(j)];
    if (std::isnan(dj) || dj < 0.0) throw InputError("sfv_weights: penalties must be >= 0");
    if (std::isfinite(dj)) sel.push_back(j);
  }
  if (sel.empty()) throw InputError("sfv_weights: no entry is selected");

  const auto s = static_cast<Eigen::Index>(sel.size());
  Eigen::MatrixXd ks(n, s);
  for (Eigen::Index c = 0; c < s; ++c) ks.col(c) = kernel.matrix().col(sel[static_cast<std::size_t>(c)]);
  Eigen::MatrixXd a = ks.transpose() * ks;
  for (Eigen::Index c = 0; c < s; ++c) {
    const double dj = penalty[static_cast<std::size_t>(sel[static_cast<std::size_t>(c)])];
    a(c, c) += lambda * dj * dj;
  }
  const Vector rhs = ks.transpose() * Vector::Ones(n);
  const Vector sub = solve_symmetric(a, rhs);

  PoolingWeights w{Vector::Zero(n), lambda};
  for (Eigen::Index c = 0; c < s; ++c) w.alpha(sel[static_cast<std::size_t>(c)]) = sub(c);
  return w;
}

inline PoolingWeights sfv_weights(const KernelMatrix& kernel, const ConstraintVector& d, double lambda) {
  if (d.size() != kernel.size()) throw DimensionError("sfv_weights: constraint length must equal N");
  const auto pen = d.penalties();
  return sfv_weights(kernel, pen, lambda);
}

// Infinite-lambda limit with orthogonal codes: 1 on selected entries, 0 elsewhere.
inline PoolingWeights sfv_weights_limit(const ConstraintVector& d) {
  PoolingWeights w{Vector::Zero(static_cast<Eigen::Index>(d.size())),
                   std::numeric_limits<double>::infinity()};
  for (std::size_t j : d.selected()) w.alpha(static_cast<Eigen::Index>(j)) = 1.0;
  return w;
}

// sum_n alpha_n * row_n.
inline Vector weighted_pool(const CodeMatrix& codes, const Vector& alpha) {
  if (static_cast<std::size_t>(alpha.size()) != codes.size())
    throw InputError("weighted_pool: weight length " + std::to_string(alpha.size()) +
                     " != code count " + std::to_string(codes.size()));
  return codes.matrix().transpose() * alpha;
}

// ---- Subtask decomposition over mixture components ----

// N x 2MD matrix of unnormalized per-descriptor Fisher codes.
inline CodeMatrix fisher_code_matrix(const GaussianMixture& gmm, const DescriptorSet& descriptors) {
  if (descriptors.dim() != gmm.dim()) throw DimensionError("descriptor dim does not match mixture D");
  const auto len = static_cast<Eigen::Index>(2 * gmm.components() * gmm.dim());
  Matrix rows(static_cast<Eigen::Index>(descriptors.size()), len);
  for (std::size_t n = 0; n < descriptors.size(); ++n) {
    const auto code = fv_code_row(gmm, descriptors.row(n));
    std::copy(code.values().begin(), code.values().end(), rows.data() + static_cast<Eigen::Index>(n) * len);
  }
  return CodeMatrix(std::move(rows));
}

// The N x 2D block of component k.
inline CodeMatrix subtask_block(const CodeMatrix& codes, std::size_t k, std::size_t dim) {
  const auto start = static_cast<Eigen::Index>(2 * k * dim), width = static_cast<Eigen::Index>(2 * dim);
  if (start + width > codes.matrix().cols()) throw DimensionError("subtask block out of range");
  return CodeMatrix(codes.matrix().middleCols(start, width));
}

// Descriptors that selected component k, or nullopt if none did.
inline std::optional<ConstraintVector> subtask_constraint(const SelectionMask& mask, std::size_t k) {
  std::vector<std::size_t> sel;
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask.selects(n, k)) sel.push_back(n);
  if (sel.empty()) return std::nullopt;
  return ConstraintVector(mask.size(), std::move(sel));
}

enum class PoolingMode { kGmp, kSfv, kSfvLimit };

struct SubtaskPoolingResult {
  FisherCode pooled;
  std::vector<Vector> weights;  // one alpha per component (zeros when no descriptor selected it)
};

// Pools each component block independently with the requested weights and
// concatenates the results, scaled by 1/N to match the encoders. kSfvLimit
// reproduces sfv_encode before normalization.
inline SubtaskPoolingResult pool_subtasks(const GaussianMixture& gmm, const DescriptorSet& descriptors,
                                          PoolingMode mode, double lambda, std::size_t k) {
  const std::size_t m = gmm.components(), d = gmm.dim(), n = descriptors.size();
  const CodeMatrix codes = fisher_code_matrix(gmm, descriptors);
  std::optional<SelectionMask> mask;
  if (mode != PoolingMode::kGmp) mask.emplace(selection_mask(gmm, descriptors, k));
  SubtaskPoolingResult out{FisherCode(m, d), {}};
  out.weights.reserve(m);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < m; ++c) {
    const CodeMatrix block = subtask_block(codes, c, d);
    Vector alpha = Vector::Zero(static_cast<Eigen::Index>(n));
    if (mode == PoolingMode::kGmp) {
      alpha = gmp_dual(KernelMatrix::from_codes(block), lambda).alpha;
    } else if (const auto dvec = subtask_constraint(*mask, c)) {
      alpha = mode == PoolingMode::kSfvLimit
                  ? sfv_weights_limit(*dvec).alpha
                  : sfv_weights(KernelMatrix::from_codes(block), *dvec, lambda).alpha;
    }
    const Vector pooled = weighted_pool(block, alpha);
    double* dst = out.pooled.values().data() + 2 * c * d;
    for (Eigen::Index i = 0; i < pooled.size(); ++i) dst[i] = pooled(i) * inv_n;
    out.weights.push_back(std::move(alpha));
  }
  return out;
}

}  // namespace sfv
