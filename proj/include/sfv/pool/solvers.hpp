#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sfv/core/types.hpp"

namespace sfv {

// Systems up to this size are solved directly; larger ones by conjugate gradient.
inline constexpr Eigen::Index kDirectSolveLimit = 4096;

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Conjugate gradient for a symmetric positive definite operator given as
// apply(v) -> A v. Stops when ||b - A x|| <= tol * ||b||.
template <typename Apply>
CgResult conjugate_gradient(Apply&& apply, const Vector& b, double tol, std::size_t max_iterations) {
  CgResult out;
  out.x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  Vector r = b, p = r;
  double rr = r.squaredNorm();
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const Vector ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    out.x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    out.iterations = it + 1;
    if (std::sqrt(rr_next) <= tol * bnorm) {
      rr = rr_next;
      out.converged = true;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  out.relative_residual = std::sqrt(rr) / bnorm;
  return out;
}

// Solves A x = b for symmetric positive (semi)definite A. Throws
// SingularityError when the factorization detects a singular matrix.
inline Vector solve_symmetric(const Eigen::MatrixXd& a, const Vector& b) {
  const Eigen::Index n = a.rows();
  if (n <= kDirectSolveLimit) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw SingularityError("symmetric factorization failed");
    const Vector diag = ldlt.vectorD();
    const double scale = diag.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || diag.minCoeff() <= 1e-14 * scale * static_cast<double>(n))
      throw SingularityError("system matrix is numerically singular");
    return ldlt.solve(b);
  }
  auto res = conjugate_gradient([&](const Vector& v) -> Vector { return a * v; }, b, 1e-10,
                                10 * static_cast<std::size_t>(n));
  if (!res.converged)
    throw SingularityError("conjugate gradient did not converge (relative residual " +
                           std::to_string(res.relative_residual) + ")");
  return res.x;
}

}  // namespace sfv
