#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "sfv/core/error.hpp"

namespace sfv {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// N x D matrix of local descriptors, one per row. Always non-empty and finite.
class DescriptorSet {
 public:
  explicit DescriptorSet(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw InputError("descriptor set must have N >= 1 and D >= 1");
    for (Eigen::Index i = 0; i < data_.size(); ++i)
      if (!std::isfinite(data_.data()[i]))
        throw InputError("descriptor set contains a non-finite value at flat index " +
                         std::to_string(i));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  std::span<const double> row(std::size_t n) const {
    return row_span(data_, static_cast<Eigen::Index>(n));
  }
  const Matrix& matrix() const noexcept { return data_; }

 private:
  Matrix data_;
};

}  // namespace sfv
