#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sfv/core/random.hpp"
#include "sfv/core/types.hpp"

namespace sfv {

// Feature rows with class labels in [0, class_count).
class LabeledCodes {
 public:
  LabeledCodes(Matrix features, std::vector<std::size_t> labels, std::size_t class_count)
      : features_(std::move(features)), labels_(std::move(labels)), class_count_(class_count) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
      throw DimensionError("labeled codes: one label per feature row required");
    if (!features_.allFinite()) throw InputError("labeled codes contain a non-finite feature");
    for (std::size_t l : labels_)
      if (l >= class_count_) throw InputError("label " + std::to_string(l) + " outside declared class set");
  }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  std::size_t class_count() const noexcept { return class_count_; }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

 private:
  Matrix features_;
  std::vector<std::size_t> labels_;
  std::size_t class_count_;
};

struct SvmConfig {
  double reg = 1e-4;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

// One-vs-rest linear model: score_c(x) = w_c . x + b_c.
struct LinearModel {
  Matrix weights;              // C x P
  std::vector<double> biases;  // C
  SvmConfig config;
  // objective[c][e]: regularized hinge objective of class c after epoch e.
  std::vector<std::vector<double>> objective;

  std::size_t class_count() const noexcept { return biases.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.cols()); }
};

namespace detail {

inline double hinge_objective(const Matrix& x, const std::vector<double>& y, const Vector& w, double b,
                              double reg) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double margin = y[static_cast<std::size_t>(i)] * (x.row(i).dot(w) + b);
    loss += std::max(0.0, 1.0 - margin);
  }
  return 0.5 * reg * w.squaredNorm() + loss / static_cast<double>(x.rows());
}

}  // namespace detail

// L2-regularized hinge loss minimized by stochastic subgradient descent, one
// binary problem per class. Step size 1/(reg * (t + 1/reg)), i.e. starting at
// 1 and decaying as 1/t; the bias is not regularized. Samples are visited in a
// seeded permutation per epoch shared by all classes.
inline LinearModel svm_train(const LabeledCodes& data, const SvmConfig& config = {}) {
  if (!(config.reg > 0.0)) throw ParameterError("svm_train: reg must be positive");
  if (config.epochs < 1) throw ParameterError("svm_train: epochs must be >= 1");
  const std::size_t c_count = data.class_count(), n = data.size();
  std::vector<std::size_t> per_class(c_count, 0);
  for (std::size_t l : data.labels()) ++per_class[l];
  std::size_t present = 0;
  for (std::size_t c : per_class) present += c > 0 ? 1 : 0;
  if (c_count < 2 || present < 2)
    throw DegenerateLabelError("svm_train: need at least two classes with examples");
  for (std::size_t c = 0; c < c_count; ++c)
    if (per_class[c] == 0) throw DegenerateLabelError("svm_train: class " + std::to_string(c) + " has no examples");

  Rng rng(config.seed);
  std::vector<std::vector<std::size_t>> order(config.epochs);
  for (auto& o : order) o = rng.permutation(n);

  const Matrix& x = data.features();
  LinearModel model{Matrix::Zero(static_cast<Eigen::Index>(c_count), x.cols()),
                    std::vector<double>(c_count, 0.0), config, std::vector<std::vector<double>>(c_count)};
  const double t0 = 1.0 / config.reg;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = data.labels()[i] == c ? 1.0 : -1.0;
    // w = scale * v keeps the shrink step O(1).
    Vector v = Vector::Zero(x.cols());
    double scale = 1.0, b = 0.0, t = 0.0;
    for (std::size_t e = 0; e < config.epochs; ++e) {
      for (std::size_t i : order[e]) {
        const double eta = 1.0 / (config.reg * (t + t0));
        const auto row = x.row(static_cast<Eigen::Index>(i));
        const double margin = y[i] * (scale * row.dot(v) + b);
        scale *= 1.0 - eta * config.reg;
        if (margin < 1.0) {
          v += (eta * y[i] / scale) * row.transpose();
          b += eta * y[i];
        }
        if (scale < 1e-9) {
          v *= scale;
          scale = 1.0;
        }
        t += 1.0;
      }
      model.objective[c].push_back(detail::hinge_objective(x, y, scale * v, b, config.reg));
    }
    model.weights.row(static_cast<Eigen::Index>(c)) = (scale * v).transpose();
    model.biases[c] = b;
  }
  return model;
}

struct Prediction {
  std::vector<std::size_t> labels;
  Matrix scores;  // N x C
};

// Argmax over per-class scores; equal scores resolve to the lowest class index.
inline Prediction svm_predict(const LinearModel& model, const Matrix& codes) {
  if (static_cast<std::size_t>(codes.cols()) != model.dim())
    throw DimensionError("svm_predict: code dim " + std::to_string(codes.cols()) + " != model dim " +
                         std::to_string(model.dim()));
  Prediction p;
  p.scores = codes * model.weights.transpose();
  for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 0; c < model.class_count(); ++c) {
      p.scores(i, static_cast<Eigen::Index>(c)) += model.biases[c];
      if (p.scores(i, static_cast<Eigen::Index>(c)) > p.scores(i, static_cast<Eigen::Index>(best))) best = c;
    }
    p.labels.push_back(best);
  }
  return p;
}

}  // namespace sfv
