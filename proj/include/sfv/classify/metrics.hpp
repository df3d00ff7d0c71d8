#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfv/core/types.hpp"

namespace sfv {

inline double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size())
    throw InputError("accuracy: prediction/truth length mismatch (" + std::to_string(predicted.size()) +
                     " vs " + std::to_string(truth.size()) + ")");
  if (truth.empty()) throw InputError("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// Non-interpolated average precision of a score-ranked list: mean of the
// precision at each positive's rank. Items with equal scores keep input order.
// Returns nullopt when there are no positives.
inline std::optional<double> average_precision(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw InputError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!positive[order[r]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

struct MapResult {
  double mean_ap = 0.0;
  std::vector<std::optional<double>> per_class;  // nullopt: class had no positives
  std::vector<std::string> warnings;
};

// Multi-label mAP. scores is N x C; truth(i, c) != 0 marks item i positive for c.
// Classes without positives are excluded from the mean and reported.
inline MapResult mean_average_precision(const Matrix& scores, const Matrix& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
    throw InputError("mean_average_precision: score/truth shape mismatch");
  MapResult r;
  double sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    std::vector<double> s(static_cast<std::size_t>(scores.rows()));
    std::vector<bool> pos(s.size());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      s[static_cast<std::size_t>(i)] = scores(i, c);
      pos[static_cast<std::size_t>(i)] = truth(i, c) != 0.0;
    }
    const auto ap = average_precision(s, pos);
    r.per_class.push_back(ap);
    if (ap) {
      sum += *ap;
      ++used;
    } else {
      r.warnings.push_back("class " + std::to_string(c) + " has no positives; excluded from mAP");
    }
  }
  r.mean_ap = used > 0 ? sum / static_cast<double>(used) : 0.0;
  return r;
}

}  // namespace sfv
