#pragma once

// JSON model files. Every file carries "type" ("gmm", "pca", "svm" or
// "codebook") and "version" (1); numeric parameters are nested arrays of
// decimal numbers printed with round-trip precision. Keys are emitted in sorted order.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfv/classify/svm.hpp"
#include "sfv/model/gmm.hpp"
#include "sfv/model/kmeans.hpp"
#include "sfv/model/pca.hpp"

namespace sfv::io {

using json = nlohmann::json;

inline constexpr int kModelVersion = 1;

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_log_likelihood = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty()) throw FormatError(std::string("field '") + field + "' must be a non-empty array");
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw FormatError(std::string("field '") + field + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw FormatError(std::string("field '") + field + "' holds a non-number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

inline std::vector<double> vector_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw FormatError(std::string("field '") + field + "' must be an array");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) throw FormatError(std::string("field '") + field + "' holds a non-number");
    v.push_back(e.get<double>());
  }
  return v;
}

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline void check_header(const json& j, const char* type) {
  const auto& t = require(j, "type");
  if (!t.is_string() || t.get<std::string>() != type)
    throw FormatError(std::string("expected model type '") + type + "', got " + t.dump());
  const auto& v = require(j, "version");
  if (!v.is_number_integer() || v.get<int>() != kModelVersion)
    throw FormatError("unsupported model version " + v.dump());
}

inline json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline json metadata_to_json(const TrainingMetadata& meta) {
  return json{{"seed", meta.seed},
              {"iterations", meta.iterations},
              {"final_log_likelihood", detail::double_or_null(meta.final_log_likelihood)}};
}

inline TrainingMetadata metadata_from_json(const json& j) {
  TrainingMetadata meta;
  if (!j.contains("metadata")) return meta;
  const auto& m = j.at("metadata");
  if (m.contains("seed")) meta.seed = m.at("seed").get<std::uint64_t>();
  if (m.contains("iterations")) meta.iterations = m.at("iterations").get<std::size_t>();
  if (m.contains("final_log_likelihood") && m.at("final_log_likelihood").is_number())
    meta.final_log_likelihood = m.at("final_log_likelihood").get<double>();
  return meta;
}

inline json gmm_to_json(const GaussianMixture& gmm, const TrainingMetadata& meta = {}) {
  return json{{"type", "gmm"},
              {"version", kModelVersion},
              {"weights", gmm.weights()},
              {"means", detail::matrix_to_json(gmm.means())},
              {"variances", detail::matrix_to_json(gmm.variances())},
              {"metadata", metadata_to_json(meta)}};
}

inline GaussianMixture gmm_from_json(const json& j) {
  detail::check_header(j, "gmm");
  return GaussianMixture(detail::vector_from_json(detail::require(j, "weights"), "weights"),
                         detail::matrix_from_json(detail::require(j, "means"), "means"),
                         detail::matrix_from_json(detail::require(j, "variances"), "variances"));
}

inline json pca_to_json(const PcaModel& pca, const TrainingMetadata& meta = {}) {
  const auto& mean = pca.mean();
  return json{{"type", "pca"},
              {"version", kModelVersion},
              {"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
              {"projection", detail::matrix_to_json(pca.projection())},
              {"explained_variance", pca.explained_variance()},
              {"explained_ratio", pca.explained_ratio()},
              {"metadata", metadata_to_json(meta)}};
}

inline PcaModel pca_from_json(const json& j) {
  detail::check_header(j, "pca");
  const auto mean = detail::vector_from_json(detail::require(j, "mean"), "mean");
  Vector m = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  return PcaModel(std::move(m), detail::matrix_from_json(detail::require(j, "projection"), "projection"),
                  detail::vector_from_json(detail::require(j, "explained_variance"), "explained_variance"),
                  detail::vector_from_json(detail::require(j, "explained_ratio"), "explained_ratio"));
}

inline json svm_to_json(const LinearModel& model) {
  return json{{"type", "svm"},
              {"version", kModelVersion},
              {"weights", detail::matrix_to_json(model.weights)},
              {"biases", model.biases},
              {"hyperparameters",
               {{"reg", model.config.reg}, {"epochs", model.config.epochs}, {"seed", model.config.seed}}},
              {"metadata", {{"seed", model.config.seed}, {"iterations", model.config.epochs}}}};
}

inline LinearModel svm_from_json(const json& j) {
  detail::check_header(j, "svm");
  LinearModel m;
  m.weights = detail::matrix_from_json(detail::require(j, "weights"), "weights");
  m.biases = detail::vector_from_json(detail::require(j, "biases"), "biases");
  if (static_cast<std::size_t>(m.weights.rows()) != m.biases.size())
    throw FormatError("svm model needs one bias per class");
  const auto& h = detail::require(j, "hyperparameters");
  m.config.reg = h.at("reg").get<double>();
  m.config.epochs = h.at("epochs").get<std::size_t>();
  m.config.seed = h.at("seed").get<std::uint64_t>();
  return m;
}

inline json codebook_to_json(const Codebook& codebook, const TrainingMetadata& meta = {}) {
  return json{{"type", "codebook"},
              {"version", kModelVersion},
              {"centroids", detail::matrix_to_json(codebook.centroids())},
              {"metadata", metadata_to_json(meta)}};
}

inline Codebook codebook_from_json(const json& j) {
  detail::check_header(j, "codebook");
  return Codebook(detail::matrix_from_json(detail::require(j, "centroids"), "centroids"));
}

inline void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

template <typename Parse>
auto load_model(const std::filesystem::path& path, Parse&& parse) {
  const json j = load_json(path);
  try {
    return parse(j);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline GaussianMixture load_gmm(const std::filesystem::path& path) { return load_model(path, gmm_from_json); }
inline PcaModel load_pca(const std::filesystem::path& path) { return load_model(path, pca_from_json); }
inline LinearModel load_svm(const std::filesystem::path& path) { return load_model(path, svm_from_json); }
inline Codebook load_codebook(const std::filesystem::path& path) { return load_model(path, codebook_from_json); }

}  // namespace sfv::io
