#pragma once

#include "oracle.hpp"
#include "qbnorm/embedstore.hpp"

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline qbnorm::EmbeddingMatrix matrix(std::initializer_list<std::initializer_list<float>> rows,
                                      const std::string& prefix = "r") {
  qbnorm::RowMatrixXf data(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(rows.begin()->size()));
  std::vector<std::string> ids;
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (float v : row) data(i, c++) = v;
    ids.push_back(prefix + std::to_string(i));
    ++i;
  }
  return qbnorm::EmbeddingMatrix(std::move(ids), std::move(data));
}

inline qbnorm::EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t d,
                                             const std::string& prefix) {
  std::normal_distribution<float> normal;
  qbnorm::RowMatrixXf data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = normal(rng);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return qbnorm::EmbeddingMatrix(std::move(ids), std::move(data));
}

inline oracle::Mat to_oracle(const qbnorm::EmbeddingMatrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.dim()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t c = 0; c < m.dim(); ++c) out[i][c] = m.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  return out;
}

inline oracle::Vec to_oracle(const Eigen::VectorXd& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("qbnorm_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
