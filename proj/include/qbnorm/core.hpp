#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

namespace qbnorm {

using Index = std::size_t;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXf = RowMatrix<float>;
using RowMatrixXd = RowMatrix<double>;

/// Unnormalised (s) or normalised (eta) similarities, one entry per gallery item.
using SimilarityVector = Eigen::VectorXd;

// Error hierarchy. Everything the library throws on bad input derives from
// qbnorm::Error; anything else escaping is an internal fault.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

/// Worker count, capped by QBNORM_THREADS when set to a positive integer.
std::size_t thread_count();

/// Runs fn(i) for i in [0, n) over a static partition of thread_count() workers.
/// Each i must only write state owned by i; results are then schedule-independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Writes bytes to path via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

/// Reads a whole file; missing or unreadable files raise IoError naming the path.
std::string read_file(const std::filesystem::path& path);

}  // namespace qbnorm
