#pragma once

#include "qbnorm/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qbnorm {

enum class EmbeddingFormat { binary, csv };

/// n x d float matrix of embeddings with one unique string id per row.
///
/// Immutable once constructed. The constructor validates shape, id uniqueness
/// and finiteness, and (when l2_normalised is set) unit row norms.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::vector<std::string> ids, RowMatrixXf data, bool l2_normalised = false);

  const std::vector<std::string>& ids() const { return ids_; }
  const RowMatrixXf& data() const { return data_; }
  bool l2_normalised() const { return l2_normalised_; }

  Index rows() const { return static_cast<Index>(data_.rows()); }
  Index dim() const { return static_cast<Index>(data_.cols()); }

  auto row(Index i) const { return data_.row(static_cast<Eigen::Index>(i)); }

  /// New matrix holding the given rows, in the given order.
  EmbeddingMatrix select_rows(const std::vector<Index>& rows) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

 private:
  std::vector<std::string> ids_;
  RowMatrixXf data_;
  bool l2_normalised_;
};

constexpr double kUnitNormTolerance = 1e-6;

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);

/// Always writes the binary QBN1 format.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

// Codec for the QBN1 layout: "QBN1", u32 n, u32 d, n x (u16 len + utf8 id),
// n*d f32 row-major. All integers and floats little-endian.
std::string encode_binary(const EmbeddingMatrix& m);
EmbeddingMatrix decode_binary(const std::string& bytes);
EmbeddingMatrix parse_csv(const std::string& text);

/// Rows scaled to unit norm (norms accumulated in double).
/// Throws ZeroVectorError naming the id of any zero row.
EmbeddingMatrix l2_normalise(const EmbeddingMatrix& m);

}  // namespace qbnorm
