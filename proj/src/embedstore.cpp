#include "qbnorm/embedstore.hpp"

#include "byteio.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string_view>
#include <unordered_set>

namespace qbnorm {

namespace {

constexpr std::string_view kMagic = "QBN1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, RowMatrixXf data, bool l2_normalised)
    : ids_(std::move(ids)), data_(std::move(data)), l2_normalised_(l2_normalised) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw ValidationError("embedding matrix must have n >= 1 and d >= 1");
  }
  if (ids_.size() != static_cast<std::size_t>(data_.rows())) {
    throw ShapeError("id count " + std::to_string(ids_.size()) + " does not match row count " +
                     std::to_string(data_.rows()));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw ValidationError("duplicate id: " + id);
  }
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    if (!data_.row(i).allFinite()) {
      throw ValidationError("non-finite value in row " + ids_[static_cast<std::size_t>(i)]);
    }
  }
  if (l2_normalised_) {
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      const double norm = data_.row(i).cast<double>().norm();
      if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        throw ValidationError("row " + ids_[static_cast<std::size_t>(i)] +
                              " flagged unit-norm but has norm " + std::to_string(norm));
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(const std::vector<Index>& rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  RowMatrixXf data(static_cast<Eigen::Index>(rows.size()), data_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= this->rows()) throw ArgumentError("row index out of range");
    ids.push_back(ids_[rows[r]]);
    data.row(static_cast<Eigen::Index>(r)) = row(rows[r]);
  }
  return EmbeddingMatrix(std::move(ids), std::move(data), l2_normalised_);
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.ids_ != b.ids_ || a.data_.rows() != b.data_.rows() || a.data_.cols() != b.data_.cols()) {
    return false;
  }
  // bitwise, so -0.0 != 0.0 here
  for (Eigen::Index i = 0; i < a.data_.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.data_.data()[i]) !=
        std::bit_cast<std::uint32_t>(b.data_.data()[i])) {
      return false;
    }
  }
  return a.l2_normalised_ == b.l2_normalised_;
}

std::string encode_binary(const EmbeddingMatrix& m) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  for (const auto& id : m.ids()) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("id longer than 65535 bytes: " + id.substr(0, 32) + "...");
    }
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.raw(id);
  }
  const float* values = m.data().data();
  for (Eigen::Index i = 0; i < m.data().size(); ++i) w.f32(values[i]);
  return std::move(w).take();
}

EmbeddingMatrix decode_binary(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("bad magic, expected QBN1");
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  if (n == 0 || d == 0) throw FormatError("header declares an empty matrix");
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint16_t len = r.u16();
    ids.emplace_back(r.raw(len));
  }
  const std::uint64_t count = std::uint64_t{n} * d;
  if (r.remaining() != count * sizeof(float)) {
    throw FormatError("payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(count * sizeof(float)));
  }
  RowMatrixXf data(n, d);
  float* out = data.data();
  for (std::uint64_t i = 0; i < count; ++i) out[i] = r.f32();
  return EmbeddingMatrix(std::move(ids), std::move(data));
}

EmbeddingMatrix parse_csv(const std::string& text) {
  std::vector<std::string> ids;
  std::vector<float> values;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    std::size_t fields = 0;
    while (true) {
      const auto comma = line.find(',');
      std::string_view field = trim(line.substr(0, comma));
      if (fields == 0) {
        if (field.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty id");
        ids.emplace_back(field);
      } else {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
          throw FormatError("line " + std::to_string(line_no) + ": not a number: '" +
                            std::string(field) + "'");
        }
        values.push_back(static_cast<float>(v));
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (fields < 2) throw FormatError("line " + std::to_string(line_no) + ": no values");
    if (width == 0) {
      width = fields - 1;
    } else if (fields - 1 != width) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " values, found " + std::to_string(fields - 1));
    }
  }
  if (ids.empty()) throw FormatError("csv contains no rows");
  RowMatrixXf data(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(width));
  std::copy(values.begin(), values.end(), data.data());
  return EmbeddingMatrix(std::move(ids), std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == EmbeddingFormat::binary ? decode_binary(bytes) : parse_csv(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_binary(m));
}

EmbeddingMatrix l2_normalise(const EmbeddingMatrix& m) {
  RowMatrixXf out(m.data().rows(), m.data().cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const Eigen::RowVectorXd row = m.row(i).cast<double>();
    const double norm = row.norm();
    if (norm == 0.0) throw ZeroVectorError("zero vector for id " + m.ids()[i]);
    out.row(static_cast<Eigen::Index>(i)) = (row / norm).cast<float>();
  }
  return EmbeddingMatrix(m.ids(), std::move(out), true);
}

}  // namespace qbnorm
