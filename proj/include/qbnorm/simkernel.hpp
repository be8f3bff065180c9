#pragma once

#include "qbnorm/core.hpp"
#include "qbnorm/embedstore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace qbnorm {

/// Descending permutation of a score vector plus the scores themselves.
/// Equal scores are ordered by ascending index.
struct Ranking {
  std::vector<Index> order;
  Eigen::VectorXd scores;  // original gallery order
};

namespace detail {

// Strict total order: larger value first, then smaller index.
template <typename Values>
struct DescendingByValue {
  const Values& values;
  bool operator()(Index a, Index b) const {
    const auto va = values[static_cast<Eigen::Index>(a)];
    const auto vb = values[static_cast<Eigen::Index>(b)];
    return va > vb || (va == vb && a < b);
  }
};

}  // namespace detail

template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine: length " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  const auto ud = u.template cast<double>();
  const auto vd = v.template cast<double>();
  const double nu = ud.norm();
  const double nv = vd.norm();
  if (nu == 0.0 || nv == 0.0) throw ZeroVectorError("cosine of a zero vector");
  return ud.dot(vd) / (nu * nv);
}

/// Row-wise unit-normalised double copy; zero rows raise ZeroVectorError.
template <typename Derived>
RowMatrixXd normalised_rows(const Eigen::MatrixBase<Derived>& m) {
  RowMatrixXd out = m.template cast<double>();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n == 0.0) throw ZeroVectorError("zero vector at row " + std::to_string(i));
    out.row(i) /= n;
  }
  return out;
}

inline RowMatrixXd normalised_rows(const EmbeddingMatrix& m) {
  try {
    return normalised_rows(m.data());
  } catch (const ZeroVectorError&) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m.row(i).cast<double>().norm() == 0.0) {
        throw ZeroVectorError("zero vector for id " + m.ids()[i]);
      }
    }
    throw;
  }
}

/// Cosine similarities of one unit query against pre-normalised gallery rows.
/// Shared by the single-query and batch paths so both round identically.
inline SimilarityVector similarities_normalised(const RowMatrixXd& gallery_unit,
                                                const Eigen::VectorXd& query_unit) {
  SimilarityVector s(gallery_unit.rows());
  for (Eigen::Index j = 0; j < gallery_unit.rows(); ++j) {
    s[j] = gallery_unit.row(j).dot(query_unit.transpose());
  }
  return s;
}

template <typename Derived>
SimilarityVector sim_vector(const Eigen::MatrixBase<Derived>& query, const EmbeddingMatrix& gallery) {
  if (static_cast<Index>(query.size()) != gallery.dim()) {
    throw ShapeError("query dim " + std::to_string(query.size()) + " vs gallery dim " +
                     std::to_string(gallery.dim()));
  }
  Eigen::VectorXd q = query.template cast<double>();
  const double n = q.norm();
  if (n == 0.0) throw ZeroVectorError("zero query vector");
  q /= n;
  return similarities_normalised(normalised_rows(gallery), q);
}

/// |Q| x |G| cosine similarities, row i equal to sim_vector(queries.row(i), gallery).
RowMatrixXd sim_matrix(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery);

/// Index of the largest value; ties resolve to the lowest index.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& values) {
  if (values.size() == 0) throw ArgumentError("argmax of empty vector");
  Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<Eigen::Index>(best)]) best = static_cast<Index>(i);
  }
  return best;
}

/// Indices of the k largest values, in ranking order (ties by ascending index).
/// Average O(n + k log k) via nth_element.
template <typename Derived>
std::vector<Index> top_k(const Eigen::DenseBase<Derived>& values, std::size_t k) {
  const auto n = static_cast<std::size_t>(values.size());
  if (k < 1 || k > n) {
    throw ArgumentError("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  const auto& v = values.derived();
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  detail::DescendingByValue<Derived> cmp{v};
  if (k < n) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), cmp);
    idx.resize(k);
  }
  std::sort(idx.begin(), idx.end(), cmp);
  return idx;
}

/// Mean of the k largest values (unsorted selection is enough for a mean).
template <typename Derived>
double top_k_mean(const Eigen::DenseBase<Derived>& values, std::size_t k) {
  const auto n = static_cast<std::size_t>(values.size());
  if (k < 1 || k > n) {
    throw ArgumentError("top_k_mean: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<double>(values[static_cast<Eigen::Index>(i)]);
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1), buf.end(),
                   std::greater<>());
  // summing in sorted order keeps the result independent of partition layout
  std::sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += buf[i];
  return sum / static_cast<double>(k);
}

template <typename Derived>
Ranking argsort_desc(const Eigen::DenseBase<Derived>& values) {
  const auto n = static_cast<std::size_t>(values.size());
  Ranking r;
  r.scores = values.derived().template cast<double>();
  if (r.scores.hasNaN()) throw ValidationError("argsort_desc: NaN score");
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), Index{0});
  std::sort(r.order.begin(), r.order.end(), detail::DescendingByValue<Eigen::VectorXd>{r.scores});
  return r;
}

}  // namespace qbnorm
