#include "qbnorm/qbnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace qbnorm {

namespace {

struct ScalarExp {
  double operator()(double x) const { return std::exp(x); }
};

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::gc: return "gc";
    case Method::csls: return "csls";
    case Method::is: return "is";
    case Method::dis: return "dis";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::none, Method::gc, Method::csls, Method::is, Method::dis}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown method '" + std::string(name) + "' (expected none|gc|csls|is|dis)");
}

void NormaliserConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ArgumentError("beta must be a positive finite number, got " + std::to_string(beta));
  }
  if (k_activation < 1) throw ArgumentError("k_activation must be >= 1");
  if (k_csls < 1) throw ArgumentError("K_csls must be >= 1");
  if (querybank_size_cap && *querybank_size_cap < 1) {
    throw ArgumentError("querybank_size_cap must be >= 1");
  }
}

void finalise_probe(ProbeIndex& p) {
  if (p.has_probe()) {
    p.sorted_rows = p.probe;
    for (Eigen::Index j = 0; j < p.sorted_rows.rows(); ++j) {
      auto row = p.sorted_rows.row(j);
      std::sort(row.data(), row.data() + row.size());
    }
  } else {
    p.sorted_rows.resize(0, 0);
  }
  std::sort(p.activation_set.begin(), p.activation_set.end());
  p.activation_set.erase(std::unique(p.activation_set.begin(), p.activation_set.end()),
                         p.activation_set.end());
  p.activation_mask.assign(p.gallery_size, 0);
  for (Index j : p.activation_set) {
    if (j >= p.gallery_size) throw ValidationError("activation index out of gallery range");
    p.activation_mask[j] = 1;
  }
}

ProbeIndex probe_from_matrix(RowMatrixXd probe, const NormaliserConfig& cfg, ProbeStorage storage) {
  cfg.validate();
  const auto g = static_cast<Index>(probe.rows());
  const auto n = static_cast<Index>(probe.cols());
  if (g < 1 || n < 1) throw ShapeError("probe matrix must be non-empty");
  if (probe.hasNaN()) throw ValidationError("probe matrix contains NaN");
  if (cfg.k_activation > g) {
    throw ArgumentError("k_activation=" + std::to_string(cfg.k_activation) + " exceeds gallery size " +
                        std::to_string(g));
  }
  const bool csls_ok = cfg.k_csls <= std::min(n, g);
  if (cfg.method == Method::csls && !csls_ok) {
    throw ArgumentError("K_csls=" + std::to_string(cfg.k_csls) + " exceeds min(N, |G|) = " +
                        std::to_string(std::min(n, g)));
  }

  ProbeIndex p;
  p.beta = cfg.beta;
  p.k_activation = cfg.k_activation;
  p.k_csls = cfg.k_csls;
  p.gallery_size = g;
  p.querybank_size = n;
  p.log_space = cfg.beta * probe.maxCoeff() > kLogSpaceThreshold;

  p.is_denominators.resize(static_cast<Eigen::Index>(g));
  p.is_log_denominators.resize(static_cast<Eigen::Index>(g));
  if (csls_ok) p.csls_topk_mean.resize(static_cast<Eigen::Index>(g));
  parallel_for(g, [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const auto row = probe.row(j);
    const double peak = cfg.beta * row.maxCoeff();
    const double shifted = (cfg.beta * row.array() - peak).unaryExpr(ScalarExp{}).sum();
    p.is_log_denominators[j] = peak + std::log(shifted);
    p.is_denominators[j] = peak > kLogSpaceThreshold ? std::exp(p.is_log_denominators[j])
                                                     : (cfg.beta * row.array()).unaryExpr(ScalarExp{}).sum();
    if (csls_ok) p.csls_topk_mean[j] = top_k_mean(row, cfg.k_csls);
  });

  std::vector<std::vector<Index>> per_item(n);
  parallel_for(n, [&](std::size_t i) {
    const Eigen::VectorXd column = probe.col(static_cast<Eigen::Index>(i));
    per_item[i] = top_k(column, cfg.k_activation);
  });
  for (const auto& hits : per_item) p.activation_set.insert(p.activation_set.end(), hits.begin(), hits.end());

  const bool keep = storage == ProbeStorage::full ||
                    (storage == ProbeStorage::automatic && cfg.method == Method::gc);
  if (keep) p.probe = std::move(probe);
  finalise_probe(p);
  return p;
}

ProbeIndex build_probe(const EmbeddingMatrix& querybank, const EmbeddingMatrix& gallery,
                       const NormaliserConfig& cfg, ProbeStorage storage) {
  cfg.validate();
  if (querybank.dim() != gallery.dim()) {
    throw ShapeError("querybank dim " + std::to_string(querybank.dim()) + " vs gallery dim " +
                     std::to_string(gallery.dim()));
  }
  const RowMatrixXd g = normalised_rows(gallery);
  const RowMatrixXd b = normalised_rows(querybank);
  RowMatrixXd probe(g.rows(), b.rows());
  // Each column goes through the same kernel as a live query, so a querybank
  // item identical to a test query produces bit-identical similarities.
  std::vector<SimilarityVector> columns(querybank.rows());
  parallel_for(querybank.rows(), [&](std::size_t i) {
    const Eigen::VectorXd bi = b.row(static_cast<Eigen::Index>(i)).transpose();
    columns[i] = similarities_normalised(g, bi);
  });
  for (std::size_t i = 0; i < columns.size(); ++i) probe.col(static_cast<Eigen::Index>(i)) = columns[i];
  return probe_from_matrix(std::move(probe), cfg, storage);
}

namespace {

void check_length(const SimilarityVector& s, const ProbeIndex& p) {
  if (static_cast<Index>(s.size()) != p.gallery_size) {
    throw ShapeError("similarity vector has length " + std::to_string(s.size()) + ", probe covers " +
                     std::to_string(p.gallery_size) + " gallery items");
  }
}

}  // namespace

SimilarityVector normalise_gc(const SimilarityVector& s, const ProbeIndex& p) {
  check_length(s, p);
  if (p.sorted_rows.size() == 0) {
    throw ArgumentError("GC needs the full probe matrix; build the probe with method gc");
  }
  const auto n = p.sorted_rows.cols();
  SimilarityVector eta(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double* row = p.sorted_rows.row(j).data();
    const double* first_greater = std::upper_bound(row, row + n, s[j]);
    const auto rank = static_cast<double>(row + n - first_greater);
    eta[j] = -(rank - s[j]);
  }
  return eta;
}

SimilarityVector normalise_csls(const SimilarityVector& s, const ProbeIndex& p) {
  check_length(s, p);
  if (p.csls_topk_mean.size() == 0 || p.k_csls > static_cast<Index>(s.size())) {
    throw ArgumentError("K_csls=" + std::to_string(p.k_csls) + " exceeds min(N, |G|)");
  }
  const double query_mean = top_k_mean(s, p.k_csls);
  SimilarityVector eta(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    eta[j] = 2.0 * s[j] - query_mean - p.csls_topk_mean[j];
  }
  return eta;
}

SimilarityVector normalise_is(const SimilarityVector& s, const ProbeIndex& p) {
  check_length(s, p);
  const double beta = p.beta;
  const bool use_log = p.log_space || beta * s.maxCoeff() > kLogSpaceThreshold;
  SimilarityVector eta(s.size());
  if (use_log) {
    eta = (beta * s.array() - p.is_log_denominators.array()).unaryExpr(ScalarExp{});
  } else {
    eta = (beta * s.array()).unaryExpr(ScalarExp{}) / p.is_denominators.array();
  }
  return eta;
}

SimilarityVector normalise_dis(const SimilarityVector& s, const ProbeIndex& p) {
  check_length(s, p);
  if (p.is_active(argmax(s))) return normalise_is(s, p);
  return s;
}

SimilarityVector normalise(const SimilarityVector& s, const ProbeIndex& p, Method method) {
  switch (method) {
    case Method::none: return s;
    case Method::gc: return normalise_gc(s, p);
    case Method::csls: return normalise_csls(s, p);
    case Method::is: return normalise_is(s, p);
    case Method::dis: return normalise_dis(s, p);
  }
  throw ArgumentError("unknown method");
}

EmbeddingMatrix subsample_querybank(const EmbeddingMatrix& querybank, std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw ArgumentError("querybank cap must be >= 1");
  const Index n = querybank.rows();
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  if (cap >= n) return querybank;
  // Partial Fisher-Yates with rejection sampling, so the draw does not depend
  // on the standard library's distribution implementations.
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < cap; ++i) {
    const std::uint64_t range = n - i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = 0;
    do {
      x = rng();
    } while (x >= limit);
    std::swap(idx[i], idx[i + x % range]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return querybank.select_rows(idx);
}

QbNormRanker::QbNormRanker(const EmbeddingMatrix& gallery, ProbeIndex probe, Method method)
    : gallery_unit_(normalised_rows(gallery)), probe_(std::move(probe)), method_(method) {
  if (probe_.gallery_size != gallery.rows()) {
    throw ShapeError("probe index covers " + std::to_string(probe_.gallery_size) +
                     " gallery items, gallery has " + std::to_string(gallery.rows()));
  }
  if (method_ == Method::gc && !probe_.has_probe()) {
    throw ArgumentError("GC needs the full probe matrix; build the probe with method gc");
  }
  if (method_ == Method::csls && probe_.csls_topk_mean.size() == 0) {
    throw ArgumentError("probe index has no CSLS means for K_csls=" + std::to_string(probe_.k_csls));
  }
}

SimilarityVector QbNormRanker::similarities(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  if (query.size() != gallery_unit_.cols()) {
    throw ShapeError("query dim " + std::to_string(query.size()) + " vs gallery dim " +
                     std::to_string(gallery_unit_.cols()));
  }
  Eigen::VectorXd q = query;
  const double n = q.norm();
  if (n == 0.0) throw ZeroVectorError("zero query vector");
  q /= n;
  return similarities_normalised(gallery_unit_, q);
}

SimilarityVector QbNormRanker::normalised_scores(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  return normalise(similarities(query), probe_, method_);
}

Ranking QbNormRanker::rank(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  return argsort_desc(normalised_scores(query));
}

std::vector<Ranking> QbNormRanker::rank_rows(const EmbeddingMatrix& queries, Index begin, Index end) const {
  if (begin > end || end > queries.rows()) throw ArgumentError("query range out of bounds");
  std::vector<Ranking> out(end - begin);
  parallel_for(out.size(), [&](std::size_t i) {
    const Eigen::VectorXd q = queries.row(begin + i).cast<double>().transpose();
    try {
      out[i] = rank(q);
    } catch (const ZeroVectorError&) {
      throw ZeroVectorError("zero vector for query id " + queries.ids()[begin + i]);
    }
  });
  return out;
}

std::vector<Ranking> rank_with_probe(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                                     const ProbeIndex& probe, Method method) {
  if (queries.dim() != gallery.dim()) {
    throw ShapeError("query dim " + std::to_string(queries.dim()) + " vs gallery dim " +
                     std::to_string(gallery.dim()));
  }
  QbNormRanker ranker(gallery, probe, method);
  return ranker.rank_rows(queries, 0, queries.rows());
}

std::vector<Ranking> rank_with_qbnorm(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                                      const EmbeddingMatrix& querybank, const NormaliserConfig& cfg) {
  cfg.validate();
  if (queries.dim() != gallery.dim() || querybank.dim() != gallery.dim()) {
    throw ShapeError("queries, gallery and querybank must share one dimension");
  }
  if (cfg.method == Method::none) {
    // no probe needed; the bypass must equal plain cosine retrieval
    ProbeIndex empty;
    empty.gallery_size = gallery.rows();
    empty.activation_mask.assign(gallery.rows(), 0);
    return rank_with_probe(queries, gallery, empty, Method::none);
  }
  const EmbeddingMatrix bank = cfg.querybank_size_cap
                                   ? subsample_querybank(querybank, *cfg.querybank_size_cap, cfg.subsample_seed)
                                   : querybank;
  return rank_with_probe(queries, gallery, build_probe(bank, gallery, cfg), cfg.method);
}

}  // namespace qbnorm
