#pragma once

#include "qbnorm/core.hpp"
#include "qbnorm/embedstore.hpp"
#include "qbnorm/simkernel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qbnorm {

enum class Method { none, gc, csls, is, dis };

std::string_view to_string(Method m);
/// Throws ArgumentError on an unknown name.
Method parse_method(std::string_view name);

struct NormaliserConfig {
  Method method = Method::dis;
  double beta = 20.0;            // inverse temperature for IS/DIS
  std::size_t k_activation = 1;  // per-querybank-item top-k feeding the activation set
  std::size_t k_csls = 10;       // CSLS neighbourhood size
  std::optional<std::size_t> querybank_size_cap;  // uniform subsample when set
  std::uint64_t subsample_seed = 0;

  /// Throws ArgumentError when beta is not a positive finite number or a k is zero.
  void validate() const;
};

/// Above this, exp(beta * x) is evaluated in log space.
constexpr double kLogSpaceThreshold = 700.0;

enum class ProbeStorage {
  automatic,  // keep the full probe matrix only for GC
  full,
  accelerators_only,
};

/// Querybank-vs-gallery precomputation.
///
/// `probe` is |G| x N with probe(j, i) = cos(b_i, g_j). It is retained, together
/// with the per-row ascending copy used by GC, only when requested; IS, DIS and
/// CSLS run from the O(|G|) accelerators alone.
struct ProbeIndex {
  RowMatrixXd probe;        // empty unless retained
  RowMatrixXd sorted_rows;  // ascending per row; empty unless retained
  Eigen::VectorXd is_denominators;      // D[j] = sum_i exp(beta * probe(j, i))
  Eigen::VectorXd is_log_denominators;  // log D[j] via logsumexp
  Eigen::VectorXd csls_topk_mean;       // empty when k_csls > min(N, |G|)
  std::vector<Index> activation_set;    // sorted, unique
  std::vector<char> activation_mask;    // |G| flags mirroring activation_set
  bool log_space = false;               // some beta * probe(j, i) exceeded the threshold
  double beta = 20.0;
  std::size_t k_activation = 1;
  std::size_t k_csls = 10;
  Index gallery_size = 0;
  Index querybank_size = 0;

  bool has_probe() const { return probe.size() > 0; }
  bool is_active(Index j) const { return activation_mask[j] != 0; }
};

ProbeIndex build_probe(const EmbeddingMatrix& querybank, const EmbeddingMatrix& gallery,
                       const NormaliserConfig& cfg, ProbeStorage storage = ProbeStorage::automatic);

/// Fills the derived fields (sorted rows, activation mask) after the primary
/// fields were set directly, e.g. by a deserialiser or a hand-built fixture.
void finalise_probe(ProbeIndex& p);

/// Builds a probe index straight from a probe matrix (|G| x N).
ProbeIndex probe_from_matrix(RowMatrixXd probe, const NormaliserConfig& cfg,
                             ProbeStorage storage = ProbeStorage::full);

/// eta(j) = s(j) - Rank(s(j), probe row j), Rank counting strictly greater entries.
SimilarityVector normalise_gc(const SimilarityVector& s, const ProbeIndex& p);

/// eta(j) = 2 s(j) - mean(top-K of s) - mean(top-K of probe row j).
SimilarityVector normalise_csls(const SimilarityVector& s, const ProbeIndex& p);

/// eta(j) = exp(beta s(j)) / D[j].
SimilarityVector normalise_is(const SimilarityVector& s, const ProbeIndex& p);

/// Inverted softmax when argmax(s) is in the activation set, else s unchanged.
SimilarityVector normalise_dis(const SimilarityVector& s, const ProbeIndex& p);

SimilarityVector normalise(const SimilarityVector& s, const ProbeIndex& p, Method method);

/// Uniform subsample of `cap` rows without replacement, kept in original order.
EmbeddingMatrix subsample_querybank(const EmbeddingMatrix& querybank, std::size_t cap,
                                    std::uint64_t seed);

/// Ranks queries against one gallery with a fixed probe index and method.
/// Holds the unit-normalised gallery so repeated calls skip that pass.
class QbNormRanker {
 public:
  QbNormRanker(const EmbeddingMatrix& gallery, ProbeIndex probe, Method method);

  /// Cosine similarities of `query` (any nonzero norm) against the gallery.
  SimilarityVector similarities(const Eigen::Ref<const Eigen::VectorXd>& query) const;
  SimilarityVector normalised_scores(const Eigen::Ref<const Eigen::VectorXd>& query) const;
  Ranking rank(const Eigen::Ref<const Eigen::VectorXd>& query) const;

  /// Rankings for queries [begin, end), in input order; parallel across queries.
  std::vector<Ranking> rank_rows(const EmbeddingMatrix& queries, Index begin, Index end) const;

  const ProbeIndex& probe() const { return probe_; }
  Method method() const { return method_; }

 private:
  RowMatrixXd gallery_unit_;
  ProbeIndex probe_;
  Method method_;
};

/// Full pipeline: probe once, then per query s -> eta -> descending ranking.
std::vector<Ranking> rank_with_qbnorm(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                                      const EmbeddingMatrix& querybank, const NormaliserConfig& cfg);

/// Same as rank_with_qbnorm but with a prebuilt probe index.
std::vector<Ranking> rank_with_probe(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                                     const ProbeIndex& probe, Method method);

}  // namespace qbnorm
