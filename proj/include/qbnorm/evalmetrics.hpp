#pragma once

#include "qbnorm/core.hpp"
#include "qbnorm/simkernel.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace qbnorm {

/// Relevant gallery indices per query (at least one each).
struct GroundTruth {
  std::vector<std::vector<Index>> relevant;

  std::size_t size() const { return relevant.size(); }
  /// Throws ValidationError for an empty set or an index >= gallery_size.
  void validate(Index gallery_size) const;
};

struct RetrievalMetrics {
  std::map<std::size_t, double> r_at;  // K -> recall in percent
  double mdr = 0.0;                    // median of 1-indexed best ranks
  double geometric_mean = 0.0;         // over R@1, R@5, R@10
};

struct HubnessReport {
  std::size_t k = 10;
  std::vector<std::size_t> n_k;  // k-occurrence count per gallery item
  double skewness = 0.0;
  std::size_t max_count = 0;
  std::size_t unretrieved = 0;  // items with n_k == 0
};

inline constexpr std::size_t kDefaultHubnessK = 10;

/// 1-indexed position of the best-ranked relevant item for each query.
std::vector<std::size_t> best_relevant_ranks(const std::vector<Ranking>& rankings, const GroundTruth& gt);

/// Percentage of queries with best rank <= K, for each K.
std::map<std::size_t, double> recall_at_k(std::span<const std::size_t> best_ranks,
                                          std::span<const std::size_t> ks);
std::map<std::size_t, double> recall_at_k(const std::vector<Ranking>& rankings, const GroundTruth& gt,
                                          std::span<const std::size_t> ks);

/// Median; an even count averages the two central values.
double median_rank(std::span<const std::size_t> best_ranks);
double median_rank(const std::vector<Ranking>& rankings, const GroundTruth& gt);

/// Cube root of R@1 * R@5 * R@10; 0 when any factor is 0.
double geometric_mean_r(const RetrievalMetrics& metrics);

/// R@{1,5,10}, MdR and GM in one pass.
RetrievalMetrics evaluate(std::span<const std::size_t> best_ranks);
RetrievalMetrics evaluate(const std::vector<Ranking>& rankings, const GroundTruth& gt);

/// n_k[j] = number of lists whose first k entries contain j.
/// Each list must hold at least k entries, all < gallery_size.
std::vector<std::size_t> k_occurrences(std::span<const std::vector<Index>> top_lists, std::size_t k,
                                       Index gallery_size);
std::vector<std::size_t> k_occurrences(const std::vector<Ranking>& rankings, std::size_t k,
                                       Index gallery_size);

/// Population skewness E[(x - mu)^3] / sigma^3; 0 when sigma == 0.
double skewness(std::span<const std::size_t> n_k);

HubnessReport hubness_report(std::span<const std::vector<Index>> top_lists, std::size_t k,
                             Index gallery_size);
HubnessReport hubness_report(const std::vector<Ranking>& rankings, std::size_t k, Index gallery_size);

/// Per-gallery top-1 retrieval counts sorted descending (sums to #rankings).
std::vector<std::size_t> retrieval_count_histogram(const std::vector<Ranking>& rankings,
                                                   Index gallery_size);

}  // namespace qbnorm
