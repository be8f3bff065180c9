#include "qbnorm/evalmetrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace qbnorm {

void GroundTruth::validate(Index gallery_size) const {
  for (std::size_t q = 0; q < relevant.size(); ++q) {
    if (relevant[q].empty()) throw ValidationError("query " + std::to_string(q) + " has no relevant item");
    for (Index j : relevant[q]) {
      if (j >= gallery_size) {
        throw ValidationError("query " + std::to_string(q) + ": relevant index " + std::to_string(j) +
                              " outside gallery of size " + std::to_string(gallery_size));
      }
    }
  }
}

std::vector<std::size_t> best_relevant_ranks(const std::vector<Ranking>& rankings, const GroundTruth& gt) {
  if (rankings.size() != gt.size()) {
    throw ShapeError(std::to_string(rankings.size()) + " rankings vs " + std::to_string(gt.size()) +
                     " ground-truth entries");
  }
  std::vector<std::size_t> ranks(rankings.size());
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const auto& order = rankings[q].order;
    if (gt.relevant[q].empty()) throw ValidationError("query " + std::to_string(q) + " has no relevant item");
    std::size_t best = 0;
    for (std::size_t pos = 0; pos < order.size() && best == 0; ++pos) {
      if (std::find(gt.relevant[q].begin(), gt.relevant[q].end(), order[pos]) != gt.relevant[q].end()) {
        best = pos + 1;
      }
    }
    if (best == 0) throw ValidationError("query " + std::to_string(q) + ": no relevant item in ranking");
    ranks[q] = best;
  }
  return ranks;
}

std::map<std::size_t, double> recall_at_k(std::span<const std::size_t> best_ranks,
                                          std::span<const std::size_t> ks) {
  std::map<std::size_t, double> out;
  for (std::size_t k : ks) {
    if (k < 1) throw ArgumentError("recall K must be >= 1");
    if (best_ranks.empty()) {
      out[k] = 0.0;
      continue;
    }
    const auto hits = std::count_if(best_ranks.begin(), best_ranks.end(), [k](std::size_t r) { return r <= k; });
    out[k] = 100.0 * static_cast<double>(hits) / static_cast<double>(best_ranks.size());
  }
  return out;
}

std::map<std::size_t, double> recall_at_k(const std::vector<Ranking>& rankings, const GroundTruth& gt,
                                          std::span<const std::size_t> ks) {
  const auto ranks = best_relevant_ranks(rankings, gt);
  return recall_at_k(ranks, ks);
}

double median_rank(std::span<const std::size_t> best_ranks) {
  if (best_ranks.empty()) throw ArgumentError("median of no ranks");
  std::vector<std::size_t> sorted(best_ranks.begin(), best_ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  if (sorted.size() % 2 == 1) return static_cast<double>(sorted[mid]);
  return 0.5 * (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid]));
}

double median_rank(const std::vector<Ranking>& rankings, const GroundTruth& gt) {
  const auto ranks = best_relevant_ranks(rankings, gt);
  return median_rank(ranks);
}

double geometric_mean_r(const RetrievalMetrics& metrics) {
  double product = 1.0;
  for (std::size_t k : {1u, 5u, 10u}) {
    auto it = metrics.r_at.find(k);
    if (it == metrics.r_at.end()) throw ArgumentError("geometric mean needs R@" + std::to_string(k));
    if (it->second < 0.0) throw ArgumentError("negative recall");
    product *= it->second;
  }
  return product == 0.0 ? 0.0 : std::cbrt(product);
}

RetrievalMetrics evaluate(std::span<const std::size_t> best_ranks) {
  static constexpr std::array<std::size_t, 3> kStandardKs{1, 5, 10};
  RetrievalMetrics m;
  m.r_at = recall_at_k(best_ranks, kStandardKs);
  m.mdr = median_rank(best_ranks);
  m.geometric_mean = geometric_mean_r(m);
  return m;
}

RetrievalMetrics evaluate(const std::vector<Ranking>& rankings, const GroundTruth& gt) {
  const auto ranks = best_relevant_ranks(rankings, gt);
  return evaluate(ranks);
}

std::vector<std::size_t> k_occurrences(std::span<const std::vector<Index>> top_lists, std::size_t k,
                                       Index gallery_size) {
  if (k < 1 || k > gallery_size) {
    throw ArgumentError("k=" + std::to_string(k) + " outside [1, " + std::to_string(gallery_size) + "]");
  }
  std::vector<std::size_t> counts(gallery_size, 0);
  for (std::size_t q = 0; q < top_lists.size(); ++q) {
    const auto& list = top_lists[q];
    if (list.size() < k) {
      throw ArgumentError("list " + std::to_string(q) + " has " + std::to_string(list.size()) +
                          " entries, fewer than k=" + std::to_string(k));
    }
    for (std::size_t t = 0; t < k; ++t) {
      if (list[t] >= gallery_size) throw ArgumentError("gallery index out of range in list");
      ++counts[list[t]];
    }
  }
  return counts;
}

std::vector<std::size_t> k_occurrences(const std::vector<Ranking>& rankings, std::size_t k, Index gallery_size) {
  std::vector<std::vector<Index>> lists;
  lists.reserve(rankings.size());
  for (const auto& r : rankings) {
    lists.emplace_back(r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.order.size())));
  }
  return k_occurrences(lists, k, gallery_size);
}

double skewness(std::span<const std::size_t> n_k) {
  if (n_k.empty()) throw ArgumentError("skewness of empty vector");
  const auto n = static_cast<double>(n_k.size());
  double mean = 0.0;
  for (auto x : n_k) mean += static_cast<double>(x);
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (auto x : n_k) {
    const double d = static_cast<double>(x) - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 == 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

HubnessReport hubness_report(std::span<const std::vector<Index>> top_lists, std::size_t k, Index gallery_size) {
  HubnessReport r;
  r.k = k;
  r.n_k = k_occurrences(top_lists, k, gallery_size);
  r.skewness = skewness(r.n_k);
  r.max_count = *std::max_element(r.n_k.begin(), r.n_k.end());
  r.unretrieved = static_cast<std::size_t>(std::count(r.n_k.begin(), r.n_k.end(), std::size_t{0}));
  return r;
}

HubnessReport hubness_report(const std::vector<Ranking>& rankings, std::size_t k, Index gallery_size) {
  std::vector<std::vector<Index>> lists;
  lists.reserve(rankings.size());
  for (const auto& r : rankings) {
    lists.emplace_back(r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.order.size())));
  }
  return hubness_report(lists, k, gallery_size);
}

std::vector<std::size_t> retrieval_count_histogram(const std::vector<Ranking>& rankings, Index gallery_size) {
  std::vector<std::size_t> counts(gallery_size, 0);
  for (const auto& r : rankings) {
    if (r.order.empty()) continue;
    if (r.order.front() >= gallery_size) throw ArgumentError("gallery index out of range in ranking");
    ++counts[r.order.front()];
  }
  std::sort(counts.begin(), counts.end(), std::greater<>());
  return counts;
}

}  // namespace qbnorm
