#pragma once

#include "qbnorm/embedstore.hpp"
#include "qbnorm/evalmetrics.hpp"
#include "qbnorm/qbnorm.hpp"

#include <cstdint>
#include <vector>

namespace qbnorm {

/// Synthetic cross-modal retrieval problem.
///
/// All vectors come from a latent Gaussian N(mean_offset * sqrt(dim) * u, I)
/// with u a seeded random unit direction, then unit-normalised. The shared
/// offset is what gives cosine neighbourhoods their hubs; mean_offset = 0 is
/// the isotropic case, which is hub-free on the sphere.
///
/// Query i = normalise(correlation * g_{i mod n_gallery} + (1 - correlation) * e_i)
/// with e_i a fresh unit draw. Querybank items are built the same way around
/// held-out anchors, never around gallery items or test queries.
struct SynthSpec {
  std::size_t n_queries = 2000;
  std::size_t n_gallery = 2000;
  std::size_t n_querybank = 2000;
  std::size_t dim = 512;
  std::uint64_t seed = 1;
  double correlation = 0.7;
  double mean_offset = 0.25;

  void validate() const;
};

struct SynthData {
  EmbeddingMatrix queries;
  EmbeddingMatrix gallery;
  EmbeddingMatrix querybank;
  GroundTruth gt;
};

SynthData generate(const SynthSpec& spec);

struct ExperimentSide {
  RetrievalMetrics metrics;
  HubnessReport hubness;
  std::vector<std::size_t> retrieval_counts;  // top-1 counts, sorted descending
};

struct ExperimentReport {
  SynthSpec spec;
  NormaliserConfig cfg;
  ExperimentSide before;
  ExperimentSide after;
};

ExperimentReport run_experiment(const SynthSpec& spec, const NormaliserConfig& cfg,
                                std::size_t hubness_k = kDefaultHubnessK);

/// Before/after comparison on already materialised data.
ExperimentReport run_experiment(const SynthData& data, const SynthSpec& spec, const NormaliserConfig& cfg,
                                std::size_t hubness_k = kDefaultHubnessK);

}  // namespace qbnorm
