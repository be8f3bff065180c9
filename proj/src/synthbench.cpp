#include "qbnorm/synthbench.hpp"

#include <cmath>
#include <random>
#include <string>

namespace qbnorm {

void SynthSpec::validate() const {
  if (n_queries < 1 || n_gallery < 1 || n_querybank < 1 || dim < 1) {
    throw ArgumentError("synthetic spec counts and dim must all be >= 1");
  }
  if (!(correlation >= 0.0 && correlation <= 1.0)) {
    throw ArgumentError("correlation must lie in [0, 1]");
  }
  if (!(mean_offset >= 0.0) || !std::isfinite(mean_offset)) {
    throw ArgumentError("mean_offset must be a finite non-negative number");
  }
}

namespace {

class LatentSampler {
 public:
  LatentSampler(std::uint64_t seed, std::size_t dim, double mean_offset) : rng_(seed), dim_(dim) {
    Eigen::VectorXd u = gaussian();
    while (u.norm() == 0.0) u = gaussian();
    mean_ = u.normalized() * (mean_offset * std::sqrt(static_cast<double>(dim)));
  }

  Eigen::VectorXd unit_draw() {
    Eigen::VectorXd x = gaussian() + mean_;
    double n = x.norm();
    while (n == 0.0) {
      x = gaussian() + mean_;
      n = x.norm();
    }
    return x / n;
  }

 private:
  Eigen::VectorXd gaussian() {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal_(rng_);
    return v;
  }

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::size_t dim_;
  Eigen::VectorXd mean_;
};

Eigen::VectorXd mix(double correlation, const Eigen::VectorXd& signal, const Eigen::VectorXd& noise) {
  Eigen::VectorXd v = correlation * signal + (1.0 - correlation) * noise;
  const double n = v.norm();
  // antipodal signal and noise at correlation 0.5; fall back to the signal
  return n == 0.0 ? signal : Eigen::VectorXd(v / n);
}

EmbeddingMatrix to_matrix(const std::vector<Eigen::VectorXd>& rows, const std::string& prefix) {
  RowMatrixXf data(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::RowVectorXd r = rows[i].transpose();
    // renormalise after float rounding so the unit-norm invariant holds in f32
    const Eigen::RowVectorXf rf = r.cast<float>();
    data.row(static_cast<Eigen::Index>(i)) = (rf.cast<double>() / rf.cast<double>().norm()).cast<float>();
    ids.push_back(prefix + std::to_string(i));
  }
  return EmbeddingMatrix(std::move(ids), std::move(data), true);
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  LatentSampler sampler(spec.seed, spec.dim, spec.mean_offset);

  std::vector<Eigen::VectorXd> gallery(spec.n_gallery);
  for (auto& g : gallery) g = sampler.unit_draw();

  std::vector<Eigen::VectorXd> queries(spec.n_queries);
  GroundTruth gt;
  gt.relevant.resize(spec.n_queries);
  for (std::size_t i = 0; i < spec.n_queries; ++i) {
    const std::size_t target = i % spec.n_gallery;
    queries[i] = mix(spec.correlation, gallery[target], sampler.unit_draw());
    gt.relevant[i] = {target};
  }

  std::vector<Eigen::VectorXd> bank(spec.n_querybank);
  for (auto& b : bank) {
    const Eigen::VectorXd anchor = sampler.unit_draw();
    b = mix(spec.correlation, anchor, sampler.unit_draw());
  }

  return SynthData{to_matrix(queries, "q"), to_matrix(gallery, "g"), to_matrix(bank, "b"), std::move(gt)};
}

namespace {

ExperimentSide measure(const std::vector<Ranking>& rankings, const GroundTruth& gt, Index gallery_size,
                       std::size_t hubness_k) {
  ExperimentSide side;
  side.metrics = evaluate(rankings, gt);
  side.hubness = hubness_report(rankings, hubness_k, gallery_size);
  side.retrieval_counts = retrieval_count_histogram(rankings, gallery_size);
  return side;
}

}  // namespace

ExperimentReport run_experiment(const SynthData& data, const SynthSpec& spec, const NormaliserConfig& cfg,
                                std::size_t hubness_k) {
  cfg.validate();
  ExperimentReport report{spec, cfg, {}, {}};
  NormaliserConfig baseline = cfg;
  baseline.method = Method::none;
  const auto before = rank_with_qbnorm(data.queries, data.gallery, data.querybank, baseline);
  report.before = measure(before, data.gt, data.gallery.rows(), hubness_k);
  if (cfg.method == Method::none) {
    report.after = report.before;
    return report;
  }
  const auto after = rank_with_qbnorm(data.queries, data.gallery, data.querybank, cfg);
  report.after = measure(after, data.gt, data.gallery.rows(), hubness_k);
  return report;
}

ExperimentReport run_experiment(const SynthSpec& spec, const NormaliserConfig& cfg, std::size_t hubness_k) {
  return run_experiment(generate(spec), spec, cfg, hubness_k);
}

}  // namespace qbnorm
