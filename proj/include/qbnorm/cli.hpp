#pragma once

#include "qbnorm/embedstore.hpp"
#include "qbnorm/evalmetrics.hpp"
#include "qbnorm/qbnorm.hpp"
#include "qbnorm/synthbench.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qbnorm::cli {

using Json = nlohmann::ordered_json;

inline constexpr std::size_t kDefaultTopkOutput = 100;

/// Rounds to 4 fractional digits for report output.
double round4(double x);

Json config_json(const NormaliserConfig& cfg);
Json metrics_json(const RetrievalMetrics& m);
Json hubness_json(const HubnessReport& h);
Json synth_spec_json(const SynthSpec& spec);

/// Query id -> relevant gallery ids; CSV rows `query_id,gallery_id[,gallery_id...]`.
struct GroundTruthFile {
  std::vector<std::string> query_ids;
  std::vector<std::vector<std::string>> relevant;
};
GroundTruthFile parse_ground_truth(const std::string& text);
std::string format_ground_truth(const GroundTruthFile& gt);

/// One line of a rankings file.
struct RankedQuery {
  std::string query;
  std::vector<std::string> ids;
  std::vector<double> scores;
};

struct RankingsFile {
  Json config;  // header line, null if absent
  std::vector<RankedQuery> queries;
};
RankingsFile parse_rankings(const std::string& text);

struct PrecomputeOptions {
  std::filesystem::path querybank;
  std::filesystem::path gallery;
  EmbeddingFormat format = EmbeddingFormat::binary;
  NormaliserConfig cfg;
  std::filesystem::path out;
};

struct RankOptions {
  std::filesystem::path queries;
  std::filesystem::path gallery;
  std::optional<std::filesystem::path> probe;
  std::optional<std::filesystem::path> querybank;
  EmbeddingFormat format = EmbeddingFormat::binary;
  NormaliserConfig cfg;
  std::size_t topk_output = kDefaultTopkOutput;
  std::filesystem::path out;
};

struct EvalOptions {
  std::filesystem::path rankings;
  std::filesystem::path gt;
  std::filesystem::path out;
};

struct HubnessOptions {
  std::filesystem::path rankings;
  std::size_t k = kDefaultHubnessK;
  std::size_t gallery_size = 0;
  std::filesystem::path out;
};

struct SynthOptions {
  SynthSpec spec;
  NormaliserConfig cfg;
  std::size_t hubness_k = kDefaultHubnessK;
  std::filesystem::path out;
  std::optional<std::filesystem::path> counts_out;  // defaults to <out stem>_counts.csv
  std::optional<std::filesystem::path> export_dir;  // embeddings + gt for the other subcommands
};

void cmd_precompute(const PrecomputeOptions& opt);
void cmd_rank(const RankOptions& opt);
void cmd_eval(const EvalOptions& opt);
void cmd_hubness(const HubnessOptions& opt);
void cmd_synth(const SynthOptions& opt);

/// Parses argv and dispatches. Returns 0 on success, 2 on input or
/// validation errors, 1 on anything else; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& err);

}  // namespace qbnorm::cli
