#include "qbnorm/cli.hpp"

#include "qbnorm/probe_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace qbnorm::cli {

namespace {

// Streams to <path>.tmp and renames on commit; an uncommitted file is removed.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path) : path_(std::move(path)), tmp_(path_) {
    tmp_ += ".tmp";
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open for writing: " + tmp_.string());
  }
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + tmp_.string());
    out_.close();
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw IoError("cannot rename into place: " + path_.string());
    committed_ = true;
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

std::string_view format_name(EmbeddingFormat f) { return f == EmbeddingFormat::binary ? "binary" : "csv"; }

void write_json(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    std::string_view field = line.substr(0, comma);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

EmbeddingMatrix load_checked(const std::filesystem::path& path, EmbeddingFormat format) {
  try {
    return load_embeddings(path, format);
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  }
}

}  // namespace

double round4(double x) {
  if (!std::isfinite(x)) return x;
  const double r = std::round(x * 1e4) / 1e4;
  return r == 0.0 ? 0.0 : r;  // no "-0.0" in reports
}

Json config_json(const NormaliserConfig& cfg) {
  Json j;
  j["method"] = std::string(to_string(cfg.method));
  j["beta"] = cfg.beta;
  j["k_activation"] = cfg.k_activation;
  j["K_csls"] = cfg.k_csls;
  j["querybank_size_cap"] = cfg.querybank_size_cap ? Json(*cfg.querybank_size_cap) : Json(nullptr);
  j["seed"] = cfg.subsample_seed;
  return j;
}

Json metrics_json(const RetrievalMetrics& m) {
  Json j;
  for (const auto& [k, v] : m.r_at) j["R@" + std::to_string(k)] = round4(v);
  j["MdR"] = round4(m.mdr);
  j["GM"] = round4(m.geometric_mean);
  return j;
}

Json hubness_json(const HubnessReport& h) {
  Json j;
  j["skewness"] = round4(h.skewness);
  j["max_count"] = h.max_count;
  j["unretrieved"] = h.unretrieved;
  j["k"] = h.k;
  return j;
}

Json synth_spec_json(const SynthSpec& spec) {
  Json j;
  j["n_queries"] = spec.n_queries;
  j["n_gallery"] = spec.n_gallery;
  j["n_querybank"] = spec.n_querybank;
  j["dim"] = spec.dim;
  j["seed"] = spec.seed;
  j["correlation"] = spec.correlation;
  j["mean_offset"] = spec.mean_offset;
  return j;
}

GroundTruthFile parse_ground_truth(const std::string& text) {
  GroundTruthFile gt;
  std::unordered_set<std::string> seen;
  std::string_view rest(text);
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 2 || fields[0].empty()) {
      throw FormatError("ground truth line " + std::to_string(line_no) + ": expected query_id,gallery_id[,...]");
    }
    std::string query(fields[0]);
    if (!seen.insert(query).second) throw ValidationError("ground truth repeats query id " + query);
    std::vector<std::string> relevant;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) throw FormatError("ground truth line " + std::to_string(line_no) + ": empty id");
      relevant.emplace_back(fields[i]);
    }
    gt.query_ids.push_back(std::move(query));
    gt.relevant.push_back(std::move(relevant));
  }
  return gt;
}

std::string format_ground_truth(const GroundTruthFile& gt) {
  std::string out;
  for (std::size_t q = 0; q < gt.query_ids.size(); ++q) {
    out += gt.query_ids[q];
    for (const auto& id : gt.relevant[q]) out += "," + id;
    out += "\n";
  }
  return out;
}

RankingsFile parse_rankings(const std::string& text) {
  RankingsFile file;
  std::string_view rest(text);
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw FormatError("rankings line " + std::to_string(line_no) + ": not a JSON object");
    }
    if (j.contains("config")) {
      if (line_no != 1 || !file.queries.empty()) throw FormatError("rankings config header must be the first line");
      file.config = j["config"];
      continue;
    }
    try {
      RankedQuery q;
      q.query = j.at("query").get<std::string>();
      q.ids = j.at("ids").get<std::vector<std::string>>();
      if (j.contains("scores")) q.scores = j["scores"].get<std::vector<double>>();
      file.queries.push_back(std::move(q));
    } catch (const Json::exception& e) {
      throw FormatError("rankings line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

void cmd_precompute(const PrecomputeOptions& opt) {
  opt.cfg.validate();
  EmbeddingMatrix bank = load_checked(opt.querybank, opt.format);
  const EmbeddingMatrix gallery = load_checked(opt.gallery, opt.format);
  if (opt.cfg.querybank_size_cap) {
    bank = subsample_querybank(bank, *opt.cfg.querybank_size_cap, opt.cfg.subsample_seed);
  }
  ProbeArtifact artifact;
  artifact.method = opt.cfg.method;
  artifact.gallery_fingerprint = gallery_fingerprint(gallery);
  try {
    artifact.index = build_probe(bank, gallery, opt.cfg);
  } catch (const ShapeError& e) {
    throw ShapeError(opt.querybank.string() + " vs " + opt.gallery.string() + ": " + e.what());
  }
  save_probe(artifact, opt.out);
}

void cmd_rank(const RankOptions& opt) {
  opt.cfg.validate();
  if (opt.topk_output < 1) throw ArgumentError("--topk-output must be >= 1");
  const EmbeddingMatrix queries = load_checked(opt.queries, opt.format);
  const EmbeddingMatrix gallery = load_checked(opt.gallery, opt.format);
  if (queries.dim() != gallery.dim()) {
    throw ShapeError(opt.queries.string() + " has dim " + std::to_string(queries.dim()) + ", " +
                     opt.gallery.string() + " has dim " + std::to_string(gallery.dim()));
  }

  Json config = config_json(opt.cfg);
  config["command"] = "rank";
  config["queries"] = opt.queries.string();
  config["gallery"] = opt.gallery.string();
  config["probe"] = opt.probe ? Json(opt.probe->string()) : Json(nullptr);
  config["querybank"] = opt.querybank ? Json(opt.querybank->string()) : Json(nullptr);
  config["format"] = std::string(format_name(opt.format));
  config["topk_output"] = opt.topk_output;

  ProbeIndex index;
  if (opt.probe) {
    ProbeArtifact artifact = load_probe(*opt.probe);
    if (artifact.gallery_fingerprint != gallery_fingerprint(gallery)) {
      throw ValidationError(opt.probe->string() + " was built for a different gallery than " + opt.gallery.string());
    }
    const ProbeIndex& p = artifact.index;
    if (p.beta != opt.cfg.beta || p.k_activation != opt.cfg.k_activation || p.k_csls != opt.cfg.k_csls) {
      throw ValidationError(opt.probe->string() + " was built with beta=" + std::to_string(p.beta) +
                            " k_activation=" + std::to_string(p.k_activation) + " K_csls=" +
                            std::to_string(p.k_csls) + "; pass matching flags");
    }
    index = std::move(artifact.index);
  } else if (opt.querybank) {
    EmbeddingMatrix bank = load_checked(*opt.querybank, opt.format);
    if (opt.cfg.querybank_size_cap) {
      bank = subsample_querybank(bank, *opt.cfg.querybank_size_cap, opt.cfg.subsample_seed);
    }
    index = build_probe(bank, gallery, opt.cfg);
  } else if (opt.cfg.method == Method::none) {
    index.gallery_size = gallery.rows();
    index.activation_mask.assign(gallery.rows(), 0);
  } else {
    throw ArgumentError("rank needs --probe or --querybank for method " + std::string(to_string(opt.cfg.method)));
  }

  const QbNormRanker ranker(gallery, std::move(index), opt.cfg.method);
  const std::size_t emit = std::min<std::size_t>(opt.topk_output, gallery.rows());
  constexpr std::size_t kChunk = 512;

  AtomicFile out(opt.out);
  out.stream() << Json{{"config", config}}.dump() << "\n";
  for (Index begin = 0; begin < queries.rows(); begin += kChunk) {
    const Index end = std::min<Index>(begin + kChunk, queries.rows());
    const auto rankings = ranker.rank_rows(queries, begin, end);
    for (std::size_t i = 0; i < rankings.size(); ++i) {
      const Ranking& r = rankings[i];
      Json line;
      line["query"] = queries.ids()[begin + i];
      Json ids = Json::array();
      Json scores = Json::array();
      for (std::size_t t = 0; t < emit; ++t) {
        ids.push_back(gallery.ids()[r.order[t]]);
        scores.push_back(r.scores[static_cast<Eigen::Index>(r.order[t])]);
      }
      line["ids"] = std::move(ids);
      line["scores"] = std::move(scores);
      out.stream() << line.dump() << "\n";
    }
  }
  out.commit();
}

void cmd_eval(const EvalOptions& opt) {
  const RankingsFile rankings = parse_rankings(read_file(opt.rankings));
  const GroundTruthFile gt = parse_ground_truth(read_file(opt.gt));
  std::unordered_map<std::string, std::size_t> gt_row;
  for (std::size_t q = 0; q < gt.query_ids.size(); ++q) gt_row.emplace(gt.query_ids[q], q);
  if (rankings.queries.empty()) throw ValidationError(opt.rankings.string() + ": no ranked queries");

  std::vector<std::size_t> ranks;
  ranks.reserve(rankings.queries.size());
  std::size_t censored = 0;
  for (const auto& rq : rankings.queries) {
    auto it = gt_row.find(rq.query);
    if (it == gt_row.end()) {
      throw ValidationError("query id '" + rq.query + "' from " + opt.rankings.string() + " is missing from " +
                            opt.gt.string());
    }
    const auto& relevant = gt.relevant[it->second];
    std::size_t best = 0;
    for (std::size_t pos = 0; pos < rq.ids.size() && best == 0; ++pos) {
      if (std::find(relevant.begin(), relevant.end(), rq.ids[pos]) != relevant.end()) best = pos + 1;
    }
    if (best == 0) {
      // outside the emitted top-M: M + 1 is a lower bound on the true rank
      best = rq.ids.size() + 1;
      ++censored;
    }
    ranks.push_back(best);
  }

  Json report = metrics_json(evaluate(ranks));
  report["num_queries"] = ranks.size();
  report["censored"] = censored;
  Json config;
  config["command"] = "eval";
  config["rankings"] = opt.rankings.string();
  config["gt"] = opt.gt.string();
  config["rankings_config"] = rankings.config;
  report["config"] = config;
  write_json(opt.out, report);
}

void cmd_hubness(const HubnessOptions& opt) {
  if (opt.k < 1) throw ArgumentError("k must be >= 1");
  if (opt.gallery_size < 1) throw ArgumentError("--gallery-size must be >= 1");
  if (opt.k > opt.gallery_size) {
    throw ArgumentError("k=" + std::to_string(opt.k) + " exceeds gallery size " + std::to_string(opt.gallery_size));
  }
  const RankingsFile rankings = parse_rankings(read_file(opt.rankings));
  std::unordered_map<std::string, Index> index_of;
  std::vector<std::vector<Index>> lists;
  lists.reserve(rankings.queries.size());
  for (const auto& rq : rankings.queries) {
    if (rq.ids.size() < opt.k) {
      throw ValidationError("query '" + rq.query + "' lists " + std::to_string(rq.ids.size()) +
                            " ids, fewer than k=" + std::to_string(opt.k));
    }
    std::vector<Index> list;
    list.reserve(opt.k);
    for (std::size_t t = 0; t < opt.k; ++t) {
      auto [it, inserted] = index_of.try_emplace(rq.ids[t], index_of.size());
      if (inserted && index_of.size() > opt.gallery_size) {
        throw ValidationError("rankings mention more than --gallery-size=" + std::to_string(opt.gallery_size) +
                              " distinct gallery ids");
      }
      list.push_back(it->second);
    }
    lists.push_back(std::move(list));
  }
  const HubnessReport h = hubness_report(lists, opt.k, opt.gallery_size);
  Json report = hubness_json(h);
  report["num_queries"] = lists.size();
  Json config;
  config["command"] = "hubness";
  config["rankings"] = opt.rankings.string();
  config["k"] = opt.k;
  config["gallery_size"] = opt.gallery_size;
  config["rankings_config"] = rankings.config;
  report["config"] = config;
  write_json(opt.out, report);
}

void cmd_synth(const SynthOptions& opt) {
  opt.spec.validate();
  opt.cfg.validate();
  const SynthData data = generate(opt.spec);
  const ExperimentReport r = run_experiment(data, opt.spec, opt.cfg, opt.hubness_k);

  auto side_json = [](const ExperimentSide& side) {
    Json j = metrics_json(side.metrics);
    const Json h = hubness_json(side.hubness);
    for (auto it = h.begin(); it != h.end(); ++it) j[it.key()] = it.value();
    return j;
  };
  Json config;
  config["command"] = "synth";
  config["spec"] = synth_spec_json(opt.spec);
  config["normaliser"] = config_json(opt.cfg);
  config["hubness_k"] = opt.hubness_k;
  Json report;
  report["config"] = config;
  report["seed"] = opt.spec.seed;
  report["before"] = side_json(r.before);
  report["after"] = side_json(r.after);

  std::filesystem::path counts_path = opt.counts_out.value_or(
      opt.out.parent_path() / (opt.out.stem().string() + "_counts.csv"));
  std::string counts = "position,before,after\n";
  for (std::size_t i = 0; i < r.before.retrieval_counts.size(); ++i) {
    counts += std::to_string(i + 1) + "," + std::to_string(r.before.retrieval_counts[i]) + "," +
              std::to_string(r.after.retrieval_counts[i]) + "\n";
  }

  if (opt.export_dir) {
    std::filesystem::create_directories(*opt.export_dir);
    save_embeddings(data.queries, *opt.export_dir / "queries.qbn");
    save_embeddings(data.gallery, *opt.export_dir / "gallery.qbn");
    save_embeddings(data.querybank, *opt.export_dir / "querybank.qbn");
    GroundTruthFile gt;
    for (std::size_t q = 0; q < data.gt.size(); ++q) {
      gt.query_ids.push_back(data.queries.ids()[q]);
      std::vector<std::string> rel;
      for (Index j : data.gt.relevant[q]) rel.push_back(data.gallery.ids()[j]);
      gt.relevant.push_back(std::move(rel));
    }
    write_file_atomic(*opt.export_dir / "gt.csv", format_ground_truth(gt));
  }
  write_file_atomic(counts_path, counts);
  write_json(opt.out, report);
}

namespace {

struct SharedFlags {
  std::string method = "dis";
  double beta = 20.0;
  std::size_t k_activation = 1;
  std::size_t k_csls = 10;
  std::uint64_t seed = 0;
  std::size_t querybank_cap = 0;
  std::size_t topk_output = kDefaultTopkOutput;
  std::string format = "binary";

  void attach(CLI::App* app) {
    app->add_option("--method", method, "Normaliser")
        ->check(CLI::IsMember({"none", "gc", "csls", "is", "dis"}))
        ->capture_default_str();
    app->add_option("--beta", beta, "Inverse temperature for IS/DIS")->capture_default_str();
    app->add_option("--k-activation", k_activation, "Top-k per querybank item for the DIS activation set")
        ->capture_default_str();
    app->add_option("--K-csls", k_csls, "CSLS neighbourhood size")->capture_default_str();
    app->add_option("--seed", seed, "Seed")->capture_default_str();
    app->add_option("--querybank-cap", querybank_cap, "Uniformly subsample the querybank to this size (0 = all)");
    app->add_option("--topk-output", topk_output, "Ranked ids emitted per query")->capture_default_str();
    app->add_option("--format", format, "Embedding file format")
        ->check(CLI::IsMember({"binary", "csv"}))
        ->capture_default_str();
  }

  NormaliserConfig config() const {
    NormaliserConfig cfg;
    cfg.method = parse_method(method);
    cfg.beta = beta;
    cfg.k_activation = k_activation;
    cfg.k_csls = k_csls;
    if (querybank_cap > 0) cfg.querybank_size_cap = querybank_cap;
    cfg.subsample_seed = seed;
    return cfg;
  }

  EmbeddingFormat embedding_format() const {
    return format == "csv" ? EmbeddingFormat::csv : EmbeddingFormat::binary;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& err) {
  CLI::App app{"Querybank normalisation for cross-modal retrieval"};
  app.require_subcommand(1);

  SharedFlags flags;
  std::string querybank, gallery, queries, probe, out, rankings, gt, counts_out, export_dir;
  std::size_t k = kDefaultHubnessK;
  std::size_t gallery_size = 0;
  SynthSpec spec;

  auto* pre = app.add_subcommand("precompute", "Build a probe artifact from a querybank and gallery");
  pre->add_option("--querybank", querybank)->required();
  pre->add_option("--gallery", gallery)->required();
  pre->add_option("--out,-o", out)->required();
  flags.attach(pre);

  auto* rank = app.add_subcommand("rank", "Rank a gallery for each query (JSON lines)");
  rank->add_option("--queries", queries)->required();
  rank->add_option("--gallery", gallery)->required();
  auto* probe_opt = rank->add_option("--probe", probe, "Probe artifact from precompute");
  rank->add_option("--querybank", querybank, "Build the probe on the fly")->excludes(probe_opt);
  rank->add_option("--out,-o", out)->required();
  flags.attach(rank);

  auto* ev = app.add_subcommand("eval", "Retrieval metrics for a rankings file");
  ev->add_option("--rankings", rankings)->required();
  ev->add_option("--gt", gt, "CSV: query_id,gallery_id[,gallery_id...]")->required();
  ev->add_option("--out,-o", out)->required();

  auto* hub = app.add_subcommand("hubness", "k-occurrence skewness of a rankings file");
  hub->add_option("--rankings", rankings)->required();
  hub->add_option("--k", k, "k-occurrence neighbourhood")->capture_default_str();
  hub->add_option("--gallery-size", gallery_size)->required();
  hub->add_option("--out,-o", out)->required();

  auto* syn = app.add_subcommand("synth", "Synthetic before/after hubness experiment");
  syn->add_option("--n-queries", spec.n_queries)->capture_default_str();
  syn->add_option("--n-gallery", spec.n_gallery)->capture_default_str();
  syn->add_option("--n-querybank", spec.n_querybank)->capture_default_str();
  syn->add_option("--dim", spec.dim)->capture_default_str();
  syn->add_option("--correlation", spec.correlation)->capture_default_str();
  syn->add_option("--mean-offset", spec.mean_offset, "Latent mean shift as a fraction of sqrt(dim)")
      ->capture_default_str();
  syn->add_option("--hubness-k", k)->capture_default_str();
  syn->add_option("--counts-out", counts_out, "Sorted top-1 retrieval counts CSV");
  syn->add_option("--export-dir", export_dir, "Also write the generated embeddings and ground truth");
  syn->add_option("--out,-o", out)->required();
  flags.attach(syn);
  syn->get_option("--seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream sink;
    const int code = app.exit(e, sink, err);
    if (code == 0) err << sink.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (pre->parsed()) {
      cmd_precompute({querybank, gallery, flags.embedding_format(), flags.config(), out});
    } else if (rank->parsed()) {
      RankOptions opt;
      opt.queries = queries;
      opt.gallery = gallery;
      if (!probe.empty()) opt.probe = probe;
      if (!querybank.empty()) opt.querybank = querybank;
      opt.format = flags.embedding_format();
      opt.cfg = flags.config();
      opt.topk_output = flags.topk_output;
      opt.out = out;
      cmd_rank(opt);
    } else if (ev->parsed()) {
      cmd_eval({rankings, gt, out});
    } else if (hub->parsed()) {
      cmd_hubness({rankings, k, gallery_size, out});
    } else if (syn->parsed()) {
      SynthOptions opt;
      opt.spec = spec;
      opt.spec.seed = flags.seed;
      opt.cfg = flags.config();
      opt.hubness_k = k;
      opt.out = out;
      if (!counts_out.empty()) opt.counts_out = counts_out;
      if (!export_dir.empty()) opt.export_dir = export_dir;
      cmd_synth(opt);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace qbnorm::cli
