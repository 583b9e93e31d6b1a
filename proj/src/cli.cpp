#include "disf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "disf/bench.hpp"
#include "disf/corpus_io.hpp"
#include "disf/diagnostics.hpp"
#include "disf/error.hpp"
#include "disf/parallel.hpp"
#include "disf/report_json.hpp"
#include "disf/selector.hpp"
#include "disf/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace disf::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

struct RunConfig {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::string out;
  double budget_fraction = 0.015;
  std::size_t batch_scale = 1024;
  std::uint64_t seed = 42;
  std::string method = "disf";
  std::string workers_flag;
  std::size_t workers = 1;
  std::string norm_scope = "batch";
  bool no_shuffle = false;
  bool strict_batching = false;
  std::string centroid_file;
  std::size_t dim = 256;
  std::vector<std::size_t> ngram_orders{1, 2};
  bool no_lowercase = false;
  bool with_diversity = false;
  std::string ids_file;
  std::size_t curve_start = 2;
  std::size_t curve_step = 0;
  std::size_t curve_trials = 10;
  std::string curve_scope = "selection";
  std::size_t submod_samples = 200;
  std::size_t n = 4096;
  bool inject_gram_fault = false;
  std::size_t quota = 16;
  std::vector<std::size_t> grid{128, 256, 512, 1024, 2048};
  std::size_t batches = 2;
  std::size_t repeats = 3;
};

json echo(const RunConfig& c) {
  json j = {{"subcommand", c.subcommand}, {"inputs", c.inputs}, {"out", c.out}, {"seed", c.seed}};
  if (c.subcommand == "featurize") {
    j["dim"] = c.dim;
    j["ngram_orders"] = c.ngram_orders;
    j["lowercase"] = !c.no_lowercase;
  } else if (c.subcommand == "select") {
    j.update({{"budget_fraction", c.budget_fraction},
              {"batch_scale", c.batch_scale},
              {"method", c.method},
              {"workers", c.workers},
              {"norm_scope", c.norm_scope},
              {"no_shuffle", c.no_shuffle},
              {"strict_batching", c.strict_batching},
              {"centroid_file", c.centroid_file},
              {"with_diversity", c.with_diversity}});
  } else if (c.subcommand == "analyze") {
    j.update({{"ids", c.ids_file},
              {"curve_start", c.curve_start},
              {"curve_step", c.curve_step},
              {"curve_trials", c.curve_trials},
              {"curve_scope", c.curve_scope},
              {"submod_samples", c.submod_samples}});
  } else if (c.subcommand == "verify") {
    j.update({{"n", c.n}, {"dim", c.dim}, {"workers", c.workers}, {"inject_gram_fault", c.inject_gram_fault}});
  } else if (c.subcommand == "bench") {
    j.update({{"dim", c.dim},
              {"quota", c.quota},
              {"grid", c.grid},
              {"batches", c.batches},
              {"repeats", c.repeats},
              {"method", c.method}});
  }
  return j;
}

// Input problems surface as I/O failures (exit 3) for every subcommand that
// consumes an existing corpus.
EmbeddingCorpus load_corpus(const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ArgumentError("--input is required");
  std::vector<EmbeddingCorpus> shards;
  for (const auto& path : inputs) {
    try {
      shards.push_back(read_embeddings(path));
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      throw IoError(std::string("reading ") + path + ": " + e.what());
    }
  }
  if (shards.size() == 1) return std::move(shards.front());
  try {
    return merge_corpora(shards);
  } catch (const Error& e) {
    throw IoError(std::string("merging inputs: ") + e.what());
  }
}

fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw ArgumentError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
  return fs::path(out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot create '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<double> read_centroid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open centroid file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream values(text);
  std::vector<double> centroid;
  std::string token;
  while (values >> token) {
    try {
      std::size_t used = 0;
      centroid.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ArgumentError("centroid file '" + path + "' holds a non-number: '" + token + "'");
    }
  }
  return centroid;
}

std::vector<Document> read_documents(const std::string& input) {
  std::vector<Document> docs;
  std::error_code ec;
  if (fs::is_directory(input, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    if (ec) throw ArgumentError("cannot list '" + input + "': " + ec.message());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream f(file, std::ios::binary);
      if (!f) throw ArgumentError("cannot read '" + file.string() + "'");
      docs.push_back({file.filename().string(),
                      std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>())});
    }
    return docs;
  }
  std::ifstream f(input, std::ios::binary);
  if (!f) throw ArgumentError("cannot read input '" + input + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ArgumentError(input + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() || !record.contains("text") ||
        !record["text"].is_string()) {
      throw ArgumentError(input + " line " + std::to_string(line_no) + ": expected {\"id\": string, \"text\": string}");
    }
    docs.push_back({record["id"].get<std::string>(), record["text"].get<std::string>()});
  }
  return docs;
}

RowMatrixXd gather_rows(const EmbeddingCorpus& corpus, const std::vector<std::size_t>& rows) {
  RowMatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(corpus.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = corpus.features.row(static_cast<Eigen::Index>(rows[i])).cast<double>();
  }
  return out;
}

DiversityOptions diversity_options(const RunConfig& c) {
  DiversityOptions o;
  o.curve_start = c.curve_start;
  o.curve_step = c.curve_step;
  o.curve_trials = c.curve_trials;
  o.submodularity_samples = c.submod_samples;
  return o;
}

int cmd_featurize(const RunConfig& c, std::ostream& out) {
  const auto started = Clock::now();
  if (c.inputs.size() != 1) throw ArgumentError("featurize takes exactly one --input");
  if (c.out.empty()) throw ArgumentError("--out is required");
  const auto docs = read_documents(c.inputs.front());
  if (docs.empty()) throw ArgumentError("no documents found in '" + c.inputs.front() + "'");

  FeaturizerConfig fc;
  fc.dimension = c.dim;
  fc.ngram_orders = {c.ngram_orders.begin(), c.ngram_orders.end()};
  fc.lowercase = !c.no_lowercase;
  const auto corpus = featurize_text(docs, fc);
  write_embeddings(corpus, c.out);
  out << "featurized n=" << corpus.size() << " d=" << corpus.dim() << " -> " << c.out << " in "
      << format_double(seconds_since(started)) << " s\n";
  return kSuccess;
}

int cmd_select(const RunConfig& c, std::ostream& out) {
  const auto started = Clock::now();
  SelectionConfig config;
  config.budget_fraction = c.budget_fraction;
  config.batch_scale = c.batch_scale;
  config.seed = c.seed;
  config.method = parse_method(c.method);
  config.normalization_scope = parse_norm_scope(c.norm_scope);
  config.shuffle = !c.no_shuffle;
  config.strict_batching = c.strict_batching;
  config.workers = c.workers;
  config.validate();
  if (!c.centroid_file.empty()) config.centroid = read_centroid(c.centroid_file);

  const auto corpus = load_corpus(c.inputs);
  const auto dir = prepare_out_dir(c.out);
  const auto result = select_corpus(corpus, config);

  std::string ids;
  for (const auto& id : result.selected_ids) ids += id + '\n';
  write_text(dir / "selected.ids", ids);

  json report = {{"config", echo(c)},
                 {"corpus", {{"n", corpus.size()}, {"d", corpus.dim()}}},
                 {"selection", to_json(result)},
                 {"selection_path", (dir / "selected.ids").string()}};
  if (c.with_diversity && result.selected_ids.size() >= 2) {
    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus.ids[i], i);
    std::vector<std::size_t> rows;
    for (const auto& id : result.selected_ids) rows.push_back(index.at(id));
    auto options = diversity_options(c);
    if (config.normalization_scope == NormScope::corpus) {
      options.curve_reference = feature_moments(corpus.features.cast<double>());
    }
    SplitMix64 rng(c.seed);
    report["diversity"] = to_json(diversity_report(gather_rows(corpus, rows), options, rng));
  }
  report["total_seconds"] = seconds_since(started);
  write_text(dir / "report.json", report.dump(2) + "\n");

  out << "selected " << result.selected_ids.size() << " of " << corpus.size() << " samples in "
      << result.per_batch.size() << " batches (" << c.method << ") -> " << (dir / "selected.ids").string() << "\n";
  return kSuccess;
}

int cmd_analyze(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto corpus = load_corpus(c.inputs);
  std::vector<std::size_t> rows;
  if (c.ids_file.empty()) {
    rows = iota_indices(corpus.size());
  } else {
    std::ifstream in(c.ids_file);
    if (!in) throw IoError("cannot open id list '" + c.ids_file + "'");
    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus.ids[i], i);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto it = index.find(line);
      if (it == index.end()) throw ArgumentError("id '" + line + "' not found in corpus");
      rows.push_back(it->second);
    }
  }
  if (rows.size() < 2) {
    throw ArgumentError("analyze needs at least 2 samples, got " + std::to_string(rows.size()));
  }

  const auto dir = prepare_out_dir(c.out);
  const auto features = gather_rows(corpus, rows);
  auto options = diversity_options(c);
  if (c.curve_scope == "corpus") {
    options.curve_reference = feature_moments(corpus.features.cast<double>());
  } else if (c.curve_scope != "selection") {
    throw ArgumentError("unknown curve scope '" + c.curve_scope + "' (expected selection or corpus)");
  }
  SplitMix64 rng(c.seed);
  const auto report = diversity_report(features, options, rng);
  json doc = to_json(report);
  doc["config"] = echo(c);
  write_text(dir / "diversity.json", doc.dump(2) + "\n");

  std::string csv = "id,x,y\n";
  if (rows.size() >= 3) {
    const auto pca = pca_project_2d(features);
    if (pca.degenerate) err << "warning: covariance rank < 2, second PCA coordinate set to 0\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      csv += csv_field(corpus.ids[rows[i]]) + "," + format_double(pca.coords(r, 0)) + "," +
             format_double(pca.coords(r, 1)) + "\n";
    }
  } else {
    err << "warning: PCA needs at least 3 samples; pca.csv holds only the header\n";
  }
  write_text(dir / "pca.csv", csv);

  out << "analyzed " << rows.size() << " samples:";
  for (const auto& [k, v] : report.dominance) out << " dominance@" << k << "=" << format_double(v);
  out << " spearman=" << format_double(report.monotonicity.spearman_rho) << "\n";
  return kSuccess;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  VerifyOptions o;
  o.n = c.n;
  o.dim = c.dim;
  o.seed = c.seed;
  o.workers = c.workers;
  o.inject_gram_fault = c.inject_gram_fault;
  if (o.n < 16 || o.dim < 4) throw ArgumentError("verify needs --n >= 16 and --dim >= 4");
  bool all = true;
  for (const auto& check : run_verification(o)) {
    out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << "\n";
    all = all && check.passed;
  }
  return all ? kSuccess : kVerificationFailed;
}

int cmd_bench(const RunConfig& c, std::ostream& out, std::ostream& err) {
  BenchOptions o;
  o.grid = c.grid;
  o.quota = c.quota;
  o.dim = c.dim;
  o.batches = c.batches;
  o.repeats = c.repeats;
  o.seed = c.seed;
  o.method = parse_method(c.method);
  std::optional<EmbeddingCorpus> corpus;
  if (!c.inputs.empty()) corpus = load_corpus(c.inputs);
  const auto dir = prepare_out_dir(c.out);
  const auto result = run_bench(o, corpus ? &*corpus : nullptr);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  std::string csv = "b,quota,d,seconds_per_batch,seconds_total\n";
  for (const auto& r : result.rows) {
    csv += std::to_string(r.batch_scale) + "," + std::to_string(r.quota) + "," + std::to_string(r.dim) + "," +
           format_double(r.seconds_per_batch) + "," + format_double(r.seconds_total) + "\n";
  }
  write_text(dir / "bench.csv", csv);
  out << csv << "scaling exponent (seconds/batch vs b): " << format_double(result.exponent) << "\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Diversified data selection: featurize, select, analyze, verify, bench"};
  app.require_subcommand(1, 1);
  std::optional<std::string> workers_flag;

  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", c.seed, "Root seed (splitmix64)")->capture_default_str(); };
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", c.workers_flag, "Worker threads: a positive integer or 'auto' (env DISF_WORKERS)");
  };

  auto* featurize = app.add_subcommand("featurize", "Hash text documents into a DISF corpus");
  featurize->add_option("--input", c.inputs, "Directory of .txt files or JSONL of {id, text}")->required();
  featurize->add_option("--out", c.out, "Output corpus path")->required();
  featurize->add_option("--dim", c.dim, "Feature dimension")->capture_default_str();
  featurize->add_option("--ngram-orders", c.ngram_orders, "Word n-gram orders")->delimiter(',')->capture_default_str();
  featurize->add_flag("--no-lowercase", c.no_lowercase, "Keep ASCII case");

  auto* select = app.add_subcommand("select", "Select a diversified subset");
  select->add_option("--input", c.inputs, "Corpus file(s); shards are merged in order")->required();
  select->add_option("--out", c.out, "Output directory")->required();
  select->add_option("--budget-fraction", c.budget_fraction, "Fraction of each batch to keep")->capture_default_str();
  select->add_option("--batch-scale", c.batch_scale, "Batch size b")->capture_default_str();
  add_seed(select);
  select->add_option("--method", c.method, "disf|logdet|facility|random|centroid")->capture_default_str();
  add_workers(select);
  select->add_option("--norm-scope", c.norm_scope, "batch|corpus standardization statistics")->capture_default_str();
  select->add_flag("--no-shuffle", c.no_shuffle, "Batch in corpus order");
  select->add_flag("--strict-batching", c.strict_batching, "Drop the final partial batch");
  select->add_option("--centroid-file", c.centroid_file, "Centroid vector for --method centroid");
  select->add_flag("--diversity", c.with_diversity, "Embed a diversity report in report.json");

  auto* analyze = app.add_subcommand("analyze", "Diversity diagnostics for a corpus or an id list");
  analyze->add_option("--input", c.inputs, "Corpus file(s)")->required();
  analyze->add_option("--ids", c.ids_file, "Newline-delimited ids to analyze (default: all)");
  analyze->add_option("--out", c.out, "Output directory")->required();
  add_seed(analyze);
  analyze->add_option("--curve-start", c.curve_start)->capture_default_str();
  analyze->add_option("--curve-step", c.curve_step, "0 picks about 20 points")->capture_default_str();
  analyze->add_option("--curve-trials", c.curve_trials)->capture_default_str();
  analyze->add_option("--curve-scope", c.curve_scope, "selection|corpus statistics for standardizing curve subsets")
      ->capture_default_str();
  analyze->add_option("--submod-samples", c.submod_samples, "Triples for the submodularity estimate (0 skips)")
      ->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Run the built-in verification suite");
  verify->add_option("--n", c.n, "Fixture rows")->capture_default_str();
  verify->add_option("--dim", c.dim, "Fixture dimension")->default_str("64");
  add_seed(verify);
  add_workers(verify);
  verify->add_flag("--inject-gram-fault", c.inject_gram_fault, "Corrupt the Gram cache (self-test of the suite)");

  auto* bench = app.add_subcommand("bench", "Time selection across batch scales");
  bench->add_option("--input", c.inputs, "Corpus file(s) (default: synthetic Gaussian)");
  bench->add_option("--out", c.out, "Output directory")->required();
  bench->add_option("--dim", c.dim, "Synthetic feature dimension")->default_str("768");
  bench->add_option("--quota", c.quota, "Picks per batch")->capture_default_str();
  bench->add_option("--grid", c.grid, "Batch scales")->delimiter(',')->capture_default_str();
  bench->add_option("--batches", c.batches, "Batches timed per grid point")->capture_default_str();
  bench->add_option("--repeats", c.repeats, "Timing repeats (fastest kept)")->capture_default_str();
  bench->add_option("--method", c.method)->capture_default_str();
  add_seed(bench);

  // Subcommand-specific defaults that differ from the shared struct.
  bool dim_given = false;
  std::vector<const char*> argv{"disf"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
    if (a == "--dim" || a.rfind("--dim=", 0) == 0) dim_given = true;
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  if (!dim_given) {
    if (c.subcommand == "verify") c.dim = 64;
    if (c.subcommand == "bench") c.dim = 768;
  }

  try {
    if (!c.workers_flag.empty()) workers_flag = c.workers_flag;
    if (c.subcommand == "select" || c.subcommand == "verify") c.workers = resolve_workers(workers_flag);
    if (c.subcommand == "featurize") return cmd_featurize(c, out);
    if (c.subcommand == "select") return cmd_select(c, out);
    if (c.subcommand == "analyze") return cmd_analyze(c, out, err);
    if (c.subcommand == "verify") return cmd_verify(c, out);
    return cmd_bench(c, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace disf::cli
