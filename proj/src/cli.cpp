#include "contro/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "contro/corpus.hpp"
#include "contro/dataset.hpp"
#include "contro/error.hpp"
#include "contro/experiments.hpp"
#include "contro/labeler.hpp"
#include "contro/learn.hpp"
#include "contro/postfeat.hpp"
#include "contro/report.hpp"
#include "contro/synth.hpp"
#include "contro/text.hpp"

namespace contro {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) h = (h ^ c) * 1099511628211ull;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Raised for bad flag values detected after parsing; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<std::string> posts;
  std::vector<std::string> comments;
  std::vector<std::string> community;
  std::string embeddings;
  std::string comment_vectors;
  std::string wordlists;
  std::string out;
  std::string in;
  std::string validate_ids;
  std::vector<std::string> features;
  std::string baseline;
  std::string t;
  std::string pooling = "mean";
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t folds = 15;
  std::size_t n_posts = 1000;
  int k = 1;
  int ngram_max = 3;
  double alpha0 = 500.0;
  std::size_t top = 50;
  std::size_t pca_dim = 100;
  std::size_t text_max_tokens = 512;
  json grid;   // Grid::to_json layout; empty = standard grid
  json synth;  // SynthConfig::to_json layout

  json to_json() const {
    return {{"posts", posts},
            {"comments", comments},
            {"community", community},
            {"embeddings", embeddings},
            {"comment_vectors", comment_vectors},
            {"wordlists", wordlists},
            {"out", out},
            {"in", in},
            {"validate_ids", validate_ids},
            {"features", features},
            {"baseline", baseline},
            {"t", t},
            {"pooling", pooling},
            {"seed", seed},
            {"alpha", alpha},
            {"folds", folds},
            {"n_posts", n_posts},
            {"k", k},
            {"ngram_max", ngram_max},
            {"alpha0", alpha0},
            {"top", top},
            {"pca_dim", pca_dim},
            {"text_max_tokens", text_max_tokens},
            {"grid", grid},
            {"synth", synth}};
  }
};

// Binds each flag to a RunConfig field and remembers how to fill the field
// from a config file when the flag was not given.
class Binder {
 public:
  Binder(CLI::App* app, RunConfig& cfg) : app_(app), cfg_(cfg) {}

  template <typename T>
  CLI::Option* add(const std::string& key, T RunConfig::*field, const std::string& help) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    auto* opt = app_->add_option(flag, cfg_.*field, help);
    fillers_.push_back([this, key, field, opt](const json& j) {
      if (opt->count() == 0 && j.contains(key)) cfg_.*field = j.at(key).get<T>();
    });
    return opt;
  }

  void apply_file(const json& j) {
    for (auto& f : fillers_) f(j);
    if (j.contains("grid")) cfg_.grid = j.at("grid");
    if (j.contains("synth")) cfg_.synth = j.at("synth");
  }

 private:
  CLI::App* app_;
  RunConfig& cfg_;
  std::vector<std::function<void(const json&)>> fillers_;
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw DataError("cannot write " + p.string());
  o << content;
  if (!o) throw DataError("write failed: " + p.string());
}

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + p.string());
  return j;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing --") + what);
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path);
}

fs::path prepare_out(const RunConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("missing --out");
  fs::create_directories(cfg.out);
  return cfg.out;
}

struct Context {
  std::string command;
  std::vector<std::string> argv;
  RunConfig cfg;
  std::vector<std::string> outputs;
  std::ostream* out = nullptr;
};

void write_manifest(const fs::path& dir, const Context& ctx) {
  const json config = ctx.cfg.to_json();
  // The output location does not affect results, so it stays out of the hash.
  json hashed = config;
  hashed.erase("out");
  const json m{{"command", ctx.command},
               {"argv", ctx.argv},
               {"config", config},
               {"config_hash", fnv1a_hex(hashed.dump())},
               {"seed", ctx.cfg.seed},
               {"version", kVersion},
               {"outputs", ctx.outputs}};
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

void emit(Context& ctx, const fs::path& dir, const std::string& name, const std::string& content) {
  write_file(dir / name, content);
  ctx.outputs.push_back(name);
}

// ---------------------------------------------------------------------------
// Shared loading

struct Loaded {
  std::string community;
  TreeBuild build;
  std::vector<LabelRecord> labels;
  ParseLog post_log, comment_log;
};

Loaded load_corpus(const std::string& posts_path, const std::string& comments_path, std::string community) {
  require_file(posts_path, "posts");
  Loaded l;
  auto posts = parse_dump_file(posts_path, DumpKind::posts);
  l.post_log = posts.log;
  std::vector<Comment> comments;
  if (!comments_path.empty()) {
    require_file(comments_path, "comments");
    auto c = parse_dump_file(comments_path, DumpKind::comments);
    l.comment_log = c.log;
    comments = std::move(c.comments);
  }
  if (community.empty())
    community = !posts.posts.empty() && !posts.posts[0].subreddit.empty() ? posts.posts[0].subreddit
                                                                            : fs::path(posts_path).stem().string();
  l.community = community;
  l.labels = label_posts(posts.posts);
  l.build = build_trees(std::move(posts.posts), std::move(comments));
  return l;
}

Resources load_resources(const RunConfig& cfg) {
  Resources r;
  if (!cfg.embeddings.empty()) {
    require_file(cfg.embeddings, "embeddings");
    r.embeddings = std::make_shared<const EmbeddingTable>(load_embeddings(cfg.embeddings));
  }
  if (!cfg.comment_vectors.empty()) {
    require_file(cfg.comment_vectors, "comment-vectors");
    r.comment_vectors = std::make_shared<const DocumentVectors>(load_document_vectors(cfg.comment_vectors));
  }
  if (!cfg.wordlists.empty()) {
    if (!fs::is_directory(cfg.wordlists)) throw DataError("wordlists directory not found: " + cfg.wordlists);
    r.lexicons = std::make_shared<const Lexicons>(load_lexicons(cfg.wordlists));
  }
  if (cfg.pooling == "mean") r.pooling = Pooling::mean;
  else if (cfg.pooling == "sif") r.pooling = Pooling::sif;
  else throw UsageError("--pooling must be mean or sif");
  r.pca_dim = cfg.pca_dim;
  r.text_max_tokens = cfg.text_max_tokens;
  return r;
}

Dataset load_dataset(const RunConfig& cfg, std::size_t index = 0) {
  if (cfg.posts.size() <= index) throw UsageError("missing --posts");
  const std::string comments = index < cfg.comments.size() ? cfg.comments[index] : "";
  const std::string community = index < cfg.community.size() ? cfg.community[index] : "";
  auto l = load_corpus(cfg.posts[index], comments, community);
  return make_dataset(l.community, l.build.trees, l.labels, load_resources(cfg));
}

std::vector<FeatureSpec> parse_specs(const std::vector<std::string>& raw) {
  std::vector<FeatureSpec> specs;
  for (const auto& s : raw) {
    try {
      specs.push_back(FeatureSpec::parse(s));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (specs.empty()) throw UsageError("missing --features");
  return specs;
}

std::vector<double> parse_t(const std::string& t, const std::string& fallback) {
  try {
    return parse_t_grid(t.empty() ? fallback : t);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

RunOptions run_options(const RunConfig& cfg) {
  RunOptions o;
  o.seed = cfg.seed;
  if (!cfg.grid.is_null() && !cfg.grid.empty()) {
    try {
      o.grid = Grid::from_json(cfg.grid);
    } catch (const std::exception& e) {
      throw UsageError(std::string("bad grid: ") + e.what());
    }
  }
  return o;
}

std::string to_csv_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_ingest(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.posts.empty()) throw UsageError("missing --posts");
  const auto dir = prepare_out(cfg);
  auto l = load_corpus(cfg.posts[0], cfg.comments.empty() ? "" : cfg.comments[0],
                       cfg.community.empty() ? "" : cfg.community[0]);
  json rep = ingest_report(l.post_log, l.comment_log, l.build.orphans);
  rep["community"] = l.community;
  rep["trees"] = l.build.trees.size();
  emit(ctx, dir, "ingest_report.json", rep.dump(2) + "\n");
  std::ostringstream trees;
  trees << "post_id,n_comments,max_depth\n";
  for (const auto& t : l.build.trees) {
    int depth = 0;
    for (const auto& n : t.nodes()) depth = std::max(depth, n.depth);
    trees << t.post().id << ',' << t.n_comments() << ',' << depth << '\n';
  }
  emit(ctx, dir, "trees.csv", trees.str());
  *ctx.out << "ingested " << l.build.trees.size() << " posts, " << l.build.orphans.size() << " orphan comments\n";
}

void cmd_label(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string path = !cfg.in.empty() ? cfg.in : (cfg.posts.empty() ? "" : cfg.posts[0]);
  require_file(path, "in");
  const auto dir = prepare_out(cfg);
  const auto dump = parse_dump_file(path, DumpKind::posts);
  const auto labels = label_posts(dump.posts);
  std::ostringstream csv;
  write_labels_csv(csv, labels);
  emit(ctx, dir, "labels.csv", csv.str());
  std::size_t n_c = 0, n_n = 0;
  for (const auto& r : labels) {
    n_c += r.label == Label::controversial;
    n_n += r.label == Label::non_controversial;
  }
  if (!cfg.validate_ids.empty()) {
    require_file(cfg.validate_ids, "validate-ids");
    std::ifstream in(cfg.validate_ids);
    const auto ids = read_id_list(in);
    if (cfg.k < 1 || cfg.k > 3) throw UsageError("--k must be 1, 2 or 3");
    const auto v = validate_against_ranking(dump.posts, ids, cfg.k, cfg.seed);
    auto cls = [](const ClassScores& s) {
      return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
    };
    const json j{{"k", cfg.k},
                 {"sampled", v.sampled},
                 {"scored", v.scored},
                 {"controversial", cls(v.controversial)},
                 {"non_controversial", cls(v.non_controversial)}};
    emit(ctx, dir, "validation.json", j.dump(2) + "\n");
  }
  *ctx.out << "labeled " << n_c << " controversial, " << n_n << " non-controversial of " << labels.size()
           << " posts\n";
}

void cmd_featurize(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto specs = parse_specs(cfg.features);
  if (specs.size() != 1) throw UsageError("featurize takes exactly one --features spec");
  const auto t = parse_t(cfg.t, "180");
  if (t.size() != 1) throw UsageError("featurize takes a single --t");
  const auto dir = prepare_out(cfg);
  const auto ds = load_dataset(cfg);
  const auto raw = extract_raw(ds, specs[0], specs[0].uses_comments() ? std::optional<double>(t[0]) : std::nullopt);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  const auto f = FoldFeaturizer::fit(raw, all, specs[0], ds.resources);
  const auto m = f.transform(raw, all);
  std::ostringstream csv;
  csv << "post_id,label";
  for (const auto& c : m.columns()) csv << ',' << c;
  csv << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    csv << m.row_ids()[r] << ',' << ds.labels[r];
    for (std::size_t c = 0; c < m.cols(); ++c) {
      csv << ',';
      if (!m.missing(r, c)) csv << to_csv_cell(m.value(r, c));
    }
    csv << '\n';
  }
  emit(ctx, dir, "features.csv", csv.str());
  emit(ctx, dir, "featurizer_state.json", f.state().dump(2) + "\n");
  *ctx.out << "wrote " << m.rows() << " x " << m.cols() << " features\n";
}

void cmd_train(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto specs = parse_specs(cfg.features);
  if (specs.size() != 1) throw UsageError("train takes exactly one --features spec");
  const auto t = parse_t(cfg.t, "180");
  const auto dir = prepare_out(cfg);
  const auto ds = load_dataset(cfg);
  const auto splits = make_splits(ds.labels, 1, cfg.seed);
  const auto& split = splits[0];
  const auto raw = extract_raw(ds, specs[0], specs[0].uses_comments() ? std::optional<double>(t[0]) : std::nullopt);
  const auto f = FoldFeaturizer::fit(raw, split.train, specs[0], ds.resources);
  const auto opts = run_options(cfg);
  auto pick = [&](const std::vector<std::size_t>& rows) {
    std::vector<int> y;
    for (auto r : rows) y.push_back(ds.labels[r]);
    return y;
  };
  const auto grid = grid_search(f.transform(raw, split.train), pick(split.train), f.transform(raw, split.dev),
                                pick(split.dev), opts.grid, cfg.seed, Exec::parallel, opts.solver);
  const auto x_test = f.transform(raw, split.test);
  const auto pred = predict(grid.best, x_test);
  const auto y_test = pick(split.test);
  emit(ctx, dir, "model.json", grid.best.to_json().dump(2) + "\n");
  emit(ctx, dir, "featurizer_state.json", f.state().dump(2) + "\n");
  std::ostringstream csv;
  csv << "post_id,score,predicted,label\n";
  for (std::size_t i = 0; i < split.test.size(); ++i)
    csv << x_test.row_ids()[i] << ',' << to_csv_cell(pred.scores[i]) << ',' << pred.labels[i] << ',' << y_test[i]
        << '\n';
  emit(ctx, dir, "predictions.csv", csv.str());
  const json summary{{"dev_accuracy", grid.dev_accuracy},
                     {"test_accuracy", accuracy(pred.labels, y_test)},
                     {"model_type", to_string(grid.best.hyper.type)},
                     {"strength", grid.best.hyper.strength},
                     {"standardize", grid.best.hyper.standardize}};
  emit(ctx, dir, "train_summary.json", summary.dump(2) + "\n");
  *ctx.out << "dev accuracy " << grid.dev_accuracy << ", test accuracy " << summary["test_accuracy"].get<double>()
           << '\n';
}

void cmd_evaluate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto specs = parse_specs(cfg.features);
  const auto t = parse_t(cfg.t, "180");
  if (t.size() != 1) throw UsageError("evaluate takes a single --t; use sweep for a grid");
  std::optional<FeatureSpec> baseline;
  if (!cfg.baseline.empty()) baseline = parse_specs({cfg.baseline})[0];
  const auto dir = prepare_out(cfg);
  const auto ds = load_dataset(cfg);
  const auto splits = make_splits(ds.labels, cfg.folds, cfg.seed);
  const auto opts = run_options(cfg);
  std::vector<EvalReport> reports;
  std::optional<EvalReport> base;
  if (baseline) base = run_config(ds, *baseline, t[0], splits, opts);
  for (const auto& s : specs) {
    auto r = run_config(ds, s, t[0], splits, opts);
    if (base) {
      r.baseline = base->config;
      r.p = significance(r, *base).p;
    }
    reports.push_back(std::move(r));
  }
  if (base) reports.insert(reports.begin(), *base);
  std::ostringstream csv;
  write_results_csv(csv, reports);
  emit(ctx, dir, "results.csv", csv.str());
  emit(ctx, dir, "summary.json", summary_json(reports).dump(2) + "\n");
  for (const auto& r : reports) *ctx.out << r.config << ": " << r.mean << " +/- " << r.std_error << '\n';
}

void cmd_sweep(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto specs = parse_specs(cfg.features);
  const auto baseline = parse_specs({cfg.baseline.empty() ? "TEXT+TIME" : cfg.baseline})[0];
  if (baseline.uses_comments()) throw UsageError("--baseline must be a post-time feature set");
  const auto t = parse_t(cfg.t, "15:180:15");
  const auto dir = prepare_out(cfg);
  const auto ds = load_dataset(cfg);
  const auto splits = make_splits(ds.labels, cfg.folds, cfg.seed);
  const auto sweep = time_sweep(ds, specs, baseline, t, splits, cfg.alpha, run_options(cfg));
  std::vector<EvalReport> all{sweep.baseline};
  all.insert(all.end(), sweep.rows.begin(), sweep.rows.end());
  std::ostringstream csv;
  write_results_csv(csv, all);
  emit(ctx, dir, "results.csv", csv.str());
  emit(ctx, dir, "summary.json", sweep_json(sweep).dump(2) + "\n");
  for (const auto& [name, ts] : sweep.t_s) {
    *ctx.out << name << ": t_s = ";
    if (ts) *ctx.out << *ts << '\n';
    else *ctx.out << "none\n";
  }
}

void cmd_transfer(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto specs = parse_specs(cfg.features);
  const auto t = parse_t(cfg.t, "180");
  if (cfg.posts.size() < 2) throw UsageError("transfer needs --posts for at least two communities");
  if (cfg.comments.size() != cfg.posts.size()) throw UsageError("give one --comments per --posts");
  const auto dir = prepare_out(cfg);
  std::vector<Dataset> datasets;
  for (std::size_t i = 0; i < cfg.posts.size(); ++i) datasets.push_back(load_dataset(cfg, i));
  std::vector<std::vector<FoldSplit>> splits;
  for (const auto& ds : datasets) splits.push_back(make_splits(ds.labels, cfg.folds, cfg.seed));
  json summary = json::array();
  std::ostringstream csv_all;
  bool first = true;
  for (const auto& spec : specs) {
    if (spec.has(Family::TIME) || spec.has(Family::AUTHOR))
      throw UsageError("transfer feature sets cannot use TIME or AUTHOR");
    const auto m = transfer_matrix(datasets, spec, t[0], splits, run_options(cfg));
    std::ostringstream csv;
    write_transfer_csv(csv, m);
    std::string body = csv.str();
    if (!first) body = body.substr(body.find('\n') + 1);
    first = false;
    // prefix every data row with the spec name
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind("source,", 0) == 0) csv_all << "features," << line << '\n';
      else csv_all << spec.name() << ',' << line << '\n';
    }
    json deg = json::array();
    for (const auto& row : m.degradation) {
      json r = json::array();
      for (const auto& d : row) r.push_back(d ? json(*d) : json(nullptr));
      deg.push_back(r);
    }
    summary.push_back({{"features", spec.name()}, {"communities", m.communities}, {"accuracy", m.accuracy},
                       {"degradation", deg}});
    write_file(dir / ("transfer_" + fnv1a_hex(spec.name()).substr(0, 8) + ".csv"), csv.str());
  }
  emit(ctx, dir, "transfer.csv", csv_all.str());
  emit(ctx, dir, "transfer.json", summary.dump(2) + "\n");
  *ctx.out << "wrote transfer matrices for " << specs.size() << " feature sets\n";
}

void cmd_popnull(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto specs = parse_specs(cfg.features);
  if (specs.size() != 1) throw UsageError("popnull takes exactly one --features spec");
  const auto t = parse_t(cfg.t, "180");
  const auto dir = prepare_out(cfg);
  const auto ds = load_dataset(cfg);
  const auto splits = make_splits(ds.labels, cfg.folds, cfg.seed);
  const auto r = popularity_null(ds, specs[0], t[0], splits, run_options(cfg));
  const json j{{"features", specs[0].name()},
               {"t", t[0]},
               {"median_comments", r.median_comments},
               {"predictor_accuracy", r.predictor_accuracy},
               {"oracle_accuracy", r.oracle_accuracy},
               {"predictor_mean", r.predictor_mean},
               {"oracle_mean", r.oracle_mean},
               {"inverted", r.inverted}};
  emit(ctx, dir, "popnull.json", j.dump(2) + "\n");
  *ctx.out << "popularity predictor " << r.predictor_mean << ", oracle " << r.oracle_mean << '\n';
}

void cmd_fightinwords(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string path = !cfg.in.empty() ? cfg.in : (cfg.posts.empty() ? "" : cfg.posts[0]);
  require_file(path, "posts");
  if (!(cfg.alpha0 > 0)) throw UsageError("--alpha0 must be positive");
  if (cfg.ngram_max < 1) throw UsageError("--ngram-max must be at least 1");
  const auto dir = prepare_out(cfg);
  const auto dump = parse_dump_file(path, DumpKind::posts);
  const auto labels = label_posts(dump.posts);
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& p = dump.posts[i];
    std::string doc = p.title;
    if (!p.body_deleted) doc += "\n" + p.body;
    if (labels[i].label == Label::controversial) a.push_back(std::move(doc));
    else if (labels[i].label == Label::non_controversial) b.push_back(std::move(doc));
  }
  if (a.empty() || b.empty()) throw DataError("fightinwords needs both labeled classes");
  const auto scores = fightin_words(a, b, cfg.ngram_max, cfg.alpha0);
  std::ostringstream csv;
  csv << "ngram,count_controversial,count_non_controversial,delta,z\n";
  for (const auto& s : scores)
    csv << s.ngram << ',' << s.count_a << ',' << s.count_b << ',' << to_csv_cell(s.delta) << ',' << to_csv_cell(s.z)
        << '\n';
  emit(ctx, dir, "fightin_words.csv", csv.str());
  const std::size_t n_show = std::min(cfg.top, scores.size());
  *ctx.out << "most controversial-leaning n-grams:\n";
  for (std::size_t i = 0; i < n_show; ++i) *ctx.out << "  " << scores[i].ngram << ' ' << scores[i].z << '\n';
}

void cmd_synth(Context& ctx, const CLI::App& sub) {
  auto& cfg = ctx.cfg;
  SynthConfig sc = cfg.synth.is_object() ? SynthConfig::from_json(cfg.synth) : SynthConfig::planted();
  if (sub.get_option("--seed")->count() > 0 || !cfg.synth.contains("seed")) sc.seed = cfg.seed;
  if (sub.get_option("--n-posts")->count() > 0 || !cfg.synth.contains("n_posts")) sc.n_posts = cfg.n_posts;
  if (!cfg.community.empty()) sc.community = cfg.community[0];
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.synth = sc.to_json();
  const auto dir = prepare_out(cfg);
  const auto corpus = generate_corpus(sc);
  std::ostringstream posts, comments, truth, emb;
  write_posts_jsonl(posts, corpus.posts);
  write_comments_jsonl(comments, corpus.comments);
  write_truth_csv(truth, corpus.truth);
  write_embeddings(emb, synth_embeddings(sc));
  emit(ctx, dir, "posts.jsonl", posts.str());
  emit(ctx, dir, "comments.jsonl", comments.str());
  emit(ctx, dir, "truth.csv", truth.str());
  emit(ctx, dir, "embeddings.txt", emb.str());
  emit(ctx, dir, "synth_config.json", sc.to_json().dump(2) + "\n");
  *ctx.out << "generated " << corpus.posts.size() << " posts, " << corpus.comments.size() << " comments\n";
}

void cmd_report(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.in.empty()) throw UsageError("missing --in");
  const fs::path in = cfg.in;
  if (!fs::is_directory(in)) throw DataError("results directory not found: " + cfg.in);
  const bool has_results = fs::exists(in / "results.csv");
  const bool has_transfer = fs::exists(in / "transfer.csv");
  if (!has_results && !has_transfer) throw DataError("no results.csv or transfer.csv in " + cfg.in);
  const auto dir = cfg.out.empty() ? in : prepare_out(cfg);
  if (cfg.out.empty()) ctx.cfg.out = in.string();
  const std::string title = cfg.community.empty() ? in.filename().string() : cfg.community[0];
  if (has_results) {
    std::ifstream f(in / "results.csv");
    const auto rows = read_results_csv(f);
    const auto series = aggregate(rows);
    emit(ctx, dir, "sweep.svg", render_sweep_svg(series, title));
    std::ostringstream table;
    table << "config,t,mean_accuracy\n";
    for (const auto& [c, m] : series.post_only) table << c << ",," << to_csv_cell(m) << '\n';
    for (const auto& [c, pts] : series.by_config)
      for (const auto& p : pts) table << c << ',' << to_csv_cell(p.t) << ',' << to_csv_cell(p.mean) << '\n';
    emit(ctx, dir, "summary_table.csv", table.str());
  }
  if (has_transfer) {
    std::ifstream f(in / "transfer.csv");
    // transfer.csv carries one matrix per feature set in a leading column
    std::map<std::string, std::string> per_spec;
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw DataError("malformed transfer.csv line");
      per_spec[line.substr(0, comma)] += line.substr(comma + 1) + "\n";
    }
    for (const auto& [spec, body] : per_spec) {
      std::istringstream s(body);
      const auto m = read_transfer_csv(s);
      std::string name = spec;
      std::replace(name.begin(), name.end(), '+', '_');
      emit(ctx, dir, "transfer_" + name + ".svg", render_transfer_svg(m, title + " " + spec));
    }
  }
  *ctx.out << "report written to " << dir.string() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Early controversy prediction pipeline", "contro"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::map<std::string, std::unique_ptr<Binder>> binders;
  auto make = [&](const std::string& name, const std::string& help, const std::vector<std::string>& keys) {
    auto* s = app.add_subcommand(name, help);
    auto b = std::make_unique<Binder>(s, cfg);
    s->add_option("--config", config_path, "JSON run configuration; flags override it");
    for (const auto& k : keys) {
      if (k == "posts") b->add(k, &RunConfig::posts, "posts JSONL (repeat for several communities)");
      else if (k == "comments") b->add(k, &RunConfig::comments, "comments JSONL (one per --posts)");
      else if (k == "community") b->add(k, &RunConfig::community, "community name (one per --posts)");
      else if (k == "embeddings") b->add(k, &RunConfig::embeddings, "token vector file");
      else if (k == "comment_vectors") b->add(k, &RunConfig::comment_vectors, "per-comment vector CSV");
      else if (k == "wordlists") b->add(k, &RunConfig::wordlists, "lexicon directory");
      else if (k == "out") b->add(k, &RunConfig::out, "output directory");
      else if (k == "in") b->add(k, &RunConfig::in, "input file or directory");
      else if (k == "validate_ids") b->add(k, &RunConfig::validate_ids, "externally ranked controversial post ids");
      else if (k == "features") b->add(k, &RunConfig::features, "feature set, e.g. TEXT+TIME (repeatable)");
      else if (k == "baseline") b->add(k, &RunConfig::baseline, "post-time baseline feature set");
      else if (k == "t") b->add(k, &RunConfig::t, "minutes, or start:stop:step");
      else if (k == "pooling") b->add(k, &RunConfig::pooling, "TEXT pooling: mean or sif");
      else if (k == "seed") b->add(k, &RunConfig::seed, "random seed");
      else if (k == "alpha") b->add(k, &RunConfig::alpha, "significance level");
      else if (k == "folds") b->add(k, &RunConfig::folds, "cross-validation folds");
      else if (k == "n_posts") b->add(k, &RunConfig::n_posts, "posts to generate");
      else if (k == "k") b->add(k, &RunConfig::k, "unlisted posts per listed post (1-3)");
      else if (k == "ngram_max") b->add(k, &RunConfig::ngram_max, "longest n-gram");
      else if (k == "alpha0") b->add(k, &RunConfig::alpha0, "Dirichlet prior mass");
      else if (k == "top") b->add(k, &RunConfig::top, "n-grams to print");
      else if (k == "pca_dim") b->add(k, &RunConfig::pca_dim, "TEXT PCA dimensions");
      else if (k == "text_max_tokens") b->add(k, &RunConfig::text_max_tokens, "TEXT token budget");
    }
    binders[name] = std::move(b);
  };
  auto with = [](std::vector<std::string> extra) {
    std::vector<std::string> v{"posts",    "comments", "community",       "embeddings", "comment_vectors",
                               "wordlists", "pooling", "pca_dim", "text_max_tokens", "out",        "seed"};
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  make("ingest", "parse dumps and rebuild comment trees", {"posts", "comments", "community", "out", "seed"});
  make("label", "estimate upvote ratios and assign controversy labels",
       {"in", "posts", "out", "seed", "validate_ids", "k"});
  make("featurize", "write the feature matrix of one feature set", with({"features", "t"}));
  make("train", "grid-search one model on a train/dev/test split", with({"features", "t"}));
  make("evaluate", "cross-validate feature sets", with({"features", "t", "folds", "baseline"}));
  make("sweep", "cross-validate over observation windows", with({"features", "t", "folds", "baseline", "alpha"}));
  make("transfer", "train on one community, test on another", with({"features", "t", "folds"}));
  make("popnull", "popularity null-hypothesis experiment", with({"features", "t", "folds"}));
  make("fightinwords", "contrast n-gram usage between the labeled classes",
       {"in", "posts", "out", "seed", "ngram_max", "alpha0", "top"});
  make("synth", "generate a synthetic corpus with known labels", {"seed", "n_posts", "community", "out"});
  make("report", "render plots and tables from a results directory", {"in", "out", "community", "seed"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Context ctx;
  ctx.command = sub->get_name();
  ctx.argv.assign(argv + 1, argv + argc);
  ctx.out = &out;
  try {
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw DataError("config not found: " + config_path);
      auto j = read_json_file(config_path);
      // a manifest nests the run configuration
      if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
      try {
        binders.at(ctx.command)->apply_file(j);
      } catch (const json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
      }
    }
    ctx.cfg = cfg;
    const auto& c = ctx.command;
    if (c == "ingest") cmd_ingest(ctx);
    else if (c == "label") cmd_label(ctx);
    else if (c == "featurize") cmd_featurize(ctx);
    else if (c == "train") cmd_train(ctx);
    else if (c == "evaluate") cmd_evaluate(ctx);
    else if (c == "sweep") cmd_sweep(ctx);
    else if (c == "transfer") cmd_transfer(ctx);
    else if (c == "popnull") cmd_popnull(ctx);
    else if (c == "fightinwords") cmd_fightinwords(ctx);
    else if (c == "synth") cmd_synth(ctx, *sub);
    else if (c == "report") cmd_report(ctx);
    write_manifest(ctx.cfg.out, ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"contro"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace contro
