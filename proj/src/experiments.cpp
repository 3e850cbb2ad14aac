#include "contro/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "contro/error.hpp"

namespace contro {

std::vector<FoldSplit> make_splits(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (folds == 0) throw std::invalid_argument("make_splits: folds must be positive");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) pos.push_back(i);
    else if (labels[i] == 0) neg.push_back(i);
    else throw std::invalid_argument("make_splits: labels must be 0 or 1");
  }
  if (pos.size() < 10 || neg.size() < 10)
    throw DataError("make_splits: need at least 10 rows per class, have " + std::to_string(pos.size()) + " and " +
                    std::to_string(neg.size()));

  std::vector<FoldSplit> out;
  for (std::size_t f = 0; f < folds; ++f) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(f)};
    std::mt19937_64 rng(seq);
    FoldSplit s;
    s.fold = f;
    for (const auto* cls : {&neg, &pos}) {
      auto rows = *cls;
      std::shuffle(rows.begin(), rows.end(), rng);
      const auto n_train = rows.size() * 6 / 10;
      const auto n_dev = rows.size() * 2 / 10;
      s.train.insert(s.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
      s.dev.insert(s.dev.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train),
                   rows.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
      s.test.insert(s.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), rows.end());
    }
    for (auto* v : {&s.train, &s.dev, &s.test}) std::sort(v->begin(), v->end());
    out.push_back(std::move(s));
  }
  return out;
}

void summarize(EvalReport& r) {
  const auto k = static_cast<double>(r.fold_accuracy.size());
  if (r.fold_accuracy.empty()) return;
  r.mean = std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / k;
  if (r.fold_accuracy.size() < 2) {
    r.std_error = 0.0;
    return;
  }
  double ss = 0.0;
  for (double a : r.fold_accuracy) ss += (a - r.mean) * (a - r.mean);
  r.std_error = std::sqrt(ss / (k - 1) / k);
}

namespace {

std::vector<int> pick(std::span<const int> v, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

void notify(const RunOptions& opts, std::string_view stage, std::size_t fold, const FeatureMatrix& m) {
  if (opts.observer) opts.observer(stage, fold, m.row_ids());
}

struct FoldModel {
  FoldFeaturizer featurizer;
  GridResult grid;
};

FoldModel fit_fold(const RawFeatures& raw, std::span<const int> labels, const FeatureSpec& spec, const Resources& res,
                   const FoldSplit& split, const RunOptions& opts) {
  auto featurizer = FoldFeaturizer::fit(raw, split.train, spec, res);
  if (opts.observer) {
    std::vector<std::string> ids;
    for (auto r : split.train) ids.push_back(raw.row_ids[r]);
    opts.observer("featurizer_fit", split.fold, ids);
  }
  const auto x_train = featurizer.transform(raw, split.train);
  const auto x_dev = featurizer.transform(raw, split.dev);
  notify(opts, "grid_train", split.fold, x_train);
  notify(opts, "grid_dev", split.fold, x_dev);
  const auto y_train = pick(labels, split.train);
  const auto y_dev = pick(labels, split.dev);
  auto grid = grid_search(x_train, y_train, x_dev, y_dev, opts.grid, opts.seed + split.fold, opts.exec, opts.solver);
  return {std::move(featurizer), std::move(grid)};
}

std::string t_label(std::optional<double> t) {
  if (!t) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", *t);
  return buf;
}

}  // namespace

EvalReport run_config(const Dataset& ds, const RawFeatures& raw, const FeatureSpec& spec,
                      std::span<const FoldSplit> splits, const RunOptions& opts) {
  if (raw.row_ids.size() != ds.size()) throw std::invalid_argument("run_config: raw features do not match dataset");
  EvalReport rep;
  rep.config = spec.name();
  rep.t = spec.uses_comments() ? raw.window : std::nullopt;
  for (const auto& split : splits) {
    const auto model = fit_fold(raw, ds.labels, spec, ds.resources, split, opts);
    const auto x_test = model.featurizer.transform(raw, split.test);
    notify(opts, "test", split.fold, x_test);
    const auto pred = predict(model.grid.best, x_test);
    rep.fold_accuracy.push_back(accuracy(pred.labels, pick(ds.labels, split.test)));
    rep.selected.push_back(model.grid.best.hyper);
    rep.n_train += static_cast<double>(split.train.size());
    rep.n_test += static_cast<double>(split.test.size());
  }
  if (!splits.empty()) {
    rep.n_train /= static_cast<double>(splits.size());
    rep.n_test /= static_cast<double>(splits.size());
  }
  summarize(rep);
  return rep;
}

EvalReport run_config(const Dataset& ds, const FeatureSpec& spec, std::optional<double> t,
                      std::span<const FoldSplit> splits, const RunOptions& opts) {
  const auto raw = extract_raw(ds, spec, spec.uses_comments() ? t : std::nullopt, opts.exec);
  return run_config(ds, raw, spec, splits, opts);
}

SignificanceResult significance(const EvalReport& a, const EvalReport& b) {
  return significance(a.fold_accuracy, b.fold_accuracy, a.n_train, a.n_test);
}

std::vector<double> parse_t_grid(std::string_view s) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(':', start);
    if (end == std::string_view::npos) end = s.size();
    const auto tok = s.substr(start, end - start);
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw std::invalid_argument("bad t grid '" + std::string(s) + "'");
    parts.push_back(v);
    start = end + 1;
  }
  if (parts.size() == 1) {
    if (parts[0] < 0) throw std::invalid_argument("t must be non-negative");
    return parts;
  }
  if (parts.size() != 3 || parts[2] <= 0 || parts[0] < 0 || parts[1] < parts[0])
    throw std::invalid_argument("t grid must be start:stop:step with 0 <= start <= stop and step > 0");
  std::vector<double> g;
  for (int k = 0;; ++k) {
    const double t = parts[0] + k * parts[2];
    if (t > parts[1] + 1e-9) break;
    g.push_back(t);
  }
  return g;
}

std::optional<double> first_significant(std::span<const EvalReport> rows_for_spec, double baseline_mean,
                                        double alpha) {
  std::optional<double> best;
  for (const auto& r : rows_for_spec) {
    if (!r.t || !r.p) continue;
    if (*r.p < alpha && r.mean > baseline_mean && (!best || *r.t < *best)) best = r.t;
  }
  return best;
}

SweepResult time_sweep(const Dataset& ds, std::span<const FeatureSpec> specs, const FeatureSpec& baseline,
                       std::span<const double> t_grid, std::span<const FoldSplit> splits, double alpha,
                       const RunOptions& opts) {
  if (baseline.uses_comments()) throw std::invalid_argument("time_sweep: baseline must be post-time only");
  SweepResult out;
  out.alpha = alpha;
  out.baseline = run_config(ds, baseline, std::nullopt, splits, opts);

  FeatureSpec all;
  for (const auto& s : specs) all.families.insert(s.families.begin(), s.families.end());
  std::vector<std::vector<EvalReport>> per_spec(specs.size());
  for (double t : t_grid) {
    const auto raw = extract_raw(ds, all, all.uses_comments() ? std::optional<double>(t) : std::nullopt, opts.exec);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      auto rep = run_config(ds, raw, specs[k], splits, opts);
      rep.t = t;
      rep.baseline = out.baseline.config;
      rep.p = significance(rep, out.baseline).p;
      per_spec[k].push_back(std::move(rep));
    }
  }
  for (std::size_t k = 0; k < specs.size(); ++k) {
    out.t_s.emplace_back(specs[k].name(), first_significant(per_spec[k], out.baseline.mean, alpha));
    for (auto& r : per_spec[k]) out.rows.push_back(std::move(r));
  }
  return out;
}

PopularityNullReport popularity_null(const Dataset& ds, const FeatureSpec& spec, double t,
                                     std::span<const FoldSplit> splits, const RunOptions& opts) {
  PopularityNullReport rep;
  const auto n = ds.size();
  if (n == 0) throw DataError("popularity_null: empty dataset");
  std::vector<double> counts(n);
  for (std::size_t i = 0; i < n; ++i) counts[i] = static_cast<double>(ds.trees[i].post().num_comments_eventual);
  {
    auto sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    rep.median_comments = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  std::vector<int> popular(n);
  for (std::size_t i = 0; i < n; ++i) popular[i] = counts[i] >= rep.median_comments ? 1 : 0;

  const auto raw = extract_raw(ds, spec, spec.uses_comments() ? std::optional<double>(t) : std::nullopt, opts.exec);
  for (const auto& split : splits) {
    std::size_t agree = 0;
    for (auto r : split.train) agree += popular[r] == ds.labels[r];
    const bool inverted = 2 * agree < split.train.size();
    rep.inverted.push_back(inverted);

    const auto model = fit_fold(raw, popular, spec, ds.resources, split, opts);
    const auto x_test = model.featurizer.transform(raw, split.test);
    notify(opts, "test", split.fold, x_test);
    const auto pred = predict(model.grid.best, x_test);

    // exactly half of the test rows are called popular: the top scores,
    // ties by row id
    std::vector<std::size_t> order(split.test.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      if (pred.scores[a] != pred.scores[b]) return pred.scores[a] > pred.scores[b];
      return raw.row_ids[split.test[a]] < raw.row_ids[split.test[b]];
    });
    std::vector<int> called(split.test.size(), 0);
    for (std::size_t k = 0; k < order.size() / 2; ++k) called[order[k]] = 1;

    std::size_t hit_pred = 0, hit_oracle = 0;
    for (std::size_t k = 0; k < split.test.size(); ++k) {
      const auto r = split.test[k];
      hit_pred += (called[k] ^ static_cast<int>(inverted)) == ds.labels[r];
      hit_oracle += (popular[r] ^ static_cast<int>(inverted)) == ds.labels[r];
    }
    const auto nt = static_cast<double>(split.test.size());
    rep.predictor_accuracy.push_back(nt > 0 ? hit_pred / nt : 0.0);
    rep.oracle_accuracy.push_back(nt > 0 ? hit_oracle / nt : 0.0);
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  rep.predictor_mean = mean(rep.predictor_accuracy);
  rep.oracle_mean = mean(rep.oracle_accuracy);
  return rep;
}

std::optional<double> transfer_degradation(double acc_transfer, double acc_matched, double baseline) {
  if (!(acc_matched > baseline)) return std::nullopt;
  return (acc_transfer - baseline) / (acc_matched - baseline) - 1.0;
}

TransferMatrix transfer_matrix(std::span<const Dataset> datasets, const FeatureSpec& spec, double t,
                               std::span<const std::vector<FoldSplit>> splits, const RunOptions& opts) {
  if (datasets.size() < 2) throw std::invalid_argument("transfer_matrix: need at least two datasets");
  if (splits.size() != datasets.size()) throw std::invalid_argument("transfer_matrix: one split list per dataset");
  if (spec.has(Family::TIME) || spec.has(Family::AUTHOR))
    throw std::invalid_argument("transfer_matrix: TIME and AUTHOR features are community-specific");
  const auto folds = splits[0].size();
  for (const auto& s : splits)
    if (s.size() != folds) throw std::invalid_argument("transfer_matrix: fold counts differ");

  const auto window = spec.uses_comments() ? std::optional<double>(t) : std::nullopt;
  std::vector<RawFeatures> raws;
  for (const auto& ds : datasets) raws.push_back(extract_raw(ds, spec, window, opts.exec));
  for (std::size_t j = 1; j < raws.size(); ++j) {
    if (spec.has(Family::TEXT) && raws[j].text_dim != raws[0].text_dim)
      throw DataError("transfer_matrix: embedding dimensions differ across communities");
    if (spec.has(Family::C_TEXT) && raws[j].ctext_dim != raws[0].ctext_dim)
      throw DataError("transfer_matrix: comment vector dimensions differ across communities");
  }

  const auto m = datasets.size();
  TransferMatrix out;
  for (const auto& ds : datasets) out.communities.push_back(ds.community);
  out.accuracy.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      const auto model = fit_fold(raws[i], datasets[i].labels, spec, datasets[i].resources, splits[i][f], opts);
      for (std::size_t j = 0; j < m; ++j) {
        const auto& test = splits[j][f].test;
        const auto x = model.featurizer.transform(raws[j], test);
        const auto pred = predict(model.grid.best, x);
        out.accuracy[i][j] += accuracy(pred.labels, pick(datasets[j].labels, test)) / static_cast<double>(folds);
      }
    }
  }
  out.degradation.assign(m, std::vector<std::optional<double>>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out.degradation[i][j] = transfer_degradation(out.accuracy[i][j], out.accuracy[j][j]);
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json report_json(const EvalReport& r) {
  nlohmann::json j{{"config", r.config},
                   {"t", r.t ? nlohmann::json(*r.t) : nlohmann::json(nullptr)},
                   {"fold_accuracy", r.fold_accuracy},
                   {"mean", r.mean},
                   {"std_error", r.std_error},
                   {"n_train", r.n_train},
                   {"n_test", r.n_test}};
  if (r.p) {
    j["p"] = *r.p;
    j["baseline"] = r.baseline;
  }
  nlohmann::json sel = nlohmann::json::array();
  for (const auto& h : r.selected)
    sel.push_back({{"model_type", to_string(h.type)}, {"strength", h.strength}, {"standardize", h.standardize}});
  j["selected"] = sel;
  return j;
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const EvalReport> reports) {
  struct Row {
    std::string config;
    std::optional<double> t;
    std::size_t fold;
    double acc;
  };
  std::vector<Row> rows;
  for (const auto& r : reports)
    for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f) rows.push_back({r.config, r.t, f, r.fold_accuracy[f]});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.config != b.config) return a.config < b.config;
    if (a.t != b.t) return a.t < b.t;  // nothing sorts first
    return a.fold < b.fold;
  });
  out << "config,t,fold,accuracy\n";
  for (const auto& r : rows) out << r.config << ',' << t_label(r.t) << ',' << r.fold << ',' << fmt(r.acc) << '\n';
}

nlohmann::json summary_json(std::span<const EvalReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr;
}

nlohmann::json sweep_json(const SweepResult& sweep) {
  nlohmann::json ts = nlohmann::json::object();
  for (const auto& [name, t] : sweep.t_s) ts[name] = t ? nlohmann::json(*t) : nlohmann::json(nullptr);
  return {{"alpha", sweep.alpha},
          {"baseline", report_json(sweep.baseline)},
          {"rows", summary_json(sweep.rows)},
          {"t_s", ts}};
}

void write_transfer_csv(std::ostream& out, const TransferMatrix& m) {
  out << "source,target,accuracy,degradation\n";
  for (std::size_t i = 0; i < m.communities.size(); ++i)
    for (std::size_t j = 0; j < m.communities.size(); ++j) {
      out << m.communities[i] << ',' << m.communities[j] << ',' << fmt(m.accuracy[i][j]) << ',';
      if (m.degradation[i][j]) out << fmt(*m.degradation[i][j]);
      out << '\n';
    }
}

}  // namespace contro
