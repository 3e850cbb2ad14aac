#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "contro/error.hpp"
#include "contro/experiments.hpp"
#include "synth_data.hpp"

using namespace contro;
using contro::testing::small_grid;
using contro::testing::synth_dataset;

namespace {

const contro::testing::SynthDataset& shared_data() {
  static const auto data = [] {
    auto cfg = SynthConfig::planted();
    cfg.n_posts = 500;
    cfg.seed = 31;
    return synth_dataset(cfg);
  }();
  return data;
}

RunOptions quick_options() {
  RunOptions o;
  o.grid = small_grid();
  o.seed = 1;
  return o;
}

}  // namespace

TEST_CASE("splits are 60/20/20, disjoint and balanced") {
  std::vector<int> labels;
  for (int i = 0; i < 103; ++i) labels.push_back(i % 2);
  auto splits = make_splits(labels, 15, 42);
  REQUIRE(splits.size() == 15);
  for (const auto& s : splits) {
    // 51 negatives and 52 positives: floor(0.6 n) and floor(0.2 n) per class
    CHECK(s.train.size() == 30 + 31);
    CHECK(s.dev.size() == 10 + 10);
    CHECK(s.test.size() == 11 + 11);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.dev.begin(), s.dev.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == labels.size());
    for (const auto* part : {&s.train, &s.dev, &s.test}) {
      long pos = 0;
      for (auto r : *part) pos += labels[r];
      const long neg = static_cast<long>(part->size()) - pos;
      CHECK(std::labs(pos - neg) <= 1);
      CHECK(std::is_sorted(part->begin(), part->end()));
    }
  }
  CHECK(splits[0].test != splits[1].test);
  auto again = make_splits(labels, 15, 42);
  CHECK(again[7].test == splits[7].test);
  auto other = make_splits(labels, 15, 43);
  CHECK(other[0].test != splits[0].test);
}

TEST_CASE("splits reject small classes and bad labels") {
  std::vector<int> labels(30, 0);
  for (int i = 0; i < 9; ++i) labels[static_cast<std::size_t>(i)] = 1;
  CHECK_THROWS_AS(make_splits(labels, 3, 1), DataError);
  labels[0] = 2;
  CHECK_THROWS_AS(make_splits(labels, 3, 1), std::invalid_argument);
}

TEST_CASE("feature spec parsing") {
  auto s = FeatureSpec::parse("C-RATE+C-TREE");
  CHECK(s.has(Family::C_RATE));
  CHECK(s.uses_comments());
  CHECK(FeatureSpec::parse(s.name()) == s);
  CHECK_FALSE(FeatureSpec::parse("TEXT+TIME").uses_comments());
  CHECK_THROWS_AS(FeatureSpec::parse("TEXT+BOGUS"), std::invalid_argument);
  CHECK_THROWS_AS(FeatureSpec::parse("TEXT+TEXT"), std::invalid_argument);
}

TEST_CASE("comment families need a window") {
  const auto& d = shared_data();
  CHECK_THROWS_AS(extract_raw(d.dataset, FeatureSpec::parse("C-RATE"), std::nullopt), std::invalid_argument);
}

TEST_CASE("raw extraction is identical in serial and parallel") {
  const auto& d = shared_data();
  auto spec = FeatureSpec::parse("TEXT+HAND+C-RATE+C-TREE+C-TEXT");
  auto a = extract_raw(d.dataset, spec, 60.0, Exec::serial);
  auto b = extract_raw(d.dataset, spec, 60.0, Exec::parallel);
  CHECK(a.row_ids == b.row_ids);
  CHECK(a.hand == b.hand);
  CHECK(a.text_mean == b.text_mean);
  CHECK(a.ctext == b.ctext);
  for (std::size_t i = 0; i < a.conv.size(); ++i) CHECK(a.conv[i].tree.avg_depth == b.conv[i].tree.avg_depth);
}

TEST_CASE("featurizer state comes from training rows only") {
  const auto& d = shared_data();
  auto spec = FeatureSpec::parse("TEXT+TIME+TFIDF+C-RATE");
  auto raw = extract_raw(d.dataset, spec, 30.0);
  auto splits = make_splits(d.dataset.labels, 2, 5);
  const auto& s = splits[0];
  auto fz = FoldFeaturizer::fit(raw, s.train, spec, d.dataset.resources);

  // changing test rows must not change anything learned
  auto mutated = raw;
  for (auto r : s.test) {
    mutated.tokens[r] = {"leaked", "token", "leaked", "token", "leaked", "token", "leaked"};
    mutated.created[r] = 2000000000;
    mutated.text_mean[r] = std::nullopt;
  }
  auto fz2 = FoldFeaturizer::fit(mutated, s.train, spec, d.dataset.resources);
  CHECK(fz.state() == fz2.state());
  CHECK(fz.columns() == fz2.columns());

  auto x = fz.transform(raw, s.test);
  CHECK(x.rows() == s.test.size());
  CHECK(x.columns() == fz.columns());
  CHECK(std::find(x.columns().begin(), x.columns().end(), "c_rate_n_comments") != x.columns().end());
}

TEST_CASE("structure separates the planted classes and constant features do not") {
  const auto& d = shared_data();
  auto splits = make_splits(d.dataset.labels, 3, 9);
  auto opts = quick_options();
  auto rep = run_config(d.dataset, FeatureSpec::parse("C-RATE+C-TREE"), 60.0, splits, opts);
  CHECK(rep.fold_accuracy.size() == 3);
  CHECK(rep.mean >= 0.9);
  CHECK(rep.t == std::optional<double>(60.0));
  auto base = run_config(d.dataset, FeatureSpec::parse("CONST"), std::nullopt, splits, opts);
  CHECK(base.mean == doctest::Approx(0.5).epsilon(0.05));
  CHECK_FALSE(base.t.has_value());
}

TEST_CASE("grid search never reads test rows") {
  const auto& d = shared_data();
  auto splits = make_splits(d.dataset.labels, 3, 4);
  auto ids = d.dataset.row_ids();
  std::map<std::string, std::map<std::size_t, std::set<std::string>>> seen;
  auto opts = quick_options();
  opts.observer = [&](std::string_view stage, std::size_t fold, std::span<const std::string> rows) {
    seen[std::string(stage)][fold].insert(rows.begin(), rows.end());
  };
  run_config(d.dataset, FeatureSpec::parse("TEXT+C-TREE"), 45.0, splits, opts);
  for (const auto& s : splits) {
    std::set<std::string> test;
    for (auto r : s.test) test.insert(ids[r]);
    for (const char* stage : {"featurizer_fit", "grid_train", "grid_dev"}) {
      const auto& used = seen[stage][s.fold];
      CHECK_FALSE(used.empty());
      for (const auto& id : used) CHECK(test.count(id) == 0);
    }
    CHECK(seen["test"][s.fold] == test);
  }
}

TEST_CASE("summaries and significance") {
  EvalReport r;
  r.fold_accuracy = {0.6, 0.7, 0.8};
  summarize(r);
  CHECK(r.mean == doctest::Approx(0.7));
  CHECK(r.std_error == doctest::Approx(0.1 / std::sqrt(3.0)));

  EvalReport a, b;
  a.fold_accuracy = {0.8, 0.82, 0.81, 0.79, 0.83};
  b.fold_accuracy = {0.7, 0.71, 0.69, 0.72, 0.70};
  a.n_train = 60;
  a.n_test = 20;
  auto s = significance(a, b);
  CHECK(s.p == std::max(s.wilcoxon.p, s.t_test.p));
}

TEST_CASE("t grid parsing") {
  auto g = parse_t_grid("15:180:15");
  CHECK(g.size() == 12);
  CHECK(g == default_t_grid());
  CHECK(parse_t_grid("30") == std::vector<double>{30});
  CHECK_THROWS_AS(parse_t_grid("15:10:5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_t_grid("a:b:c"), std::invalid_argument);
  CHECK_THROWS_AS(parse_t_grid("1:2"), std::invalid_argument);
}

TEST_CASE("first significant window requires beating the baseline") {
  auto row = [](double t, double mean, double p) {
    EvalReport r;
    r.t = t;
    r.mean = mean;
    r.p = p;
    return r;
  };
  std::vector<EvalReport> rows{row(15, 0.55, 0.2), row(30, 0.5, 0.01), row(45, 0.7, 0.01), row(60, 0.8, 0.001)};
  CHECK(first_significant(rows, 0.6, 0.05) == std::optional<double>(45));
  CHECK(first_significant(rows, 0.6, 0.005) == std::optional<double>(60));
  CHECK_FALSE(first_significant(rows, 0.9, 0.05).has_value());
}

TEST_CASE("significance thresholds are monotone in alpha") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<EvalReport> rows;
    for (int t = 15; t <= 180; t += 15) {
      EvalReport r;
      r.t = t;
      r.mean = 0.5 + 0.4 * u(rng);
      r.p = u(rng) * 0.1;
      rows.push_back(r);
    }
    auto strict = first_significant(rows, 0.6, 0.01);
    auto loose = first_significant(rows, 0.6, 0.05);
    if (strict) {
      REQUIRE(loose.has_value());
      CHECK(*loose <= *strict);
    }
  }
}

TEST_CASE("time sweep of a small grid") {
  const auto& d = shared_data();
  auto splits = make_splits(d.dataset.labels, 3, 2);
  std::vector<FeatureSpec> specs{FeatureSpec::parse("C-RATE+C-TREE")};
  std::vector<double> ts{15, 60};
  auto sweep = time_sweep(d.dataset, specs, FeatureSpec::parse("CONST"), ts, splits, 0.05, quick_options());
  REQUIRE(sweep.rows.size() == 2);
  CHECK(sweep.rows[0].t == std::optional<double>(15));
  CHECK(sweep.rows[1].p.has_value());
  CHECK(sweep.rows[1].baseline == "CONST");
  REQUIRE(sweep.t_s.size() == 1);
  auto j = sweep_json(sweep);
  CHECK(j["rows"].size() == 2);
  std::vector<FeatureSpec> bad{FeatureSpec::parse("C-RATE")};
  CHECK_THROWS_AS(time_sweep(d.dataset, bad, FeatureSpec::parse("C-RATE"), ts, splits), std::invalid_argument);
}

TEST_CASE("transfer degradation arithmetic") {
  CHECK(*transfer_degradation(0.558, 0.656, 0.5) == doctest::Approx((0.558 - 0.5) / (0.656 - 0.5) - 1.0));
  CHECK(*transfer_degradation(0.7, 0.7) == doctest::Approx(0.0));
  CHECK(*transfer_degradation(0.5, 0.8) == doctest::Approx(-1.0));
  CHECK_FALSE(transfer_degradation(0.6, 0.5).has_value());
  CHECK_FALSE(transfer_degradation(0.6, 0.4).has_value());
}

TEST_CASE("transfer matrix shape and diagonal") {
  auto ca = SynthConfig::planted();
  ca.n_posts = 300;
  ca.seed = 5;
  ca.community = "alpha";
  auto cb = ca;
  cb.community = "beta";
  cb.seed = 6;
  auto a = synth_dataset(ca);
  auto b = synth_dataset(cb);
  std::vector<Dataset> ds{a.dataset, b.dataset};
  std::vector<std::vector<FoldSplit>> splits{make_splits(a.dataset.labels, 2, 1), make_splits(b.dataset.labels, 2, 1)};
  auto m = transfer_matrix(ds, FeatureSpec::parse("C-RATE+C-TREE"), 60, splits, quick_options());
  CHECK(m.communities == std::vector<std::string>{"alpha", "beta"});
  REQUIRE(m.accuracy.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(m.accuracy[i][i] >= 0.85);
    REQUIRE(m.degradation[i][i].has_value());
    CHECK(*m.degradation[i][i] == doctest::Approx(0.0));
  }
  std::ostringstream csv;
  write_transfer_csv(csv, m);
  CHECK(csv.str().rfind("source,target,accuracy,degradation\n", 0) == 0);
  CHECK_THROWS_AS(transfer_matrix(ds, FeatureSpec::parse("TIME"), 60, splits), std::invalid_argument);
}

TEST_CASE("popularity null report") {
  const auto& d = shared_data();
  auto splits = make_splits(d.dataset.labels, 2, 3);
  auto rep = popularity_null(d.dataset, FeatureSpec::parse("C-RATE"), 60, splits, quick_options());
  CHECK(rep.predictor_accuracy.size() == 2);
  CHECK(rep.inverted.size() == 2);
  CHECK(rep.median_comments > 0);
  std::vector<double> counts;
  for (const auto& t : d.dataset.trees) counts.push_back(static_cast<double>(t.post().num_comments_eventual));
  auto sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  CHECK(rep.median_comments == median);
  for (std::size_t f = 0; f < splits.size(); ++f) {
    auto popular = [&](std::size_t r) { return counts[r] >= median ? 1 : 0; };
    std::size_t agree = 0;
    for (auto r : splits[f].train) agree += popular(r) == d.dataset.labels[r];
    const int flip = 2 * agree < splits[f].train.size() ? 1 : 0;
    CHECK(rep.inverted[f] == static_cast<bool>(flip));
    std::size_t hit = 0;
    for (auto r : splits[f].test) hit += (popular(r) ^ flip) == d.dataset.labels[r];
    CHECK(rep.oracle_accuracy[f] == doctest::Approx(static_cast<double>(hit) / splits[f].test.size()));
  }
  for (double a : rep.predictor_accuracy) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("results csv is sorted and complete") {
  EvalReport a, b;
  a.config = "TEXT";
  a.fold_accuracy = {0.5, 0.75};
  b.config = "C-RATE";
  b.t = 30;
  b.fold_accuracy = {1.0};
  std::vector<EvalReport> reps{a, b};
  std::ostringstream out;
  write_results_csv(out, reps);
  CHECK(out.str() == "config,t,fold,accuracy\nC-RATE,30,0,1\nTEXT,,0,0.5\nTEXT,,1,0.75\n");
  auto j = summary_json(reps);
  CHECK(j.size() == 2);
}
