// Serial versus OpenMP paths of the hot kernels on a planted synthetic corpus.

#include <benchmark/benchmark.h>

#include <memory>

#include "contro/convfeat.hpp"
#include "contro/dataset.hpp"
#include "contro/experiments.hpp"
#include "contro/labeler.hpp"
#include "contro/learn.hpp"
#include "contro/synth.hpp"

using namespace contro;

namespace {

struct Fixture {
  std::vector<CommentTree> trees;
  Dataset dataset;
  FeatureMatrix train, dev;
  std::vector<int> y_train, y_dev;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    auto cfg = SynthConfig::planted();
    cfg.n_posts = 2000;
    cfg.seed = 9;
    auto corpus = generate_corpus(cfg);
    out.trees = build_trees(corpus.posts, corpus.comments).trees;
    Resources res;
    res.embeddings = std::make_shared<const EmbeddingTable>(synth_embeddings(cfg));
    res.pca_dim = 20;
    out.dataset = make_dataset(cfg.community, out.trees, label_posts(corpus.posts), res);

    const auto spec = FeatureSpec::parse("C-RATE+C-TREE+HAND");
    auto raw = extract_raw(out.dataset, spec, 60.0);
    auto split = make_splits(out.dataset.labels, 1, 1).front();
    auto feat = FoldFeaturizer::fit(raw, split.train, spec, out.dataset.resources);
    out.train = feat.transform(raw, split.train);
    out.dev = feat.transform(raw, split.dev);
    for (auto r : split.train) out.y_train.push_back(out.dataset.labels[r]);
    for (auto r : split.dev) out.y_dev.push_back(out.dataset.labels[r]);
    return out;
  }();
  return f;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void BM_ConvFeatures(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(extract_conv_features(f.trees, 60.0, GiniMode::direct_replies, exec_of(state)));
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}

void BM_ExtractRaw(benchmark::State& state) {
  const auto& f = fixture();
  const auto spec = FeatureSpec::parse("TEXT+HAND+C-RATE+C-TREE");
  for (auto _ : state) benchmark::DoNotOptimize(extract_raw(f.dataset, spec, 60.0, exec_of(state)));
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}

void BM_GridSearch(benchmark::State& state) {
  const auto& f = fixture();
  Grid grid = Grid::standard();
  grid.types = {ModelType::logistic_l2, ModelType::svm};
  for (auto _ : state)
    benchmark::DoNotOptimize(grid_search(f.train, f.y_train, f.dev, f.y_dev, grid, 1, exec_of(state)));
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_ConvFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractRaw)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSearch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
