#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "contro/dataset.hpp"
#include "contro/learn.hpp"
#include "contro/parallel.hpp"
#include "contro/stats.hpp"

namespace contro {

/// Row indices into a dataset.
struct FoldSplit {
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

/// Per fold: an independently seeded shuffle of each class, then the first
/// floor(0.6 n) rows train, the next floor(0.2 n) dev, the rest test.
/// Throws DataError when either class has fewer than 10 rows.
std::vector<FoldSplit> make_splits(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

/// Receives the row ids each fitting stage reads ("featurizer_fit",
/// "grid_train", "grid_dev") and the rows scored at test time ("test").
using AccessObserver = std::function<void(std::string_view stage, std::size_t fold, std::span<const std::string> ids)>;

struct RunOptions {
  Grid grid = Grid::standard();
  SolverOptions solver;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
  AccessObserver observer;
};

struct EvalReport {
  std::string config;
  std::optional<double> t;  // minutes; nothing for post-time-only configs
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double std_error = 0.0;
  double n_train = 0.0;  // mean rows per fold
  double n_test = 0.0;
  std::string baseline;   // set when p is computed
  std::optional<double> p;
  std::vector<Hyperparameters> selected;  // per fold
};

/// Fills mean and standard error from fold_accuracy.
void summarize(EvalReport& r);

/// Per fold: featurizers and preprocessing fitted on train rows, grid search
/// on dev, accuracy on test.
EvalReport run_config(const Dataset& ds, const FeatureSpec& spec, std::optional<double> t,
                      std::span<const FoldSplit> splits, const RunOptions& opts = {});

/// Same as run_config on precomputed raw features.
EvalReport run_config(const Dataset& ds, const RawFeatures& raw, const FeatureSpec& spec,
                      std::span<const FoldSplit> splits, const RunOptions& opts = {});

/// p = max(Wilcoxon, corrected resampled t) over paired fold accuracies,
/// using a's mean split sizes.
SignificanceResult significance(const EvalReport& a, const EvalReport& b);

inline std::vector<double> default_t_grid() {
  std::vector<double> g;
  for (int t = 15; t <= 180; t += 15) g.push_back(t);
  return g;
}

/// Inclusive "start:stop:step" grid, e.g. "15:180:15".
std::vector<double> parse_t_grid(std::string_view s);

struct SweepResult {
  EvalReport baseline;
  std::vector<EvalReport> rows;  // spec-major, t ascending; p versus baseline
  std::vector<std::pair<std::string, std::optional<double>>> t_s;  // per spec
  double alpha = 0.05;
};

/// Smallest t whose report beats the baseline mean with p < alpha.
std::optional<double> first_significant(std::span<const EvalReport> rows_for_spec, double baseline_mean,
                                        double alpha);

SweepResult time_sweep(const Dataset& ds, std::span<const FeatureSpec> specs, const FeatureSpec& baseline,
                       std::span<const double> t_grid, std::span<const FoldSplit> splits, double alpha = 0.05,
                       const RunOptions& opts = {});

struct PopularityNullReport {
  std::vector<double> predictor_accuracy;  // per fold, against controversy labels
  std::vector<double> oracle_accuracy;
  double predictor_mean = 0.0;
  double oracle_mean = 0.0;
  double median_comments = 0.0;
  std::vector<bool> inverted;  // per fold: popular maps to non-controversial
};

/// Popularity = eventual comment count at or above the dataset median. A
/// classifier trained for popularity (thresholded at its test-score median)
/// and the true popularity label each predict controversy; the mapping
/// direction is chosen on training rows.
PopularityNullReport popularity_null(const Dataset& ds, const FeatureSpec& spec, double t,
                                     std::span<const FoldSplit> splits, const RunOptions& opts = {});

/// (acc_transfer - baseline) / (acc_matched - baseline) - 1; nothing when
/// acc_matched <= baseline.
std::optional<double> transfer_degradation(double acc_transfer, double acc_matched, double baseline = 0.5);

struct TransferMatrix {
  std::vector<std::string> communities;
  std::vector<std::vector<double>> accuracy;  // [source][target], mean over folds
  std::vector<std::vector<std::optional<double>>> degradation;
};

/// Models fitted on each source's folds are scored on every target's test
/// partition of the same fold index. TIME and AUTHOR are not allowed.
TransferMatrix transfer_matrix(std::span<const Dataset> datasets, const FeatureSpec& spec, double t,
                               std::span<const std::vector<FoldSplit>> splits, const RunOptions& opts = {});

/// config,t,fold,accuracy rows sorted by (config, t, fold).
void write_results_csv(std::ostream& out, std::span<const EvalReport> reports);
nlohmann::json summary_json(std::span<const EvalReport> reports);
nlohmann::json sweep_json(const SweepResult& sweep);
void write_transfer_csv(std::ostream& out, const TransferMatrix& m);

}  // namespace contro
