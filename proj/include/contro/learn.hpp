#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "contro/parallel.hpp"

namespace contro {

/// Named-column numeric matrix with a missingness mask. Row-major storage.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> row_ids, std::vector<std::string> columns);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& columns() const { return columns_; }

  double value(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  bool missing(std::size_t r, std::size_t c) const { return mask_[r * cols() + c] != 0; }
  void set(std::size_t r, std::size_t c, double v) {
    values_[r * cols() + c] = v;
    mask_[r * cols() + c] = 0;
  }
  void set_missing(std::size_t r, std::size_t c) {
    values_[r * cols() + c] = 0.0;
    mask_[r * cols() + c] = 1;
  }
  void set(std::size_t r, std::size_t c, std::optional<double> v) {
    if (v) set(r, c, *v);
    else set_missing(r, c);
  }

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  /// Column-wise concatenation; row ids must agree and names stay unique.
  static FeatureMatrix hstack(std::span<const FeatureMatrix> blocks);

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> columns_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Mean imputation and optional standardization, fitted on training rows.
struct Preprocessor {
  std::vector<std::string> columns;
  std::vector<double> impute;  // training column means of observed cells
  bool standardize = false;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<std::string> all_missing;  // columns imputed with 0

  /// Dense matrix with missing cells imputed (and standardized if enabled).
  Eigen::MatrixXd apply(const FeatureMatrix& x) const;

  bool operator==(const Preprocessor&) const = default;
};

Preprocessor fit_preprocessor(const FeatureMatrix& train, bool standardize);

/// Declaration order is the grid's tie-break order.
enum class ModelType { logistic_l2, logistic_l1, logistic_elastic, svm };

std::string_view to_string(ModelType t);
ModelType parse_model_type(std::string_view s);

struct Hyperparameters {
  ModelType type = ModelType::logistic_l2;
  double strength = 1.0;
  bool standardize = false;
  bool operator==(const Hyperparameters&) const = default;
};

struct SolverOptions {
  double tol = 1e-6;  // objective decrease (logistic); projected-gradient gap scale (svm)
  int max_iter = 10000;
  int max_svm_epochs = 1000;
};

struct LinearFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective minimized by fit_linear with y in {0,1}:
///   logistic: mean log-loss + strength * (l1 * |w|_1 + (1 - l1) / 2 * |w|^2)
///   svm:      mean hinge loss + strength / 2 * (|w|^2 + b^2)
/// with l1 = 0 (l2), 1 (l1), 0.5 (elastic). The logistic intercept is unpenalized.
double linear_objective(const Eigen::MatrixXd& x, std::span<const int> y, ModelType type, double strength,
                        const Eigen::VectorXd& w, double b);

/// Deterministic solver: proximal Newton with coordinate-descent inner steps
/// for the logistic variants, seeded dual coordinate descent for the SVM.
LinearFit fit_linear(const Eigen::MatrixXd& x, std::span<const int> y, ModelType type, double strength,
                     std::uint64_t seed, const SolverOptions& opts = {});

struct ModelArtifact {
  std::vector<std::string> columns;
  std::vector<double> weights;
  double intercept = 0.0;
  Preprocessor preprocessor;
  Hyperparameters hyper;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;

  nlohmann::json to_json() const;
  static ModelArtifact from_json(const nlohmann::json& j);
  bool operator==(const ModelArtifact&) const = default;
};

/// Fits the preprocessor on x, then the linear model. Throws
/// std::invalid_argument unless both classes are present.
ModelArtifact train_linear(const FeatureMatrix& x, std::span<const int> y, const Hyperparameters& hp,
                           std::uint64_t seed, const SolverOptions& opts = {});

struct Predictions {
  std::vector<double> scores;
  std::vector<int> labels;  // 1 when score > 0; ties go to 0
};

/// Throws std::invalid_argument when columns differ from the model's.
Predictions predict(const ModelArtifact& model, const FeatureMatrix& x);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct Grid {
  std::vector<double> strengths;
  std::vector<ModelType> types;
  std::vector<bool> standardize;

  /// 10^k for k in {-100, -5, ..., 1}; all four model types; with and without standardization.
  static Grid standard();
  std::vector<Hyperparameters> points() const;
  nlohmann::json to_json() const;
  static Grid from_json(const nlohmann::json& j);
};

struct GridPoint {
  Hyperparameters hyper;
  double dev_accuracy = 0.0;
};

struct GridResult {
  ModelArtifact best;
  double dev_accuracy = 0.0;
  std::vector<GridPoint> evaluated;  // in Grid::points() order
};

/// Trains every grid point on train and keeps the best dev accuracy. Ties go
/// to stronger regularization, then ModelType order, then no standardization.
GridResult grid_search(const FeatureMatrix& train, std::span<const int> y_train, const FeatureMatrix& dev,
                       std::span<const int> y_dev, const Grid& grid, std::uint64_t seed, Exec exec = Exec::parallel,
                       const SolverOptions& opts = {});

/// Sum of Bernoulli log-likelihoods of y under sigmoid(xw + b).
double logistic_loglik(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x, std::span<const int> y);

/// Unpenalized maximum-likelihood logistic fit (Newton with step halving).
LinearFit fit_logistic_mle(const Eigen::MatrixXd& x, std::span<const int> y, const SolverOptions& opts = {});

/// Chi-square upper tail of D = 2 (ll_full - ll_nested) with df_added
/// degrees of freedom. Throws std::invalid_argument when D < -1e-6.
double likelihood_ratio_test(double ll_nested, double ll_full, int df_added);

struct LrTestResult {
  double ll_nested = 0.0;
  double ll_full = 0.0;
  double deviance = 0.0;
  int df = 0;
  double p = 1.0;
};

/// Fits both models by maximum likelihood. The nested column names must be a
/// subset of the full model's. Missing cells are mean-imputed.
LrTestResult nested_lr_test(const FeatureMatrix& nested, const FeatureMatrix& full, std::span<const int> y);

}  // namespace contro
