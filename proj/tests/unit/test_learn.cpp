#include <doctest.h>

#include <cmath>
#include <random>

#include "contro/learn.hpp"

using namespace contro;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

// Overlapping classes: labels drawn from a logistic model.
Problem noisy_problem(std::uint64_t seed, int n, int d, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Problem p{Eigen::MatrixXd(n, d), std::vector<int>(static_cast<std::size_t>(n))};
  Eigen::VectorXd w(d);
  for (int j = 0; j < d; ++j) w(j) = j % 2 ? 0.8 : -0.5;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) p.x(i, j) = g(rng) * scale;
    const double z = p.x.row(i).dot(w) / scale + 0.3;
    p.y[static_cast<std::size_t>(i)] = u(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
  }
  return p;
}

/// Plain Newton on the unpenalized mean log-loss with an intercept column.
double reference_unpenalized_objective(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const auto n = x.rows(), d = x.cols();
  Eigen::MatrixXd a(n, d + 1);
  a << x, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  auto loss = [&](const Eigen::VectorXd& b) {
    double s = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = a.row(i).dot(b);
      s += std::log1p(std::exp(-std::fabs(z))) + std::max(z, 0.0) - (y[static_cast<std::size_t>(i)] ? z : 0.0);
    }
    return s / static_cast<double>(n);
  };
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pr = 1.0 / (1.0 + std::exp(-a.row(i).dot(beta)));
      grad += (pr - y[static_cast<std::size_t>(i)]) * a.row(i).transpose();
      h += pr * (1 - pr) * a.row(i).transpose() * a.row(i);
    }
    Eigen::VectorXd step = h.ldlt().solve(grad);
    double t = 1.0;
    const double f0 = loss(beta);
    while (loss(beta - t * step) > f0 && t > 1e-10) t /= 2;
    beta -= t * step;
    if (step.norm() * t < 1e-12) break;
  }
  return loss(beta);
}

double naive_dot(const std::vector<double>& w, const std::vector<double>& x, double b) {
  double s = b;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

FeatureMatrix to_matrix(const Eigen::MatrixXd& x, const std::string& prefix = "f") {
  std::vector<std::string> ids, cols;
  for (Eigen::Index i = 0; i < x.rows(); ++i) ids.push_back("r" + std::to_string(i));
  for (Eigen::Index j = 0; j < x.cols(); ++j) cols.push_back(prefix + std::to_string(j));
  FeatureMatrix m(ids, cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      m.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j), x(i, j));
  return m;
}

}  // namespace

TEST_CASE("feature matrix basics") {
  FeatureMatrix m({"a", "b", "c"}, {"x", "y"});
  m.set(0, 0, 1.0);
  m.set(1, 1, std::optional<double>());
  CHECK(m.missing(1, 1));
  CHECK_FALSE(m.missing(0, 0));
  std::vector<std::size_t> rows{2, 0};
  auto s = m.select_rows(rows);
  CHECK(s.row_ids() == std::vector<std::string>{"c", "a"});
  CHECK(s.value(1, 0) == 1.0);
  CHECK_THROWS_AS(FeatureMatrix({"a"}, {"x", "x"}), std::invalid_argument);

  FeatureMatrix other({"a", "b", "c"}, {"z"});
  other.set(2, 0, 5.0);
  std::vector<FeatureMatrix> blocks{m, other};
  auto h = FeatureMatrix::hstack(blocks);
  CHECK(h.columns() == std::vector<std::string>{"x", "y", "z"});
  CHECK(h.missing(1, 1));
  CHECK(h.value(2, 2) == 5.0);
  std::vector<FeatureMatrix> clash{m, m};
  CHECK_THROWS_AS(FeatureMatrix::hstack(clash), std::invalid_argument);
}

TEST_CASE("imputation uses training means only") {
  FeatureMatrix train({"a", "b", "c"}, {"x", "gone"});
  train.set(0, 0, 1.0);
  train.set(1, 0, 3.0);
  train.set_missing(2, 0);
  for (std::size_t r = 0; r < 3; ++r) train.set_missing(r, 1);
  auto p = fit_preprocessor(train, false);
  CHECK(p.impute[0] == 2.0);
  CHECK(p.all_missing == std::vector<std::string>{"gone"});

  FeatureMatrix test({"t"}, {"x", "gone"});
  test.set_missing(0, 0);
  test.set_missing(0, 1);
  auto dense = p.apply(test);
  CHECK(dense(0, 0) == 2.0);
  CHECK(dense(0, 1) == 0.0);
}

TEST_CASE("standardization uses population statistics and guards constant columns") {
  FeatureMatrix train({"a", "b"}, {"x", "c"});
  train.set(0, 0, 1.0);
  train.set(1, 0, 3.0);
  train.set(0, 1, 4.0);
  train.set(1, 1, 4.0);
  auto p = fit_preprocessor(train, true);
  CHECK(p.scale[0] == 1.0);
  CHECK(p.center[0] == 2.0);
  auto d = p.apply(train);
  CHECK(d(0, 0) == -1.0);
  CHECK(d(1, 0) == 1.0);
  CHECK(d(0, 1) == 0.0);
  FeatureMatrix wrong({"a"}, {"c", "x"});
  CHECK_THROWS_AS(p.apply(wrong), std::invalid_argument);
}

TEST_CASE("vanishing strength matches the unpenalized optimum") {
  auto p = noisy_problem(5, 300, 4);
  const double ref = reference_unpenalized_objective(p.x, p.y);
  for (auto t : {ModelType::logistic_l2, ModelType::logistic_l1, ModelType::logistic_elastic}) {
    auto fit = fit_linear(p.x, p.y, t, 1e-100, 1);
    CHECK(fit.converged);
    CHECK(std::fabs(fit.objective - ref) < 1e-6);
    CHECK(std::fabs(linear_objective(p.x, p.y, t, 1e-100, fit.weights, fit.intercept) - fit.objective) < 1e-12);
  }
}

TEST_CASE("l2 logistic fit satisfies the stationarity condition") {
  auto p = noisy_problem(8, 200, 5);
  const double lam = 0.05;
  auto fit = fit_linear(p.x, p.y, ModelType::logistic_l2, lam, 1);
  const double n = static_cast<double>(p.x.rows());
  Eigen::VectorXd grad = lam * fit.weights;
  double gb = 0;
  for (Eigen::Index i = 0; i < p.x.rows(); ++i) {
    const double r = 1.0 / (1.0 + std::exp(-(p.x.row(i).dot(fit.weights) + fit.intercept))) - p.y[static_cast<std::size_t>(i)];
    grad += r / n * p.x.row(i).transpose();
    gb += r / n;
  }
  CHECK(grad.norm() < 1e-3);
  CHECK(std::fabs(gb) < 1e-3);
}

TEST_CASE("l1 logistic fit satisfies the subgradient condition and is sparse") {
  auto p = noisy_problem(9, 300, 8);
  // pure-noise columns appended
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(p.x.rows(), 12);
  x << p.x, Eigen::MatrixXd::NullaryExpr(p.x.rows(), 4, [&]() { return g(rng); });
  const double lam = 0.05;
  auto fit = fit_linear(x, p.y, ModelType::logistic_l1, lam, 1);
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = 1.0 / (1.0 + std::exp(-(x.row(i).dot(fit.weights) + fit.intercept))) - p.y[static_cast<std::size_t>(i)];
    grad += r / n * x.row(i).transpose();
  }
  int zeros = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (fit.weights(j) == 0.0) {
      ++zeros;
      CHECK(std::fabs(grad(j)) <= lam + 1e-4);
    } else {
      CHECK(std::fabs(grad(j) + lam * (fit.weights(j) > 0 ? 1 : -1)) < 1e-4);
    }
  }
  CHECK(zeros >= 2);
}

TEST_CASE("svm solution cannot be improved by small perturbations") {
  auto p = noisy_problem(3, 150, 3);
  const double lam = 0.01;
  auto fit = fit_linear(p.x, p.y, ModelType::svm, lam, 4);
  const double best = linear_objective(p.x, p.y, ModelType::svm, lam, fit.weights, fit.intercept);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd w = fit.weights;
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) += g(rng);
    const double b = fit.intercept + g(rng);
    CHECK(linear_objective(p.x, p.y, ModelType::svm, lam, w, b) >= best - 1e-6);
  }
}

TEST_CASE("separable data is classified perfectly by every model type") {
  Eigen::MatrixXd x(40, 2);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    const int cls = i % 2;
    x(i, 0) = (cls ? 2.0 : -2.0) + 0.1 * (i % 7);
    x(i, 1) = 0.05 * i;
    y[static_cast<std::size_t>(i)] = cls;
  }
  auto fm = to_matrix(x);
  for (auto t : {ModelType::logistic_l2, ModelType::logistic_l1, ModelType::logistic_elastic, ModelType::svm}) {
    auto m = train_linear(fm, y, {t, 1e-3, false}, 1);
    CHECK(accuracy(predict(m, fm).labels, y) == 1.0);
  }
}

TEST_CASE("fits are deterministic for a seed") {
  auto p = noisy_problem(12, 120, 4);
  for (auto t : {ModelType::logistic_elastic, ModelType::svm}) {
    auto a = fit_linear(p.x, p.y, t, 0.01, 9);
    auto b = fit_linear(p.x, p.y, t, 0.01, 9);
    CHECK(a.weights == b.weights);
    CHECK(a.intercept == b.intercept);
  }
}

TEST_CASE("fit_linear rejects bad input") {
  auto p = noisy_problem(1, 20, 2);
  CHECK_THROWS_AS(fit_linear(p.x, p.y, ModelType::svm, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(fit_linear(p.x, p.y, ModelType::svm, NAN, 1), std::invalid_argument);
  std::vector<int> one_class(20, 1);
  auto fm = to_matrix(p.x);
  CHECK_THROWS_AS(train_linear(fm, one_class, {}, 1), std::invalid_argument);
}

TEST_CASE("prediction scores equal a naive dot product") {
  auto p = noisy_problem(6, 80, 5);
  auto fm = to_matrix(p.x);
  auto m = train_linear(fm, p.y, {ModelType::logistic_l2, 0.1, true}, 1);
  auto pred = predict(m, fm);
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < fm.cols(); ++j)
      row.push_back((fm.value(i, j) - m.preprocessor.center[j]) / m.preprocessor.scale[j]);
    CHECK(pred.scores[i] == doctest::Approx(naive_dot(m.weights, row, m.intercept)).epsilon(1e-12));
    CHECK(pred.labels[i] == (pred.scores[i] > 0 ? 1 : 0));
  }
  ModelArtifact zero = m;
  std::fill(zero.weights.begin(), zero.weights.end(), 0.0);
  zero.intercept = 0.0;
  for (int l : predict(zero, fm).labels) CHECK(l == 0);
  auto renamed = to_matrix(p.x, "g");
  CHECK_THROWS_AS(predict(m, renamed), std::invalid_argument);
}

TEST_CASE("model artifacts round trip through json") {
  auto p = noisy_problem(2, 60, 3);
  auto fm = to_matrix(p.x);
  auto m = train_linear(fm, p.y, {ModelType::logistic_elastic, 0.01, true}, 77);
  auto back = ModelArtifact::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back == m);
  CHECK(parse_model_type(to_string(ModelType::svm)) == ModelType::svm);
  CHECK_THROWS_AS(parse_model_type("tree"), std::invalid_argument);
}

TEST_CASE("the standard grid has 64 points") {
  auto g = Grid::standard();
  CHECK(g.points().size() == 64);
  CHECK(g.strengths.front() == 1e-100);
  auto back = Grid::from_json(g.to_json());
  CHECK(back.points() == g.points());
}

TEST_CASE("grid ties go to stronger regularization") {
  Eigen::MatrixXd x(40, 1);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    x(i, 0) = y[static_cast<std::size_t>(i)] ? 1.0 + 0.01 * i : -1.0 - 0.01 * i;
  }
  auto fm = to_matrix(x);
  Grid g;
  g.strengths = {1e-3, 1e-2, 1e-1};
  g.types = {ModelType::logistic_l2, ModelType::svm};
  g.standardize = {false, true};
  auto r = grid_search(fm, y, fm, y, g, 1);
  CHECK(r.dev_accuracy == 1.0);
  CHECK(r.best.hyper == Hyperparameters{ModelType::logistic_l2, 1e-1, false});
  CHECK(r.evaluated.size() == g.points().size());
}

TEST_CASE("serial and parallel grid search agree") {
  auto p = noisy_problem(4, 120, 3);
  auto fm = to_matrix(p.x);
  Grid g;
  g.strengths = {1e-4, 1e-2, 1.0};
  g.types = {ModelType::logistic_l2, ModelType::logistic_l1, ModelType::svm};
  g.standardize = {false, true};
  auto a = grid_search(fm, p.y, fm, p.y, g, 3, Exec::serial);
  auto b = grid_search(fm, p.y, fm, p.y, g, 3, Exec::parallel);
  CHECK(a.best == b.best);
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) CHECK(a.evaluated[i].dev_accuracy == b.evaluated[i].dev_accuracy);
}

TEST_CASE("likelihood ratio tail matches the chi-square formula") {
  // df = 1: P(X > D) = erfc(sqrt(D / 2))
  for (double d : {0.5, 1.0, 3.841458820694124, 6.63, 12.0}) {
    CHECK(likelihood_ratio_test(-100.0, -100.0 + d / 2, 1) == doctest::Approx(std::erfc(std::sqrt(d / 2))).epsilon(1e-12));
  }
  CHECK(likelihood_ratio_test(-100.0, -100.0 + 3.841458820694124 / 2, 1) == doctest::Approx(0.05).epsilon(1e-9));
  // df = 2: P(X > D) = exp(-D / 2)
  CHECK(likelihood_ratio_test(-10.0, -8.0, 2) == doctest::Approx(std::exp(-2.0)));
  CHECK(likelihood_ratio_test(-10.0, -10.0, 3) == 1.0);
  CHECK_THROWS_AS(likelihood_ratio_test(-10.0, -11.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(likelihood_ratio_test(-10.0, -9.0, 0), std::invalid_argument);
}

TEST_CASE("maximum likelihood fit reaches the Newton reference") {
  auto p = noisy_problem(14, 250, 3);
  auto fit = fit_logistic_mle(p.x, p.y);
  const double ll = logistic_loglik(fit.weights, fit.intercept, p.x, p.y);
  const double ref = reference_unpenalized_objective(p.x, p.y) * static_cast<double>(p.x.rows());
  CHECK(-ll == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("nested test detects a planted feature") {
  auto p = noisy_problem(15, 400, 2, 1.0);
  auto full = to_matrix(p.x);
  std::vector<std::size_t> all(full.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  FeatureMatrix nested(full.row_ids(), {"f0"});
  for (std::size_t i = 0; i < full.rows(); ++i) nested.set(i, 0, full.value(i, 0));
  auto r = nested_lr_test(nested, full, p.y);
  CHECK(r.df == 1);
  CHECK(r.p < 0.01);
  FeatureMatrix unrelated(full.row_ids(), {"other"});
  CHECK_THROWS_AS(nested_lr_test(unrelated, full, p.y), std::invalid_argument);
}
