#include "contro/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/chi_squared.hpp>

namespace contro {

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix::FeatureMatrix(std::vector<std::string> row_ids, std::vector<std::string> columns)
    : row_ids_(std::move(row_ids)), columns_(std::move(columns)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& c : columns_)
    if (!seen.insert(c).second) throw std::invalid_argument("FeatureMatrix: duplicate column " + c);
  values_.assign(row_ids_.size() * columns_.size(), 0.0);
  mask_.assign(row_ids_.size() * columns_.size(), 0);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (auto r : rows) ids.push_back(row_ids_.at(r));
  FeatureMatrix out(std::move(ids), columns_);
  const auto c = cols();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(rows[i] * c), c,
                out.values_.begin() + static_cast<std::ptrdiff_t>(i * c));
    std::copy_n(mask_.begin() + static_cast<std::ptrdiff_t>(rows[i] * c), c,
                out.mask_.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return out;
}

FeatureMatrix FeatureMatrix::hstack(std::span<const FeatureMatrix> blocks) {
  if (blocks.empty()) return {};
  std::vector<std::string> cols;
  for (const auto& b : blocks) {
    if (b.row_ids_ != blocks[0].row_ids_) throw std::invalid_argument("FeatureMatrix::hstack: row ids differ");
    cols.insert(cols.end(), b.columns_.begin(), b.columns_.end());
  }
  FeatureMatrix out(blocks[0].row_ids_, std::move(cols));
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c) {
        out.values_[r * out.cols() + offset + c] = b.value(r, c);
        out.mask_[r * out.cols() + offset + c] = b.mask_[r * b.cols() + c];
      }
    offset += b.cols();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

Preprocessor fit_preprocessor(const FeatureMatrix& train, bool standardize) {
  Preprocessor p;
  p.columns = train.columns();
  p.standardize = standardize;
  const auto n = train.rows(), d = train.cols();
  p.impute.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (train.missing(r, c)) continue;
      sum += train.value(r, c);
      ++seen;
    }
    if (seen > 0) p.impute[c] = sum / static_cast<double>(seen);
    else p.all_missing.push_back(p.columns[c]);
  }
  if (standardize) {
    p.center = p.impute;
    p.scale.assign(d, 1.0);
    for (std::size_t c = 0; c < d; ++c) {
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double v = (train.missing(r, c) ? p.impute[c] : train.value(r, c)) - p.center[c];
        ss += v * v;
      }
      const double sd = n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
      if (sd > 1e-12) p.scale[c] = sd;
    }
  }
  return p;
}

Eigen::MatrixXd Preprocessor::apply(const FeatureMatrix& x) const {
  if (x.columns() != columns) throw std::invalid_argument("Preprocessor::apply: column mismatch");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double v = x.missing(r, c) ? impute[c] : x.value(r, c);
      if (standardize) v = (v - center[c]) / scale[c];
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear models

std::string_view to_string(ModelType t) {
  switch (t) {
    case ModelType::logistic_l2: return "logistic_l2";
    case ModelType::logistic_l1: return "logistic_l1";
    case ModelType::logistic_elastic: return "logistic_elastic";
    case ModelType::svm: return "svm";
  }
  return "?";
}

ModelType parse_model_type(std::string_view s) {
  for (auto t : {ModelType::logistic_l2, ModelType::logistic_l1, ModelType::logistic_elastic, ModelType::svm})
    if (to_string(t) == s) return t;
  throw std::invalid_argument("unknown model type: " + std::string(s));
}

namespace {

double l1_share(ModelType t) {
  switch (t) {
    case ModelType::logistic_l1: return 1.0;
    case ModelType::logistic_elastic: return 0.5;
    default: return 0.0;
  }
}

// log(1 + exp(-m))
double softplus_neg(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_labels(std::span<const int> y, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(y.size()) != rows) throw std::invalid_argument("label count differs from row count");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == 0) neg = true;
    else throw std::invalid_argument("labels must be 0 or 1");
  }
  if (!pos || !neg) throw std::invalid_argument("training labels contain a single class");
}

double logistic_penalized(const Eigen::VectorXd& z, std::span<const int> y, const Eigen::VectorXd& w, double lam1,
                          double lam2) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus_neg((y[static_cast<std::size_t>(i)] ? 1.0 : -1.0) * z(i));
  return loss / static_cast<double>(z.size()) + lam1 * w.lpNorm<1>() + 0.5 * lam2 * w.squaredNorm();
}

LinearFit fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, double lam1, double lam2,
                       const SolverOptions& opts) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  LinearFit fit;
  fit.weights = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  double f = logistic_penalized(z, y, fit.weights, lam1, lam2);

  Eigen::VectorXd r(n), D(n), q(n), dq(n), g(d), hdiag(d), step(d);
  constexpr int kMaxSweeps = 200;
  constexpr double kInnerTol = 1e-10;
  constexpr double kInnerRelTol = 1e-3;
  for (int it = 0; it < opts.max_iter; ++it) {
    fit.iterations = it + 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(z(i));
      r(i) = (p - y[static_cast<std::size_t>(i)]) * inv_n;
      D(i) = std::max(p * (1.0 - p), 1e-10) * inv_n;
    }
    g.noalias() = x.transpose() * r;
    const double gb = r.sum();
    for (Eigen::Index j = 0; j < d; ++j) hdiag(j) = D.dot(x.col(j).cwiseAbs2());
    const double hb = D.sum();

    // coordinate descent on the penalized quadratic model; dq tracks D * q
    step.setZero();
    double step_b = 0.0;
    q.setZero();
    dq.setZero();
    double first_change = -1.0;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double a = hdiag(j) + lam2;
        if (a <= 0.0) continue;
        const auto xj = x.col(j);
        const double u0 = fit.weights(j) + step(j);
        const double grad = g(j) + xj.dot(dq) + lam2 * u0;
        const double c = u0 - grad / a;
        const double thr = lam1 / a;
        const double u = c > thr ? c - thr : (c < -thr ? c + thr : 0.0);
        const double delta = u - u0;
        if (delta != 0.0) {
          step(j) += delta;
          q.noalias() += delta * xj;
          dq.array() += delta * (D.array() * xj.array());
          max_change = std::max(max_change, std::abs(delta) * std::sqrt(a));
        }
      }
      const double grad_b = gb + dq.sum();
      const double delta_b = -grad_b / hb;
      step_b += delta_b;
      q.array() += delta_b;
      dq.noalias() += delta_b * D;
      max_change = std::max(max_change, std::abs(delta_b) * std::sqrt(hb));
      if (first_change < 0) first_change = max_change;
      if (max_change < std::max(kInnerTol, kInnerRelTol * first_change)) break;
    }

    const Eigen::VectorXd w_new_full = fit.weights + step;
    const double model_decrease = g.dot(step) + gb * step_b + lam1 * (w_new_full.lpNorm<1>() - fit.weights.lpNorm<1>()) +
                                  0.5 * lam2 * (w_new_full.squaredNorm() - fit.weights.squaredNorm());
    if (model_decrease >= 0.0) {
      fit.converged = true;
      break;
    }
    double beta = 1.0, f_new = f;
    Eigen::VectorXd w_try, z_try;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      w_try = fit.weights + beta * step;
      z_try = z + beta * q;
      f_new = logistic_penalized(z_try, y, w_try, lam1, lam2);
      if (f_new <= f + 0.01 * beta * model_decrease) {
        accepted = true;
        break;
      }
      beta *= 0.5;
    }
    if (!accepted) {
      fit.converged = true;  // no descent possible at working precision
      break;
    }
    fit.weights = w_try;
    b += beta * step_b;
    z = z_try;
    const double decrease = f - f_new;
    f = f_new;
    if (decrease < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = b;
  fit.objective = f;
  return fit;
}

LinearFit fit_svm(const Eigen::MatrixXd& x, std::span<const int> y, double strength, std::uint64_t seed,
                  const SolverOptions& opts) {
  // Dual coordinate descent for C * sum hinge + |w~|^2 / 2 with w~ = (w, b)
  // and C = 1 / (strength * n); the bias is an augmented constant feature.
  const Eigen::Index n = x.rows(), d = x.cols();
  const double c_box = 1.0 / (strength * static_cast<double>(n));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qii(n);
  for (Eigen::Index i = 0; i < n; ++i) qii(i) = x.row(i).squaredNorm() + 1.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);

  LinearFit fit;
  const double eps = std::max(opts.tol * 1e3, 1e-12);  // projected-gradient gap
  for (int epoch = 0; epoch < opts.max_svm_epochs; ++epoch) {
    fit.iterations = epoch + 1;
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (auto i : order) {
      const double s = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      const double grad = s * (x.row(i).dot(w) + b) - 1.0;
      double pg = grad;
      if (alpha(i) <= 0.0) pg = std::min(grad, 0.0);
      else if (alpha(i) >= c_box) pg = std::max(grad, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha(i);
      alpha(i) = std::clamp(old - grad / qii(i), 0.0, c_box);
      const double delta = (alpha(i) - old) * s;
      if (delta != 0.0) {
        w.noalias() += delta * x.row(i).transpose();
        b += delta;
      }
    }
    if (pg_max - pg_min <= eps) {
      fit.converged = true;
      break;
    }
  }
  fit.weights = w;
  fit.intercept = b;
  fit.objective = linear_objective(x, y, ModelType::svm, strength, w, b);
  return fit;
}

}  // namespace

double linear_objective(const Eigen::MatrixXd& x, std::span<const int> y, ModelType type, double strength,
                        const Eigen::VectorXd& w, double b) {
  const Eigen::VectorXd z = (x * w).array() + b;
  if (type == ModelType::svm) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      hinge += std::max(0.0, 1.0 - (y[static_cast<std::size_t>(i)] ? 1.0 : -1.0) * z(i));
    return hinge / static_cast<double>(z.size()) + 0.5 * strength * (w.squaredNorm() + b * b);
  }
  const double l1 = l1_share(type);
  return logistic_penalized(z, y, w, strength * l1, strength * (1.0 - l1));
}

LinearFit fit_linear(const Eigen::MatrixXd& x, std::span<const int> y, ModelType type, double strength,
                     std::uint64_t seed, const SolverOptions& opts) {
  check_labels(y, x.rows());
  if (!(strength > 0.0) || !std::isfinite(strength)) throw std::invalid_argument("regularization strength must be positive");
  if (type == ModelType::svm) return fit_svm(x, y, strength, seed, opts);
  const double l1 = l1_share(type);
  return fit_logistic(x, y, strength * l1, strength * (1.0 - l1), opts);
}

nlohmann::json ModelArtifact::to_json() const {
  nlohmann::json pre{{"impute", preprocessor.impute},
                     {"standardize", preprocessor.standardize},
                     {"center", preprocessor.center},
                     {"scale", preprocessor.scale},
                     {"all_missing", preprocessor.all_missing}};
  return {{"columns", columns},
          {"weights", weights},
          {"intercept", intercept},
          {"preprocessor", pre},
          {"hyperparameters",
           {{"model_type", to_string(hyper.type)}, {"strength", hyper.strength}, {"standardize", hyper.standardize}}},
          {"seed", seed},
          {"iterations", iterations},
          {"converged", converged}};
}

ModelArtifact ModelArtifact::from_json(const nlohmann::json& j) {
  ModelArtifact m;
  m.columns = j.at("columns").get<std::vector<std::string>>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  const auto& pre = j.at("preprocessor");
  m.preprocessor.columns = m.columns;
  m.preprocessor.impute = pre.at("impute").get<std::vector<double>>();
  m.preprocessor.standardize = pre.at("standardize").get<bool>();
  m.preprocessor.center = pre.at("center").get<std::vector<double>>();
  m.preprocessor.scale = pre.at("scale").get<std::vector<double>>();
  m.preprocessor.all_missing = pre.at("all_missing").get<std::vector<std::string>>();
  const auto& hp = j.at("hyperparameters");
  m.hyper.type = parse_model_type(hp.at("model_type").get<std::string>());
  m.hyper.strength = hp.at("strength").get<double>();
  m.hyper.standardize = hp.at("standardize").get<bool>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
  if (m.weights.size() != m.columns.size() || m.preprocessor.impute.size() != m.columns.size())
    throw std::invalid_argument("ModelArtifact: inconsistent vector lengths");
  return m;
}

ModelArtifact train_linear(const FeatureMatrix& x, std::span<const int> y, const Hyperparameters& hp,
                           std::uint64_t seed, const SolverOptions& opts) {
  ModelArtifact m;
  m.columns = x.columns();
  m.preprocessor = fit_preprocessor(x, hp.standardize);
  m.hyper = hp;
  m.seed = seed;
  const Eigen::MatrixXd dense = m.preprocessor.apply(x);
  auto fit = fit_linear(dense, y, hp.type, hp.strength, seed, opts);
  m.weights.assign(fit.weights.data(), fit.weights.data() + fit.weights.size());
  m.intercept = fit.intercept;
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  return m;
}

Predictions predict(const ModelArtifact& model, const FeatureMatrix& x) {
  if (x.columns() != model.columns) throw std::invalid_argument("predict: feature columns differ from the model's");
  const Eigen::MatrixXd dense = model.preprocessor.apply(x);
  const Eigen::Map<const Eigen::VectorXd> w(model.weights.data(), static_cast<Eigen::Index>(model.weights.size()));
  const Eigen::VectorXd s = (dense * w).array() + model.intercept;
  Predictions p;
  p.scores.assign(s.data(), s.data() + s.size());
  p.labels.reserve(p.scores.size());
  for (double v : p.scores) p.labels.push_back(v > 0.0 ? 1 : 0);
  return p;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy: size mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Grid search

Grid Grid::standard() {
  Grid g;
  g.strengths = {1e-100, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1};
  g.types = {ModelType::logistic_l2, ModelType::logistic_l1, ModelType::logistic_elastic, ModelType::svm};
  g.standardize = {false, true};
  return g;
}

std::vector<Hyperparameters> Grid::points() const {
  std::vector<Hyperparameters> pts;
  for (bool s : standardize)
    for (auto t : types)
      for (double c : strengths) pts.push_back({t, c, s});
  return pts;
}

nlohmann::json Grid::to_json() const {
  std::vector<std::string> ts;
  for (auto t : types) ts.emplace_back(to_string(t));
  return {{"strengths", strengths}, {"model_types", ts}, {"standardize", std::vector<bool>(standardize)}};
}

Grid Grid::from_json(const nlohmann::json& j) {
  Grid g = standard();
  if (j.contains("strengths")) g.strengths = j.at("strengths").get<std::vector<double>>();
  if (j.contains("model_types")) {
    g.types.clear();
    for (const auto& s : j.at("model_types")) g.types.push_back(parse_model_type(s.get<std::string>()));
  }
  if (j.contains("standardize")) g.standardize = j.at("standardize").get<std::vector<bool>>();
  if (g.points().empty()) throw std::invalid_argument("grid is empty");
  return g;
}

namespace {

// true when a should win over b on a dev-accuracy tie
bool preferred(const Hyperparameters& a, const Hyperparameters& b) {
  if (a.strength != b.strength) return a.strength > b.strength;
  if (a.type != b.type) return a.type < b.type;
  return !a.standardize && b.standardize;
}

}  // namespace

GridResult grid_search(const FeatureMatrix& train, std::span<const int> y_train, const FeatureMatrix& dev,
                       std::span<const int> y_dev, const Grid& grid, std::uint64_t seed, Exec exec,
                       const SolverOptions& opts) {
  const auto pts = grid.points();
  if (pts.empty()) throw std::invalid_argument("grid_search: empty grid");
  check_labels(y_train, static_cast<Eigen::Index>(train.rows()));

  // one preprocessor per standardization choice, shared across points
  const Preprocessor pre_raw = fit_preprocessor(train, false);
  const Preprocessor pre_std = fit_preprocessor(train, true);
  const Eigen::MatrixXd x_raw = pre_raw.apply(train), x_std = pre_std.apply(train);
  const Eigen::MatrixXd d_raw = pre_raw.apply(dev), d_std = pre_std.apply(dev);

  std::vector<LinearFit> fits(pts.size());
  std::vector<double> dev_acc(pts.size(), 0.0);
  auto run = [&](std::size_t k) {
    const auto& hp = pts[k];
    const auto& x = hp.standardize ? x_std : x_raw;
    const auto& dx = hp.standardize ? d_std : d_raw;
    fits[k] = fit_linear(x, y_train, hp.type, hp.strength, seed, opts);
    const Eigen::VectorXd s = (dx * fits[k].weights).array() + fits[k].intercept;
    std::size_t hit = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) hit += (s(i) > 0.0 ? 1 : 0) == y_dev[static_cast<std::size_t>(i)];
    dev_acc[k] = y_dev.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(y_dev.size());
  };
  const auto n = static_cast<std::ptrdiff_t>(pts.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (dev_acc[k] > dev_acc[best] || (dev_acc[k] == dev_acc[best] && preferred(pts[k], pts[best]))) best = k;
  }

  GridResult res;
  res.dev_accuracy = dev_acc[best];
  for (std::size_t k = 0; k < pts.size(); ++k) res.evaluated.push_back({pts[k], dev_acc[k]});
  auto& m = res.best;
  m.columns = train.columns();
  m.preprocessor = pts[best].standardize ? pre_std : pre_raw;
  m.hyper = pts[best];
  m.seed = seed;
  m.weights.assign(fits[best].weights.data(), fits[best].weights.data() + fits[best].weights.size());
  m.intercept = fits[best].intercept;
  m.iterations = fits[best].iterations;
  m.converged = fits[best].converged;
  return res;
}

// ---------------------------------------------------------------------------
// Likelihood-ratio test

double logistic_loglik(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw std::invalid_argument("logistic_loglik: size mismatch");
  const Eigen::VectorXd z = (x * w).array() + b;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) ll -= softplus_neg((y[static_cast<std::size_t>(i)] ? 1.0 : -1.0) * z(i));
  return ll;
}

LinearFit fit_logistic_mle(const Eigen::MatrixXd& x, std::span<const int> y, const SolverOptions& opts) {
  check_labels(y, x.rows());
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];

  auto ll_of = [&](const Eigen::VectorXd& bt) { return logistic_loglik(bt.head(d), bt(d), x, y); };
  double ll = ll_of(beta);
  LinearFit fit;
  const int max_newton = std::min(opts.max_iter, 200);
  for (int it = 0; it < max_newton; ++it) {
    fit.iterations = it + 1;
    const Eigen::VectorXd z = xa * beta;
    Eigen::VectorXd p(n), wts(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      wts(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    const Eigen::VectorXd grad = xa.transpose() * (yv - p);
    Eigen::MatrixXd hess = xa.transpose() * wts.asDiagonal() * xa;
    hess.diagonal().array() += 1e-10 * (1.0 + hess.diagonal().array());
    const Eigen::VectorXd dir = hess.ldlt().solve(grad);
    double step = 1.0, ll_new = ll;
    Eigen::VectorXd cand;
    for (int ls = 0; ls < 50; ++ls) {
      cand = beta + step * dir;
      ll_new = ll_of(cand);
      if (ll_new >= ll) break;
      step *= 0.5;
    }
    if (!(ll_new >= ll)) {
      fit.converged = true;
      break;
    }
    const double gain = ll_new - ll;
    beta = cand;
    ll = ll_new;
    if (gain < 1e-10 * std::max(1.0, std::abs(ll))) {
      fit.converged = true;
      break;
    }
  }
  fit.weights = beta.head(d);
  fit.intercept = beta(d);
  fit.objective = -ll;
  return fit;
}

double likelihood_ratio_test(double ll_nested, double ll_full, int df_added) {
  if (df_added < 1) throw std::invalid_argument("likelihood_ratio_test: df must be >= 1");
  double dev = 2.0 * (ll_full - ll_nested);
  if (dev < -1e-6) throw std::invalid_argument("likelihood_ratio_test: full model fits worse than nested model");
  dev = std::max(0.0, dev);
  if (dev == 0.0) return 1.0;
  boost::math::chi_squared dist(df_added);
  return boost::math::cdf(boost::math::complement(dist, dev));
}

LrTestResult nested_lr_test(const FeatureMatrix& nested, const FeatureMatrix& full, std::span<const int> y) {
  std::unordered_set<std::string> full_cols(full.columns().begin(), full.columns().end());
  for (const auto& c : nested.columns())
    if (!full_cols.count(c)) throw std::invalid_argument("nested_lr_test: column " + c + " missing from full model");
  if (full.cols() <= nested.cols()) throw std::invalid_argument("nested_lr_test: full model adds no columns");
  // standardization only conditions the Newton system; the likelihood is unchanged
  const auto xn = fit_preprocessor(nested, true).apply(nested);
  const auto xf = fit_preprocessor(full, true).apply(full);
  const auto fn = fit_logistic_mle(xn, y);
  const auto ff = fit_logistic_mle(xf, y);
  LrTestResult r;
  r.ll_nested = logistic_loglik(fn.weights, fn.intercept, xn, y);
  r.ll_full = logistic_loglik(ff.weights, ff.intercept, xf, y);
  r.df = static_cast<int>(full.cols() - nested.cols());
  r.deviance = std::max(0.0, 2.0 * (r.ll_full - r.ll_nested));
  r.p = likelihood_ratio_test(r.ll_nested, r.ll_full, r.df);
  return r;
}

}  // namespace contro
