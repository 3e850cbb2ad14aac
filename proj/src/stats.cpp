#include "contro/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace contro {

namespace {

// |a - b| small enough to treat two magnitudes as tied
bool same_magnitude(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs) {
  std::vector<double> d;
  for (double v : diffs) {
    if (!std::isfinite(v)) throw std::invalid_argument("wilcoxon_signed_rank: non-finite difference");
    if (std::abs(v) > 1e-12) d.push_back(v);
  }
  WilcoxonResult r;
  r.n = d.size();
  if (d.empty()) return r;

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });

  // doubled average ranks keep the exact distribution on integers
  std::vector<int> rank2(d.size());
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && same_magnitude(std::abs(d[order[i]]), std::abs(d[order[j]]))) ++j;
    const int r2 = static_cast<int>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = r2;
    tie_sizes.push_back(j - i);
    i = j;
  }
  int w2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) w2 += rank2[i];
  r.w_plus = w2 / 2.0;
  const auto n = static_cast<double>(d.size());

  if (d.size() <= 20) {
    r.exact = true;
    const int total = std::accumulate(rank2.begin(), rank2.end(), 0);
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int rk : rank2) {
      for (int s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + rk)] += count[static_cast<std::size_t>(s)];
      reach += rk;
    }
    const double all = std::ldexp(1.0, static_cast<int>(d.size()));
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (s <= w2) lower += count[static_cast<std::size_t>(s)];
      if (s >= w2) upper += count[static_cast<std::size_t>(s)];
    }
    r.p = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return r;
  }

  const double mean = n * (n + 1) / 4.0;
  double var = n * (n + 1) * (2 * n + 1) / 24.0;
  for (auto t : tie_sizes) {
    const auto tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  if (var <= 0) return r;
  const double z = std::max(0.0, std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
  r.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

CorrectedTResult corrected_resampled_t(std::span<const double> diffs, double n_train, double n_test) {
  if (diffs.size() < 2) throw std::invalid_argument("corrected_resampled_t: need at least two differences");
  if (!(n_train > 0) || !(n_test > 0)) throw std::invalid_argument("corrected_resampled_t: split sizes must be positive");
  const auto k = static_cast<double>(diffs.size());
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / k;
  double ss = 0.0;
  for (double v : diffs) ss += (v - mean) * (v - mean);
  const double var = ss / (k - 1);
  CorrectedTResult r;
  r.df = static_cast<int>(diffs.size()) - 1;
  if (var <= 1e-300) {
    r.degenerate = true;
    const bool nonzero = std::abs(mean) > 1e-15;
    r.t = nonzero ? std::copysign(INFINITY, mean) : 0.0;
    r.p = nonzero ? 0.0 : 1.0;
    return r;
  }
  r.t = mean / std::sqrt((1.0 / k + n_test / n_train) * var);
  boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

SignificanceResult significance(std::span<const double> acc_a, std::span<const double> acc_b, double n_train,
                                double n_test) {
  if (acc_a.size() != acc_b.size()) throw std::invalid_argument("significance: fold counts differ");
  std::vector<double> diffs(acc_a.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = acc_a[i] - acc_b[i];
  SignificanceResult s;
  s.wilcoxon = wilcoxon_signed_rank(diffs);
  s.t_test = corrected_resampled_t(diffs, n_train, n_test);
  s.p = std::max(s.wilcoxon.p, s.t_test.p);
  return s;
}

}  // namespace contro
