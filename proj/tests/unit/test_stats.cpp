#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "contro/stats.hpp"
#include "oracles.hpp"

using namespace contro;

namespace {

/// Average ranks of |d| over the nonzero differences.
std::vector<double> average_ranks(const std::vector<double>& d) {
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) less += 1;
      else if (std::fabs(d[j]) == std::fabs(d[i])) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

}  // namespace

TEST_CASE("wilcoxon exact p equals sign enumeration") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 300; ++rep) {
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_int_distribution<int> val(-6, 6);  // small range forces ties and zeros
    std::vector<double> diffs(static_cast<std::size_t>(len(rng)));
    for (auto& v : diffs) v = val(rng) / 4.0;
    auto res = wilcoxon_signed_rank(diffs);

    std::vector<double> nz;
    for (double v : diffs)
      if (v != 0.0) nz.push_back(v);
    CHECK(res.n == nz.size());
    if (nz.empty()) {
      CHECK(res.p == 1.0);
      continue;
    }
    auto ranks = average_ranks(nz);
    double w = 0;
    for (std::size_t i = 0; i < nz.size(); ++i)
      if (nz[i] > 0) w += ranks[i];
    CHECK(res.exact);
    CHECK(res.w_plus == w);
    CHECK(std::fabs(res.p - oracle::wilcoxon_enumerate(ranks, w)) < 1e-12);
  }
}

TEST_CASE("wilcoxon known values") {
  std::vector<double> pos(15);
  std::iota(pos.begin(), pos.end(), 1.0);
  auto r = wilcoxon_signed_rank(pos);
  CHECK(r.p == doctest::Approx(2.0 / 32768.0));
  std::vector<double> zeros(5, 0.0);
  CHECK(wilcoxon_signed_rank(zeros).p == 1.0);
  std::vector<double> bad{1.0, NAN};
  CHECK_THROWS_AS(wilcoxon_signed_rank(bad), std::invalid_argument);
}

TEST_CASE("wilcoxon is invariant to negation") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> d(static_cast<std::size_t>(5 + rep % 30));
    for (auto& v : d) v = g(rng) + 0.3;
    std::vector<double> neg(d.size());
    std::transform(d.begin(), d.end(), neg.begin(), [](double v) { return -v; });
    CHECK(wilcoxon_signed_rank(d).p == doctest::Approx(wilcoxon_signed_rank(neg).p).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon normal approximation above twenty") {
  std::vector<double> d(25);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (i % 3 == 0 ? -1.0 : 1.0) * static_cast<double>(i + 1);
  auto r = wilcoxon_signed_rank(d);
  CHECK_FALSE(r.exact);
  const double n = 25, mean = n * (n + 1) / 4, sd = std::sqrt(n * (n + 1) * (2 * n + 1) / 24);
  const double z = (std::fabs(r.w_plus - mean) - 0.5) / sd;
  CHECK(r.p == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("corrected t matches a direct transcription") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.01, 0.02);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> d(15);
    for (auto& v : d) v = g(rng);
    const double k = 15, n_train = 600, n_test = 200;
    double mean = 0;
    for (double v : d) mean += v;
    mean /= k;
    double ss = 0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double t = mean / std::sqrt((1 / k + n_test / n_train) * ss / (k - 1));
    auto r = corrected_resampled_t(d, n_train, n_test);
    CHECK(std::fabs(r.t - t) < 1e-9);
    CHECK(r.df == 14);
    CHECK(std::fabs(r.p - oracle::student_t_two_sided(t, 14)) < 1e-9);
  }
}

TEST_CASE("corrected t degenerate cases") {
  std::vector<double> same{0.02, 0.02, 0.02};
  auto r = corrected_resampled_t(same, 60, 20);
  CHECK(r.degenerate);
  CHECK(r.p == 0.0);
  std::vector<double> zero{0.0, 0.0};
  CHECK(corrected_resampled_t(zero, 60, 20).p == 1.0);
  std::vector<double> one{0.1};
  CHECK_THROWS_AS(corrected_resampled_t(one, 60, 20), std::invalid_argument);
  std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(corrected_resampled_t(two, 0, 20), std::invalid_argument);
}

TEST_CASE("significance takes the larger p-value") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.7, 0.03);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> a(15), b(15);
    for (auto& v : a) v = g(rng) + 0.01 * (rep % 4);
    for (auto& v : b) v = g(rng);
    auto s = significance(a, b, 600, 200);
    CHECK(s.p == std::max(s.wilcoxon.p, s.t_test.p));
  }
  std::vector<double> a{1, 2}, b{1};
  CHECK_THROWS_AS(significance(a, b, 1, 1), std::invalid_argument);
}
