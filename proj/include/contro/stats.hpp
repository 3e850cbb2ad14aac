#pragma once

#include <span>

namespace contro {

struct WilcoxonResult {
  double w_plus = 0.0;   // rank sum of positive differences
  std::size_t n = 0;     // nonzero differences
  bool exact = false;
  double p = 1.0;        // two-sided
};

/// Signed-rank test on paired differences. Zeros are dropped and tied
/// magnitudes get average ranks. Exact null distribution for n <= 20,
/// normal approximation with continuity and tie correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs);

struct CorrectedTResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
  bool degenerate = false;  // zero sample variance
};

/// Nadeau-Bengio corrected resampled t-test:
///   t = mean / sqrt((1/k + n_test/n_train) * s^2), Student-t with k-1 df.
/// With zero variance p is 0 when the mean is nonzero and 1 otherwise.
/// Throws std::invalid_argument for fewer than two differences.
CorrectedTResult corrected_resampled_t(std::span<const double> diffs, double n_train, double n_test);

struct SignificanceResult {
  WilcoxonResult wilcoxon;
  CorrectedTResult t_test;
  double p = 1.0;  // max of the two
};

/// Paired per-fold accuracies; p = max(Wilcoxon p, corrected t p).
SignificanceResult significance(std::span<const double> acc_a, std::span<const double> acc_b, double n_train,
                                double n_test);

}  // namespace contro
