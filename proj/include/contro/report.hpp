#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contro/experiments.hpp"

namespace contro {

struct ResultRow {
  std::string config;
  std::optional<double> t;
  std::size_t fold = 0;
  double accuracy = 0.0;
};

/// Reads a results CSV (config,t,fold,accuracy). Throws DataError on a
/// malformed line.
std::vector<ResultRow> read_results_csv(std::istream& in);

struct SeriesPoint {
  double t = 0.0;
  double mean = 0.0;
};

struct SweepSeries {
  std::map<std::string, std::vector<SeriesPoint>> by_config;  // t ascending
  std::map<std::string, double> post_only;                   // rows without t
};

/// Mean accuracy per (config, t), summing folds in file order.
SweepSeries aggregate(const std::vector<ResultRow>& rows);

/// Accuracy-vs-t line plot: one polyline per config, post-only configs as
/// horizontal reference lines. Axes are drawn even without data.
std::string render_sweep_svg(const SweepSeries& series, const std::string& title);

/// Reads a transfer CSV (source,target,accuracy,degradation).
TransferMatrix read_transfer_csv(std::istream& in);

/// Heat table of degradations, rows = training community.
std::string render_transfer_svg(const TransferMatrix& m, const std::string& title);

}  // namespace contro
