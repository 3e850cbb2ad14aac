#include "contro/convfeat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "contro/error.hpp"

namespace contro {

double log_gap_minutes(Timestamp from, Timestamp to) {
  const double secs = std::max<double>(0.0, static_cast<double>(to - from));
  return std::log1p(secs / 60.0);
}

RateFeatures rate_features(const CommentTree& tree) {
  RateFeatures f;
  f.n_comments = tree.n_comments();
  if (f.n_comments == 0) return f;
  auto nodes = tree.nodes();
  const Timestamp post_created = tree.post().created;

  std::optional<Timestamp> first_top;
  double sum = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    sum += log_gap_minutes(nodes[static_cast<std::size_t>(n.parent)].created, n.created);
    if (n.depth == 1 && (!first_top || n.created < *first_top)) first_top = n.created;
  }
  f.log_first_reply_gap = log_gap_minutes(post_created, *first_top);
  f.mean_log_parent_child_gap = sum / static_cast<double>(f.n_comments);
  return f;
}

double gini(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("gini: empty input");
  std::vector<double> x(values.begin(), values.end());
  double total = 0.0;
  for (double v : x) {
    if (v < 0.0) throw std::invalid_argument("gini: negative value");
    total += v;
  }
  const auto n = static_cast<double>(x.size());
  if (x.size() == 1 || total == 0.0) return 0.0;
  std::sort(x.begin(), x.end());
  // sum_ij |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i), i 1-based
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  const double mean = total / n;
  return (2.0 * acc) / (2.0 * n * n * mean);
}

double wiener_index(const CommentTree& tree) {
  auto nodes = tree.nodes();
  const std::size_t n = nodes.size();
  if (n < 2) return 0.0;
  // Each edge (parent, v) lies on size(v) * (n - size(v)) shortest paths.
  std::vector<std::size_t> size(n, 1);
  double total = 0.0;
  for (std::size_t i = n - 1; i >= 1; --i) {
    const auto s = static_cast<double>(size[i]);
    total += s * (static_cast<double>(n) - s);
    size[static_cast<std::size_t>(nodes[i].parent)] += size[i];
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return total / pairs;
}

TreeFeatures tree_features(const CommentTree& tree, GiniMode mode) {
  TreeFeatures f;
  const std::size_t nc = tree.n_comments();
  if (nc == 0) return f;
  auto nodes = tree.nodes();
  const auto ncd = static_cast<double>(nc);

  std::size_t max_depth = 0, top_level = 0, top_replied = 0;
  double depth_sum = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const auto d = static_cast<std::size_t>(nodes[i].depth);
    max_depth = std::max(max_depth, d);
    depth_sum += static_cast<double>(d);
    if (d == 1) {
      ++top_level;
      if (!nodes[i].children.empty()) ++top_replied;
    }
  }

  // every non-root node is someone's child, so total children = nc
  f.avg_branching = ncd / static_cast<double>(nodes.size());
  f.max_depth_ratio = static_cast<double>(max_depth) / ncd;
  f.prop_top_level = static_cast<double>(top_level) / ncd;
  f.avg_depth = depth_sum / ncd;
  f.prop_top_level_replied = static_cast<double>(top_replied) / static_cast<double>(top_level);

  std::vector<double> replies;
  replies.reserve(top_level);
  if (mode == GiniMode::direct_replies) {
    for (auto c : nodes[0].children) replies.push_back(static_cast<double>(nodes[static_cast<std::size_t>(c)].children.size()));
  } else {
    std::vector<double> below(nodes.size(), 0.0);
    for (std::size_t i = nodes.size() - 1; i >= 1; --i) {
      below[static_cast<std::size_t>(nodes[i].parent)] += below[i] + 1.0;
    }
    for (auto c : nodes[0].children) replies.push_back(below[static_cast<std::size_t>(c)]);
  }
  f.gini_top_level_replies = gini(replies);
  f.wiener_index = wiener_index(tree);
  return f;
}

std::optional<std::vector<double>> ctext_features(const CommentTree& tree, const CommentVectorSource& source) {
  std::vector<double> sum;
  std::size_t count = 0;
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const auto& c = tree.comment(i);
    if (c.body_deleted) continue;
    auto v = source.vector_for(c);
    if (!v) continue;
    if (sum.empty()) sum.assign(v->size(), 0.0);
    if (v->size() != sum.size())
      throw DataError("ctext_features: comment " + c.id + " has dimension " + std::to_string(v->size()) +
                      ", expected " + std::to_string(sum.size()));
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
    ++count;
  }
  if (count == 0) return std::nullopt;
  for (auto& s : sum) s /= static_cast<double>(count);
  return sum;
}

std::vector<ConvFeatureRow> extract_conv_features(std::span<const CommentTree> trees, double minutes,
                                                  GiniMode mode, Exec exec) {
  if (!(minutes >= 0.0)) throw std::invalid_argument("window must be >= 0 minutes");
  std::vector<ConvFeatureRow> rows(trees.size());
  const auto n = static_cast<std::ptrdiff_t>(trees.size());
  auto one = [&](std::ptrdiff_t i) {
    auto pruned = prune_to_window(trees[static_cast<std::size_t>(i)], minutes);
    rows[static_cast<std::size_t>(i)] = {rate_features(pruned), tree_features(pruned, mode)};
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  }
  return rows;
}

}  // namespace contro
