#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "contro/corpus.hpp"
#include "contro/parallel.hpp"

namespace contro {

/// Timing features of a window-pruned tree. Gaps are ln(1 + minutes) with
/// child-before-parent gaps clamped to zero.
struct RateFeatures {
  std::size_t n_comments = 0;
  std::optional<double> log_first_reply_gap;
  std::optional<double> mean_log_parent_child_gap;
};

/// Shape features of a window-pruned tree; all missing when the window holds
/// no comments.
struct TreeFeatures {
  std::optional<double> max_depth_ratio;
  std::optional<double> prop_top_level;
  std::optional<double> avg_depth;
  std::optional<double> avg_branching;
  std::optional<double> prop_top_level_replied;
  std::optional<double> gini_top_level_replies;
  std::optional<double> wiener_index;
};

/// How replies under a top-level comment are counted for the Gini.
enum class GiniMode { direct_replies, subtree_size };

inline constexpr std::array<std::string_view, 3> kRateFeatureNames = {
    "n_comments", "log_first_reply_gap", "mean_log_parent_child_gap"};
inline constexpr std::array<std::string_view, 7> kTreeFeatureNames = {
    "max_depth_ratio", "prop_top_level", "avg_depth", "avg_branching",
    "prop_top_level_replied", "gini_top_level_replies", "wiener_index"};

/// ln(1 + max(0, seconds) / 60)
double log_gap_minutes(Timestamp from, Timestamp to);

RateFeatures rate_features(const CommentTree& tree);
TreeFeatures tree_features(const CommentTree& tree, GiniMode mode = GiniMode::direct_replies);

/// Mean absolute difference form, sum_ij |x_i - x_j| / (2 n^2 mean).
/// Zero when n == 1 or the mean is zero. Throws on empty or negative input.
double gini(std::span<const double> values);

/// Mean hop distance over unordered node pairs (post included); 0 for a
/// single node. Linear time via edge cut sizes.
double wiener_index(const CommentTree& tree);

/// Supplies a document vector for a comment, or nothing when the comment has
/// no usable text.
class CommentVectorSource {
 public:
  virtual ~CommentVectorSource() = default;
  virtual std::optional<std::vector<double>> vector_for(const Comment& c) const = 0;
  virtual std::size_t dim() const = 0;
};

/// Mean of the available comment vectors; deleted bodies are skipped.
/// Throws DataError on a dimension mismatch.
std::optional<std::vector<double>> ctext_features(const CommentTree& tree, const CommentVectorSource& source);

struct ConvFeatureRow {
  RateFeatures rate;
  TreeFeatures tree;
};

/// Prunes every tree to the window and extracts rate and tree features, one
/// row per tree in input order. Exec::parallel distributes trees over OpenMP
/// threads; Exec::serial is the reference loop.
std::vector<ConvFeatureRow> extract_conv_features(std::span<const CommentTree> trees, double minutes,
                                                  GiniMode mode = GiniMode::direct_replies,
                                                  Exec exec = Exec::parallel);

}  // namespace contro
