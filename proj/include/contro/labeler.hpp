#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "contro/corpus.hpp"

namespace contro {

enum class Label { controversial, non_controversial, discarded };

enum class DiscardReason { too_few_comments, unstable_estimate, degenerate_votes, below_half, middle_band };

std::string_view to_string(Label l);
std::string_view to_string(DiscardReason r);

struct LabelRecord {
  std::string post_id;
  double pupv_estimate = 0.0;
  Label label = Label::discarded;
  std::optional<DiscardReason> discard_reason;
};

struct FilterRules {
  std::int64_t min_comments = 30;
  double max_pupv_range = 0.05;  // discard when range is strictly greater
  double min_pupv = 0.5;
};

/// Mean of the repeated noisy observations. Throws on an empty list.
double estimate_pupv(std::span<const double> samples);

struct FilterResult {
  std::vector<Post> survivors;
  std::vector<LabelRecord> discarded;
};

/// Applies, in order: comment floor, estimate stability (sample range), vote
/// degeneracy (ratio and score samples both constant), and the 50% floor.
FilterResult filter_posts(std::span<const Post> posts, const FilterRules& rules = {});

/// Bottom quartile by estimate is controversial, top quartile is
/// non-controversial, both of size floor(n/4); ties order by post id.
/// Output is in ascending (estimate, id) order. Throws DataError for n < 8.
std::vector<LabelRecord> assign_labels(std::span<const Post> survivors);

/// filter_posts followed by assign_labels; records for every input post,
/// in input order.
std::vector<LabelRecord> label_posts(std::span<const Post> posts, const FilterRules& rules = {});

void write_labels_csv(std::ostream& out, std::span<const LabelRecord> records);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // externally tagged members among scored posts
};

struct ValidationResult {
  ClassScores controversial;
  ClassScores non_controversial;
  std::size_t sampled = 0;
  std::size_t scored = 0;  // survivors that received a label
};

/// Builds a 1:k sample of externally listed and unlisted posts (seeded),
/// runs the labeler on it and scores agreement on the labeled survivors.
ValidationResult validate_against_ranking(std::span<const Post> posts,
                                          const std::unordered_set<std::string>& external_controversial_ids,
                                          int k, std::uint64_t seed, const FilterRules& rules = {});

/// Per-class precision/recall/F1 of predicted vs reference binary tags.
ValidationResult score_agreement(const std::vector<bool>& predicted_controversial,
                                 const std::vector<bool>& reference_controversial);

std::unordered_set<std::string> read_id_list(std::istream& in);

}  // namespace contro
