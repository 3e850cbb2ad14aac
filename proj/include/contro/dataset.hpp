#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "contro/convfeat.hpp"
#include "contro/corpus.hpp"
#include "contro/labeler.hpp"
#include "contro/learn.hpp"
#include "contro/parallel.hpp"
#include "contro/postfeat.hpp"

namespace contro {

enum class Pooling { mean, sif };

/// External inputs shared by every featurizer of a dataset.
struct Resources {
  std::shared_ptr<const EmbeddingTable> embeddings;             // TEXT pooling, and C-TEXT fallback
  std::shared_ptr<const CommentVectorSource> comment_vectors;   // C-TEXT; overrides the table when set
  std::shared_ptr<const Lexicons> lexicons;                     // HAND; default lexicons when null
  std::size_t text_max_tokens = 512;
  std::size_t comment_max_tokens = 128;
  std::size_t pca_dim = 100;
  Pooling pooling = Pooling::mean;
  GiniMode gini = GiniMode::direct_replies;
};

/// Labeled posts of one community with their full comment trees.
struct Dataset {
  std::string community;
  std::vector<CommentTree> trees;
  std::vector<int> labels;  // 1 = controversial
  Resources resources;

  std::size_t size() const { return trees.size(); }
  std::vector<std::string> row_ids() const;
};

/// Keeps the trees whose post received a controversial or non-controversial
/// label, in tree order.
Dataset make_dataset(std::string community, std::span<const CommentTree> trees,
                     std::span<const LabelRecord> labels, Resources resources = {});

enum class Family { TEXT, TIME, AUTHOR, HAND, TFIDF, C_RATE, C_TREE, C_TEXT, CONST };

std::string_view to_string(Family f);

/// Set of feature families written as names joined by '+', e.g. "TEXT+TIME".
/// CONST is a single constant column used as a null baseline.
struct FeatureSpec {
  std::set<Family> families;

  /// Throws std::invalid_argument on an unknown or repeated family name.
  static FeatureSpec parse(std::string_view s);
  std::string name() const;
  bool uses_comments() const;
  bool has(Family f) const { return families.count(f) != 0; }
  bool operator==(const FeatureSpec&) const = default;
};

/// Per-post inputs to every featurizer for one observation window.
struct RawFeatures {
  std::vector<std::string> row_ids;
  std::vector<std::vector<std::string>> tokens;        // title + body
  std::vector<std::optional<std::vector<double>>> text_mean;  // mean pooling; SIF is fitted per fold
  std::vector<std::vector<double>> hand;
  std::vector<std::string> hand_names;
  std::vector<Timestamp> created;
  std::vector<std::optional<std::string>> authors;
  std::optional<double> window;  // minutes; nothing = post time only
  std::vector<ConvFeatureRow> conv;
  std::vector<std::optional<std::vector<double>>> ctext;
  std::size_t text_dim = 0;
  std::size_t ctext_dim = 0;
};

/// Computes everything the spec needs. Comment features require a window.
/// Throws std::invalid_argument when spec needs text vectors that the
/// resources do not provide, or comment features without a window.
RawFeatures extract_raw(const Dataset& ds, const FeatureSpec& spec, std::optional<double> window,
                        Exec exec = Exec::parallel);

/// Fitted state of every feature family, learned from training rows only.
class FoldFeaturizer {
 public:
  static FoldFeaturizer fit(const RawFeatures& raw, std::span<const std::size_t> train_rows, const FeatureSpec& spec,
                            const Resources& res);

  FeatureMatrix transform(const RawFeatures& raw, std::span<const std::size_t> rows) const;
  const std::vector<std::string>& columns() const { return columns_; }

  /// Everything learned during fit, for leakage checks and manifests.
  nlohmann::json state() const;

 private:
  FeatureSpec spec_;
  Resources res_;
  std::optional<TfidfModel> tfidf_;
  std::optional<SifModel> sif_;
  std::optional<PcaProjection> pca_;
  std::optional<TimeEncoder> time_;
  std::optional<AuthorEncoder> author_;
  std::size_t hand_count_ = 0;
  std::size_t text_dim_ = 0;
  std::size_t ctext_dim_ = 0;
  std::vector<std::string> columns_;
};

}  // namespace contro
