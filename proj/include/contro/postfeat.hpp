#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "contro/convfeat.hpp"
#include "contro/corpus.hpp"

namespace contro {

// ---------------------------------------------------------------------------
// HAND features

struct Lexicons {
  std::unordered_set<std::string> first_person;
  std::unordered_set<std::string> second_person;
  std::unordered_map<std::string, double> sentiment;  // signed weight per word
  std::map<std::string, std::unordered_set<std::string>> wordlists;  // category -> words

  /// Pronoun lists only; empty sentiment lexicon and no wordlists.
  static Lexicons pronouns_only();
};

/// Reads <dir>/sentiment.txt ("word<TAB>weight") and every <dir>/wordlists/*.txt
/// (one token per line, category = file stem). Throws DataError on a bad line.
Lexicons load_lexicons(const std::filesystem::path& dir);

/// Lexicons shipped under data/ in the source tree.
Lexicons default_lexicons();

struct FieldFeatures {
  double length = 0;  // tokens
  double type_token_ratio = 0;
  double rate_first_person = 0;
  double rate_second_person = 0;
  double rate_question_marks = 0;     // per character
  double rate_capitalized_chars = 0;  // per character
  double sentiment = 0;               // mean weight over lexicon hits
};

struct HandFeatures {
  FieldFeatures title;
  FieldFeatures body;
  double n_links = 0;
  double n_reddit_links = 0;
  double n_imgur_links = 0;
  double n_sentences = 0;
  double readability = 0;
  double rate_italics = 0;
  double rate_bold = 0;
  double has_list = 0;
  std::vector<double> wordlist_rates;  // in Lexicons::wordlists order

  std::vector<double> to_vector() const;
};

std::vector<std::string> hand_feature_names(const Lexicons& lex);

/// Deleted bodies should be passed as empty strings.
HandFeatures hand_features(std::string_view title, std::string_view body, const Lexicons& lex);

/// 0.39 * words/sentences + 11.8 * syllables/words - 15.59; 0 without words.
double flesch_kincaid_grade(std::string_view text);

// ---------------------------------------------------------------------------
// TF-IDF

class TfidfModel {
 public:
  /// Vocabulary = tokens occurring more than min_count times in the
  /// training documents, sorted.
  static TfidfModel fit(std::span<const std::vector<std::string>> docs, std::size_t min_count = 5);

  bool fitted() const { return fitted_; }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t n_docs() const { return n_docs_; }

  /// Raw-count tf times idf, L2-normalized. Throws std::logic_error if unfitted.
  std::vector<double> transform(const std::vector<std::string>& tokens) const;

 private:
  bool fitted_ = false;
  std::size_t n_docs_ = 0;
  std::vector<std::string> vocab_;
  std::vector<double> idf_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Dense token vectors

class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::string source);

  void add(const std::string& token, std::span<const double> vec);
  std::optional<std::span<const double>> find(const std::string& token) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source() const { return source_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::size_t dim_;
  std::string source_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Header "<count> <dim>", then "token v1 ... v_dim" per line.
EmbeddingTable read_embeddings(std::istream& in, std::string source);
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

/// Mean of the table vectors of the first max_tokens tokens (tokens absent
/// from the table are skipped), then L2-normalized. Nothing when no token
/// in the prefix is in the table.
std::optional<std::vector<double>> embed_doc(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                                             std::size_t max_tokens);

struct WordFreqs {
  std::unordered_map<std::string, double> prob;
};
WordFreqs estimate_word_freqs(std::span<const std::vector<std::string>> docs);

/// Smooth-inverse-frequency weighted mean, weights a / (a + p(w)), without
/// common-component removal.
std::optional<std::vector<double>> sif_embed(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                                             const WordFreqs& freqs, double a = 1e-3);

/// SIF pooling with the first singular direction of the training vectors
/// removed.
class SifModel {
 public:
  static SifModel fit(std::span<const std::vector<std::string>> train_docs, const EmbeddingTable& table,
                      double a = 1e-3);
  std::optional<std::vector<double>> transform(const std::vector<std::string>& tokens,
                                               const EmbeddingTable& table) const;
  const std::vector<double>& common_component() const { return component_; }
  const WordFreqs& freqs() const { return freqs_; }
  double a() const { return a_; }

 private:
  WordFreqs freqs_;
  double a_ = 1e-3;
  std::vector<double> component_;
};

/// Comment vectors computed from comment text through a token table.
class TableCommentVectors final : public CommentVectorSource {
 public:
  TableCommentVectors(std::shared_ptr<const EmbeddingTable> table, std::size_t max_tokens);
  std::optional<std::vector<double>> vector_for(const Comment& c) const override;
  std::size_t dim() const override { return table_->dim(); }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::size_t max_tokens_;
};

/// Precomputed per-document vectors from CSV rows "id,v1,...,v_dim".
class DocumentVectors final : public CommentVectorSource {
 public:
  explicit DocumentVectors(std::size_t dim) : dim_(dim) {}
  void add(std::string id, std::vector<double> v);
  std::optional<std::vector<double>> find(const std::string& id) const;
  std::optional<std::vector<double>> vector_for(const Comment& c) const override { return find(c.id); }
  std::size_t dim() const override { return dim_; }
  std::size_t size() const { return vecs_.size(); }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vecs_;
};

DocumentVectors read_document_vectors(std::istream& in);
DocumentVectors load_document_vectors(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PCA

struct PcaProjection {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // d_out x d, rows are unit principal directions
  Eigen::VectorXd eigenvalues;  // d_out leading covariance eigenvalues, descending
};

/// Rows of `train` are observations. Principal directions are signed so the
/// largest-magnitude coordinate is positive. Throws std::invalid_argument if
/// d_out exceeds the feature count or fewer than two rows are given.
PcaProjection pca_fit(const Eigen::MatrixXd& train, std::size_t d_out);
Eigen::VectorXd pca_apply(const PcaProjection& proj, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Post metadata

struct CalendarParts {
  int year = 0;
  unsigned month = 0;    // 1..12
  unsigned weekday = 0;  // 0 = Monday .. 6 = Sunday
  unsigned hour = 0;     // 0..23
};
CalendarParts utc_calendar(Timestamp t);

/// One-hot year (training range), month, day-of-week and hour-of-day blocks.
/// Years outside the training range leave the year block empty.
class TimeEncoder {
 public:
  static TimeEncoder fit(std::span<const Timestamp> train);
  std::vector<double> transform(Timestamp t) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return static_cast<std::size_t>(max_year_ - min_year_ + 1) + 12 + 7 + 24; }
  int min_year() const { return min_year_; }
  int max_year() const { return max_year_; }

 private:
  int min_year_ = 0;
  int max_year_ = -1;
};

/// Indicator per author with at least min_count training posts.
class AuthorEncoder {
 public:
  static AuthorEncoder fit(std::span<const std::optional<std::string>> train_authors, std::size_t min_count = 3);
  std::vector<double> transform(const std::optional<std::string>& author) const;
  const std::vector<std::string>& authors() const { return authors_; }
  std::size_t size() const { return authors_.size(); }

 private:
  std::vector<std::string> authors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Lexical contrast

struct NgramScore {
  std::string ngram;
  double count_a = 0;
  double count_b = 0;
  double delta = 0;  // log-odds difference
  double z = 0;
};

/// Log-odds ratio with an informative Dirichlet prior (prior proportional to
/// pooled counts, total mass alpha0), z-scored. Sorted by z descending.
std::vector<NgramScore> fightin_words(std::span<const std::string> corpus_a, std::span<const std::string> corpus_b,
                                      int ngram_max = 3, double alpha0 = 500.0);

}  // namespace contro
