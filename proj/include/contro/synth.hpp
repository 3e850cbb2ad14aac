#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "contro/corpus.hpp"
#include "contro/postfeat.hpp"

namespace contro {

/// Generator parameters for one ground-truth class.
struct ClassParams {
  // true upvote ratio ~ lo + (hi - lo) * Beta(alpha, beta)
  double ratio_alpha = 2.0;
  double ratio_beta = 2.0;
  double ratio_lo = 0.5;
  double ratio_hi = 1.0;
  // reply growth after the signal onset
  double arrival_rate = 0.5;       // comments per minute
  double depth_bias = 0.0;         // parent weight factor exp(depth_bias * depth)
  double recency_minutes = 30.0;   // parent weight factor exp(-age / recency_minutes)
  double mean_comments = 80.0;     // eventual comment count scale
  double marker_rate = 0.1;        // share of tokens drawn from the class marker pool
};

struct SynthConfig {
  std::size_t n_posts = 1000;
  std::uint64_t seed = 1;
  std::string community = "synth";
  double p_controversial = 0.5;
  ClassParams controversial;
  ClassParams non_controversial;
  // growth before signal_onset_minutes is shared by both classes
  double onset_arrival_rate = 0.5;
  double onset_depth_bias = 0.0;
  double onset_recency_minutes = 30.0;
  double signal_onset_minutes = 0.0;
  double comment_spread = 0.4;  // log-normal sigma of the eventual comment count
  double fuzz_amplitude = 0.025;
  int n_queries = 10;
  double score_noise = 3.0;
  std::size_t vocab_size = 400;
  std::size_t n_markers = 40;  // marker tokens per class
  std::size_t title_tokens = 10;
  std::size_t body_tokens = 40;
  std::size_t comment_tokens = 15;
  double deleted_body_prob = 0.05;
  std::size_t n_authors = 300;
  Timestamp start = 1325376000;  // 2012-01-01
  Timestamp end = 1388534400;    // 2014-01-01
  std::size_t embedding_dim = 32;

  /// Defaults with a clear structural and textual class difference.
  static SynthConfig planted();
  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthTruth {
  std::string post_id;
  bool controversial = false;
  double true_ratio = 0.0;
};

struct SynthCorpus {
  std::vector<Post> posts;
  std::vector<Comment> comments;
  std::vector<SynthTruth> truth;
};

/// Byte-identical output for equal configs. Each post is generated from its
/// own seed derived from (seed, post index).
SynthCorpus generate_corpus(const SynthConfig& cfg);

/// n_queries draws of true_ratio + U(-amplitude, amplitude), clipped to [0,1].
std::vector<double> fuzz_votes(double true_ratio, int n_queries, double amplitude, std::uint64_t seed);

/// Every token the config can emit, each with a vector derived from
/// (seed, token) alone, so communities built from the same seed agree on
/// shared tokens.
EmbeddingTable synth_embeddings(const SynthConfig& cfg);
std::vector<std::string> synth_vocabulary(const SynthConfig& cfg);

void write_posts_jsonl(std::ostream& out, const std::vector<Post>& posts);
void write_comments_jsonl(std::ostream& out, const std::vector<Comment>& comments);
/// post_id,class,true_ratio
void write_truth_csv(std::ostream& out, const std::vector<SynthTruth>& truth);

}  // namespace contro
