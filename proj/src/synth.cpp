#include "contro/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

namespace contro {

namespace {

void check_class(const ClassParams& c, const char* name) {
  auto bad = [&](const char* what) { throw std::invalid_argument(std::string("synth ") + name + ": " + what); };
  if (!(c.ratio_alpha > 0) || !(c.ratio_beta > 0)) bad("Beta parameters must be positive");
  if (!(c.ratio_lo >= 0) || !(c.ratio_hi <= 1) || !(c.ratio_lo <= c.ratio_hi)) bad("ratio range must lie in [0,1]");
  if (!(c.arrival_rate > 0)) bad("arrival_rate must be positive");
  if (!std::isfinite(c.depth_bias)) bad("depth_bias must be finite");
  if (!(c.recency_minutes > 0)) bad("recency_minutes must be positive");
  if (!(c.mean_comments >= 0)) bad("mean_comments must be non-negative");
  if (!(c.marker_rate >= 0 && c.marker_rate <= 1)) bad("marker_rate must lie in [0,1]");
}

}  // namespace

SynthConfig SynthConfig::planted() {
  SynthConfig c;
  c.controversial.ratio_lo = 0.5;
  c.controversial.ratio_hi = 0.68;
  c.controversial.arrival_rate = 0.8;
  c.controversial.depth_bias = 1.0;
  c.controversial.recency_minutes = 20.0;
  c.controversial.marker_rate = 0.15;
  c.non_controversial.ratio_lo = 0.88;
  c.non_controversial.ratio_hi = 1.0;
  c.non_controversial.arrival_rate = 0.4;
  c.non_controversial.depth_bias = -1.0;
  c.non_controversial.recency_minutes = 40.0;
  c.non_controversial.marker_rate = 0.15;
  return c;
}

void SynthConfig::validate() const {
  check_class(controversial, "controversial");
  check_class(non_controversial, "non_controversial");
  auto bad = [](const std::string& what) { throw std::invalid_argument("synth: " + what); };
  if (!(p_controversial >= 0 && p_controversial <= 1)) bad("p_controversial must lie in [0,1]");
  if (!(onset_arrival_rate > 0) || !(onset_recency_minutes > 0) || !std::isfinite(onset_depth_bias))
    bad("invalid onset growth parameters");
  if (!(signal_onset_minutes >= 0)) bad("signal_onset_minutes must be non-negative");
  if (!(comment_spread >= 0)) bad("comment_spread must be non-negative");
  if (!(fuzz_amplitude >= 0 && fuzz_amplitude <= 1)) bad("fuzz_amplitude must lie in [0,1]");
  if (n_queries < 1) bad("n_queries must be positive");
  if (!(score_noise >= 0)) bad("score_noise must be non-negative");
  if (vocab_size == 0) bad("vocab_size must be positive");
  if (!(deleted_body_prob >= 0 && deleted_body_prob <= 1)) bad("deleted_body_prob must lie in [0,1]");
  if (n_authors == 0) bad("n_authors must be positive");
  if (end <= start || start <= 0) bad("time range must be positive and nonempty");
  if (embedding_dim == 0) bad("embedding_dim must be positive");
  if (community.empty() ||
      !std::all_of(community.begin(), community.end(), [](char ch) { return (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9'); }))
    bad("community must be a nonempty lowercase alphanumeric name");
}

namespace {

nlohmann::json class_json(const ClassParams& c) {
  return {{"ratio_alpha", c.ratio_alpha},       {"ratio_beta", c.ratio_beta},   {"ratio_lo", c.ratio_lo},
          {"ratio_hi", c.ratio_hi},             {"arrival_rate", c.arrival_rate}, {"depth_bias", c.depth_bias},
          {"recency_minutes", c.recency_minutes}, {"mean_comments", c.mean_comments}, {"marker_rate", c.marker_rate}};
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

ClassParams class_from(const nlohmann::json& j, ClassParams c) {
  take(j, "ratio_alpha", c.ratio_alpha);
  take(j, "ratio_beta", c.ratio_beta);
  take(j, "ratio_lo", c.ratio_lo);
  take(j, "ratio_hi", c.ratio_hi);
  take(j, "arrival_rate", c.arrival_rate);
  take(j, "depth_bias", c.depth_bias);
  take(j, "recency_minutes", c.recency_minutes);
  take(j, "mean_comments", c.mean_comments);
  take(j, "marker_rate", c.marker_rate);
  return c;
}

}  // namespace

nlohmann::json SynthConfig::to_json() const {
  return {{"n_posts", n_posts},
          {"seed", seed},
          {"community", community},
          {"p_controversial", p_controversial},
          {"controversial", class_json(controversial)},
          {"non_controversial", class_json(non_controversial)},
          {"onset_arrival_rate", onset_arrival_rate},
          {"onset_depth_bias", onset_depth_bias},
          {"onset_recency_minutes", onset_recency_minutes},
          {"signal_onset_minutes", signal_onset_minutes},
          {"comment_spread", comment_spread},
          {"fuzz_amplitude", fuzz_amplitude},
          {"n_queries", n_queries},
          {"score_noise", score_noise},
          {"vocab_size", vocab_size},
          {"n_markers", n_markers},
          {"title_tokens", title_tokens},
          {"body_tokens", body_tokens},
          {"comment_tokens", comment_tokens},
          {"deleted_body_prob", deleted_body_prob},
          {"n_authors", n_authors},
          {"start", start},
          {"end", end},
          {"embedding_dim", embedding_dim}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c = planted();
  take(j, "n_posts", c.n_posts);
  take(j, "seed", c.seed);
  take(j, "community", c.community);
  take(j, "p_controversial", c.p_controversial);
  if (j.contains("controversial")) c.controversial = class_from(j.at("controversial"), c.controversial);
  if (j.contains("non_controversial"))
    c.non_controversial = class_from(j.at("non_controversial"), c.non_controversial);
  take(j, "onset_arrival_rate", c.onset_arrival_rate);
  take(j, "onset_depth_bias", c.onset_depth_bias);
  take(j, "onset_recency_minutes", c.onset_recency_minutes);
  take(j, "signal_onset_minutes", c.signal_onset_minutes);
  take(j, "comment_spread", c.comment_spread);
  take(j, "fuzz_amplitude", c.fuzz_amplitude);
  take(j, "n_queries", c.n_queries);
  take(j, "score_noise", c.score_noise);
  take(j, "vocab_size", c.vocab_size);
  take(j, "n_markers", c.n_markers);
  take(j, "title_tokens", c.title_tokens);
  take(j, "body_tokens", c.body_tokens);
  take(j, "comment_tokens", c.comment_tokens);
  take(j, "deleted_body_prob", c.deleted_body_prob);
  take(j, "n_authors", c.n_authors);
  take(j, "start", c.start);
  take(j, "end", c.end);
  take(j, "embedding_dim", c.embedding_dim);
  return c;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double beta_draw(std::mt19937_64& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x + y > 0 ? x / (x + y) : 0.5;
}

std::string word(const std::string& community, char kind, std::size_t k) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%zu", kind, k);
  return community + "x" + buf;
}

// Zipf(1) over the background vocabulary
class TextSampler {
 public:
  explicit TextSampler(const SynthConfig& cfg) : cfg_(cfg) {
    std::vector<double> w(cfg.vocab_size);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / static_cast<double>(k + 1);
    zipf_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }

  std::string sample(std::mt19937_64& rng, std::size_t n, bool controversial, double marker_rate) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      if (cfg_.n_markers > 0 && uniform01(rng) < marker_rate) {
        const auto k = std::uniform_int_distribution<std::size_t>(0, cfg_.n_markers - 1)(rng);
        out += word(cfg_.community, controversial ? 'c' : 'n', k);
      } else {
        out += word(cfg_.community, 'w', zipf_(rng));
      }
    }
    return out;
  }

 private:
  const SynthConfig& cfg_;
  std::discrete_distribution<std::size_t> zipf_;
};

struct GeneratedPost {
  Post post;
  std::vector<Comment> comments;
  SynthTruth truth;
};

GeneratedPost generate_post(const SynthConfig& cfg, std::size_t index, TextSampler sampler) {
  auto rng = derived_rng(cfg.seed, 1, index);
  GeneratedPost g;
  const bool contro = uniform01(rng) < cfg.p_controversial;
  const auto& cp = contro ? cfg.controversial : cfg.non_controversial;

  char id[64];
  std::snprintf(id, sizeof id, "%sp%06zu", cfg.community.c_str(), index);
  Post& p = g.post;
  p.id = id;
  p.subreddit = cfg.community;
  const auto author_k = std::min<std::size_t>(
      cfg.n_authors - 1, static_cast<std::size_t>(std::floor(std::pow(uniform01(rng), 2.0) * static_cast<double>(cfg.n_authors))));
  p.author = "u" + std::to_string(author_k);
  p.created = cfg.start + static_cast<Timestamp>(std::floor(uniform01(rng) * static_cast<double>(cfg.end - cfg.start)));
  p.title = sampler.sample(rng, cfg.title_tokens, contro, cp.marker_rate);
  p.body = sampler.sample(rng, cfg.body_tokens, contro, cp.marker_rate);
  if (uniform01(rng) < cfg.deleted_body_prob) {
    p.body = "[deleted]";
    p.body_deleted = true;
  }

  const double ratio = cp.ratio_lo + (cp.ratio_hi - cp.ratio_lo) * beta_draw(rng, cp.ratio_alpha, cp.ratio_beta);
  g.truth = {p.id, contro, ratio};
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  const double spread = cfg.comment_spread;
  const auto n_comments = static_cast<std::size_t>(
      std::max(0.0, std::round(cp.mean_comments * std::exp(spread * z - 0.5 * spread * spread))));
  p.num_comments_eventual = static_cast<std::int64_t>(n_comments);

  p.pupv_samples = fuzz_votes(ratio, cfg.n_queries, cfg.fuzz_amplitude, rng());
  const double votes = 5.0 * static_cast<double>(n_comments) + 10.0;
  for (int q = 0; q < cfg.n_queries; ++q) {
    const double noise = std::uniform_real_distribution<double>(-cfg.score_noise, cfg.score_noise)(rng);
    p.score_samples.push_back(static_cast<std::int64_t>(std::llround(votes * (2.0 * ratio - 1.0) + noise)));
  }

  // reply tree: exponential arrivals, parent weight exp(bias * depth - age / recency)
  std::vector<double> node_time{0.0};
  std::vector<int> node_depth{0};
  std::vector<std::string> node_id{p.id};
  double now = 0.0;
  std::vector<double> weights;
  for (std::size_t k = 0; k < n_comments; ++k) {
    const bool after = now >= cfg.signal_onset_minutes;
    const double rate = after ? cp.arrival_rate : cfg.onset_arrival_rate;
    now += std::exponential_distribution<double>(rate)(rng);
    const bool signal = now >= cfg.signal_onset_minutes;
    const double bias = signal ? cp.depth_bias : cfg.onset_depth_bias;
    const double recency = signal ? cp.recency_minutes : cfg.onset_recency_minutes;
    weights.resize(node_time.size());
    double max_log = -INFINITY;
    for (std::size_t v = 0; v < node_time.size(); ++v) {
      weights[v] = bias * node_depth[v] - (now - node_time[v]) / recency;
      max_log = std::max(max_log, weights[v]);
    }
    for (auto& w : weights) w = std::exp(w - max_log);
    const auto parent = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);

    Comment c;
    char cid[80];
    std::snprintf(cid, sizeof cid, "%sc%06zu_%04zu", cfg.community.c_str(), index, k);
    c.id = cid;
    c.post_id = p.id;
    c.parent_id = node_id[parent];
    c.author = "u" + std::to_string(std::uniform_int_distribution<std::size_t>(0, cfg.n_authors - 1)(rng));
    c.created = p.created + static_cast<Timestamp>(std::floor(now * 60.0));
    c.body = sampler.sample(rng, cfg.comment_tokens, contro, cp.marker_rate);
    if (uniform01(rng) < cfg.deleted_body_prob) {
      c.body = "[deleted]";
      c.body_deleted = true;
    }
    node_time.push_back(now);
    node_depth.push_back(node_depth[parent] + 1);
    node_id.push_back(c.id);
    g.comments.push_back(std::move(c));
  }
  return g;
}

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const TextSampler sampler(cfg);
  std::vector<GeneratedPost> gen(cfg.n_posts);
  const auto n = static_cast<std::ptrdiff_t>(cfg.n_posts);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) gen[static_cast<std::size_t>(i)] = generate_post(cfg, static_cast<std::size_t>(i), sampler);

  SynthCorpus out;
  for (auto& g : gen) {
    out.posts.push_back(std::move(g.post));
    out.truth.push_back(std::move(g.truth));
    for (auto& c : g.comments) out.comments.push_back(std::move(c));
  }
  return out;
}

std::vector<double> fuzz_votes(double true_ratio, int n_queries, double amplitude, std::uint64_t seed) {
  if (!(true_ratio >= 0.0 && true_ratio <= 1.0)) throw std::invalid_argument("fuzz_votes: true_ratio outside [0,1]");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("fuzz_votes: amplitude must be non-negative");
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  for (int q = 0; q < n_queries; ++q) {
    const double u = amplitude > 0 ? std::uniform_real_distribution<double>(-amplitude, amplitude)(rng) : 0.0;
    out.push_back(std::clamp(true_ratio + u, 0.0, 1.0));
  }
  return out;
}

std::vector<std::string> synth_vocabulary(const SynthConfig& cfg) {
  std::vector<std::string> v;
  for (std::size_t k = 0; k < cfg.vocab_size; ++k) v.push_back(word(cfg.community, 'w', k));
  for (std::size_t k = 0; k < cfg.n_markers; ++k) v.push_back(word(cfg.community, 'c', k));
  for (std::size_t k = 0; k < cfg.n_markers; ++k) v.push_back(word(cfg.community, 'n', k));
  return v;
}

EmbeddingTable synth_embeddings(const SynthConfig& cfg) {
  EmbeddingTable table(cfg.embedding_dim, "synth:" + cfg.community);
  std::vector<double> vec(cfg.embedding_dim);
  for (const auto& tok : synth_vocabulary(cfg)) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : tok) h = (h ^ ch) * 1099511628211ull;
    auto rng = derived_rng(cfg.seed, 2, h);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& x : vec) x = gauss(rng);
    table.add(tok, vec);
  }
  return table;
}

void write_posts_jsonl(std::ostream& out, const std::vector<Post>& posts) {
  for (const auto& p : posts) {
    nlohmann::json j{{"id", p.id},
                     {"subreddit", p.subreddit},
                     {"author", p.author ? nlohmann::json(*p.author) : nlohmann::json("[deleted]")},
                     {"created_utc", p.created},
                     {"title", p.title},
                     {"selftext", p.body},
                     {"num_comments", p.num_comments_eventual},
                     {"upvote_ratio", p.pupv_samples},
                     {"score", p.score_samples}};
    out << j.dump() << '\n';
  }
}

void write_comments_jsonl(std::ostream& out, const std::vector<Comment>& comments) {
  for (const auto& c : comments) {
    const bool top = c.parent_id == c.post_id;
    nlohmann::json j{{"id", c.id},
                     {"link_id", "t3_" + c.post_id},
                     {"parent_id", (top ? "t3_" : "t1_") + c.parent_id},
                     {"author", c.author ? nlohmann::json(*c.author) : nlohmann::json("[deleted]")},
                     {"created_utc", c.created},
                     {"body", c.body}};
    out << j.dump() << '\n';
  }
}

void write_truth_csv(std::ostream& out, const std::vector<SynthTruth>& truth) {
  out << "post_id,class,true_ratio\n";
  char buf[32];
  for (const auto& t : truth) {
    std::snprintf(buf, sizeof buf, "%.17g", t.true_ratio);
    out << t.post_id << ',' << (t.controversial ? "controversial" : "non_controversial") << ',' << buf << '\n';
  }
}

}  // namespace contro
