#include "contro/labeler.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "contro/error.hpp"

namespace contro {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::controversial: return "controversial";
    case Label::non_controversial: return "non_controversial";
    case Label::discarded: return "discarded";
  }
  return "?";
}

std::string_view to_string(DiscardReason r) {
  switch (r) {
    case DiscardReason::too_few_comments: return "too_few_comments";
    case DiscardReason::unstable_estimate: return "unstable_estimate";
    case DiscardReason::degenerate_votes: return "degenerate_votes";
    case DiscardReason::below_half: return "below_half";
    case DiscardReason::middle_band: return "middle_band";
  }
  return "?";
}

double estimate_pupv(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("estimate_pupv: no samples");
  double sum = 0.0;
  for (double s : samples) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("estimate_pupv: sample outside [0,1]");
    sum += s;
  }
  return sum / static_cast<double>(samples.size());
}

namespace {

template <typename T>
bool all_equal(std::span<const T> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

FilterResult filter_posts(std::span<const Post> posts, const FilterRules& rules) {
  FilterResult out;
  for (const auto& p : posts) {
    if (p.pupv_samples.empty() || p.score_samples.empty())
      throw std::invalid_argument("filter_posts: post " + p.id + " lacks vote observations");
    const double est = estimate_pupv(p.pupv_samples);
    std::optional<DiscardReason> reason;
    auto [lo, hi] = std::minmax_element(p.pupv_samples.begin(), p.pupv_samples.end());
    if (p.num_comments_eventual < rules.min_comments) {
      reason = DiscardReason::too_few_comments;
    } else if (*hi - *lo > rules.max_pupv_range) {
      reason = DiscardReason::unstable_estimate;
    } else if (all_equal<double>(p.pupv_samples) && all_equal<std::int64_t>(p.score_samples)) {
      reason = DiscardReason::degenerate_votes;
    } else if (est < rules.min_pupv) {
      reason = DiscardReason::below_half;
    }
    if (reason) out.discarded.push_back({p.id, est, Label::discarded, reason});
    else out.survivors.push_back(p);
  }
  return out;
}

std::vector<LabelRecord> assign_labels(std::span<const Post> survivors) {
  const std::size_t n = survivors.size();
  if (n < 8) throw DataError("assign_labels: need at least 8 surviving posts, got " + std::to_string(n));
  std::vector<LabelRecord> recs;
  recs.reserve(n);
  for (const auto& p : survivors) recs.push_back({p.id, estimate_pupv(p.pupv_samples), Label::discarded, std::nullopt});
  std::sort(recs.begin(), recs.end(), [](const LabelRecord& a, const LabelRecord& b) {
    return a.pupv_estimate != b.pupv_estimate ? a.pupv_estimate < b.pupv_estimate : a.post_id < b.post_id;
  });
  const std::size_t q = n / 4;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < q) {
      recs[i].label = Label::controversial;
    } else if (i >= n - q) {
      recs[i].label = Label::non_controversial;
    } else {
      recs[i].discard_reason = DiscardReason::middle_band;
    }
  }
  return recs;
}

std::vector<LabelRecord> label_posts(std::span<const Post> posts, const FilterRules& rules) {
  auto filtered = filter_posts(posts, rules);
  std::unordered_map<std::string, LabelRecord> by_id;
  for (auto& r : filtered.discarded) by_id.emplace(r.post_id, std::move(r));
  for (auto& r : assign_labels(filtered.survivors)) by_id.emplace(r.post_id, std::move(r));
  std::vector<LabelRecord> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(by_id.at(p.id));
  return out;
}

void write_labels_csv(std::ostream& out, std::span<const LabelRecord> records) {
  out << "post_id,pupv_estimate,label,discard_reason\n";
  char buf[32];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.6f", r.pupv_estimate);
    out << r.post_id << ',' << buf << ',' << to_string(r.label) << ',';
    if (r.discard_reason) out << to_string(*r.discard_reason);
    out << '\n';
  }
}

namespace {

ClassScores class_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScores s;
  s.support = tp + fn;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace

ValidationResult score_agreement(const std::vector<bool>& predicted, const std::vector<bool>& reference) {
  if (predicted.size() != reference.size()) throw std::invalid_argument("score_agreement: size mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && reference[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (reference[i]) ++fn;
    else ++tn;
  }
  ValidationResult r;
  r.scored = predicted.size();
  r.controversial = class_scores(tp, fp, fn);
  r.non_controversial = class_scores(tn, fn, fp);
  return r;
}

ValidationResult validate_against_ranking(std::span<const Post> posts,
                                          const std::unordered_set<std::string>& external_ids, int k,
                                          std::uint64_t seed, const FilterRules& rules) {
  if (k < 1 || k > 3) throw std::invalid_argument("validate_against_ranking: k must be 1, 2 or 3");
  if (external_ids.empty()) throw std::invalid_argument("validate_against_ranking: empty external id set");

  std::vector<std::size_t> listed, unlisted;
  for (std::size_t i = 0; i < posts.size(); ++i)
    (external_ids.count(posts[i].id) ? listed : unlisted).push_back(i);
  if (listed.empty()) throw DataError("validate_against_ranking: no listed post present in corpus");

  std::mt19937_64 rng(seed);
  std::shuffle(unlisted.begin(), unlisted.end(), rng);
  unlisted.resize(std::min(unlisted.size(), listed.size() * static_cast<std::size_t>(k)));

  std::vector<Post> sample;
  for (auto i : listed) sample.push_back(posts[i]);
  for (auto i : unlisted) sample.push_back(posts[i]);

  auto filtered = filter_posts(sample, rules);
  auto recs = assign_labels(filtered.survivors);
  std::vector<bool> pred, ref;
  for (const auto& r : recs) {
    if (r.label == Label::discarded) continue;
    pred.push_back(r.label == Label::controversial);
    ref.push_back(external_ids.count(r.post_id) > 0);
  }
  auto res = score_agreement(pred, ref);
  res.sampled = sample.size();
  return res;
}

std::unordered_set<std::string> read_id_list(std::istream& in) {
  std::unordered_set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    auto id = line.substr(b, e - b + 1);
    if (id.size() > 3 && id[0] == 't' && id[1] == '3' && id[2] == '_') id = id.substr(3);
    ids.insert(id);
  }
  return ids;
}

}  // namespace contro
