#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "contro/postfeat.hpp"
#include "contro/text.hpp"

namespace contro {

CalendarParts utc_calendar(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const sys_days day = floor<days>(tp);
  const year_month_day ymd{day};
  const weekday wd{day};
  const auto since_midnight = duration_cast<hours>(tp - day);
  return CalendarParts{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       wd.iso_encoding() - 1, static_cast<unsigned>(since_midnight.count())};
}

TimeEncoder TimeEncoder::fit(std::span<const Timestamp> train) {
  if (train.empty()) throw std::invalid_argument("TimeEncoder::fit: no timestamps");
  TimeEncoder enc;
  enc.min_year_ = utc_calendar(train[0]).year;
  enc.max_year_ = enc.min_year_;
  for (auto t : train) {
    const int y = utc_calendar(t).year;
    enc.min_year_ = std::min(enc.min_year_, y);
    enc.max_year_ = std::max(enc.max_year_, y);
  }
  return enc;
}

std::vector<double> TimeEncoder::transform(Timestamp t) const {
  if (max_year_ < min_year_) throw std::logic_error("TimeEncoder::transform called before fit");
  std::vector<double> v(size(), 0.0);
  const auto parts = utc_calendar(t);
  const auto n_years = static_cast<std::size_t>(max_year_ - min_year_ + 1);
  if (parts.year >= min_year_ && parts.year <= max_year_) v[static_cast<std::size_t>(parts.year - min_year_)] = 1.0;
  v[n_years + parts.month - 1] = 1.0;
  v[n_years + 12 + parts.weekday] = 1.0;
  v[n_years + 12 + 7 + parts.hour] = 1.0;
  return v;
}

std::vector<std::string> TimeEncoder::names() const {
  std::vector<std::string> n;
  char buf[32];
  for (int y = min_year_; y <= max_year_; ++y) n.push_back("time_year_" + std::to_string(y));
  for (int m = 1; m <= 12; ++m) {
    std::snprintf(buf, sizeof buf, "time_month_%02d", m);
    n.emplace_back(buf);
  }
  for (const char* d : {"mon", "tue", "wed", "thu", "fri", "sat", "sun"}) n.push_back(std::string("time_dow_") + d);
  for (int h = 0; h < 24; ++h) {
    std::snprintf(buf, sizeof buf, "time_hour_%02d", h);
    n.emplace_back(buf);
  }
  return n;
}

AuthorEncoder AuthorEncoder::fit(std::span<const std::optional<std::string>> train_authors, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& a : train_authors)
    if (a) ++counts[*a];
  AuthorEncoder enc;
  for (const auto& [name, c] : counts)
    if (c >= min_count) enc.authors_.push_back(name);
  std::sort(enc.authors_.begin(), enc.authors_.end());
  for (std::size_t i = 0; i < enc.authors_.size(); ++i) enc.index_.emplace(enc.authors_[i], i);
  return enc;
}

std::vector<double> AuthorEncoder::transform(const std::optional<std::string>& author) const {
  std::vector<double> v(authors_.size(), 0.0);
  if (author)
    if (auto it = index_.find(*author); it != index_.end()) v[it->second] = 1.0;
  return v;
}

std::vector<NgramScore> fightin_words(std::span<const std::string> corpus_a, std::span<const std::string> corpus_b,
                                      int ngram_max, double alpha0) {
  if (!(alpha0 > 0.0)) throw std::invalid_argument("fightin_words: alpha0 must be positive");
  if (ngram_max < 1) throw std::invalid_argument("fightin_words: ngram_max must be >= 1");
  if (corpus_a.empty() || corpus_b.empty()) throw std::invalid_argument("fightin_words: empty corpus");

  std::unordered_map<std::string, std::pair<double, double>> counts;
  double n_a = 0, n_b = 0;
  for (const auto& doc : corpus_a)
    for (auto& g : text::ngrams(text::tokenize(doc), ngram_max)) {
      counts[g].first += 1;
      n_a += 1;
    }
  for (const auto& doc : corpus_b)
    for (auto& g : text::ngrams(text::tokenize(doc), ngram_max)) {
      counts[g].second += 1;
      n_b += 1;
    }
  if (n_a == 0 || n_b == 0) throw std::invalid_argument("fightin_words: corpus without tokens");

  const double pooled = n_a + n_b;
  std::vector<NgramScore> out;
  out.reserve(counts.size());
  for (const auto& [g, c] : counts) {
    const double alpha = alpha0 * (c.first + c.second) / pooled;
    const double ya = c.first + alpha, yb = c.second + alpha;
    const double delta = std::log(ya / (n_a + alpha0 - ya)) - std::log(yb / (n_b + alpha0 - yb));
    const double var = 1.0 / ya + 1.0 / yb;
    out.push_back({g, c.first, c.second, delta, delta / std::sqrt(var)});
  }
  std::sort(out.begin(), out.end(), [](const NgramScore& a, const NgramScore& b) {
    return a.z != b.z ? a.z > b.z : a.ngram < b.ngram;
  });
  return out;
}

}  // namespace contro
