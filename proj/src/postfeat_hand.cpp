#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>

#include "contro/error.hpp"
#include "contro/postfeat.hpp"
#include "contro/text.hpp"

namespace contro {

namespace fs = std::filesystem;

Lexicons Lexicons::pronouns_only() {
  Lexicons lex;
  lex.first_person = {"i", "me", "my", "mine", "we", "us", "our", "ours"};
  lex.second_person = {"you", "your", "yours"};
  return lex;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Lexicons load_lexicons(const fs::path& dir) {
  Lexicons lex = Lexicons::pronouns_only();
  if (auto p = dir / "sentiment.txt"; fs::exists(p)) {
    std::ifstream in(p);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find_first_of("\t ");
      if (tab == std::string::npos) throw DataError(p.string() + ":" + std::to_string(lineno) + ": expected word and weight");
      auto word = line.substr(0, tab);
      auto rest = trim(line.substr(tab + 1));
      double w = 0;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), w);
      if (ec != std::errc() || ptr != rest.data() + rest.size())
        throw DataError(p.string() + ":" + std::to_string(lineno) + ": bad weight");
      std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
      lex.sentiment[word] = w;
    }
  }
  if (auto d = dir / "wordlists"; fs::is_directory(d)) {
    for (const auto& entry : fs::directory_iterator(d)) {
      if (entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path());
      std::unordered_set<std::string> words;
      std::string line;
      while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) { return std::tolower(c); });
        words.insert(line);
      }
      lex.wordlists.emplace(entry.path().stem().string(), std::move(words));
    }
  }
  return lex;
}

Lexicons default_lexicons() { return load_lexicons(CONTRO_DATA_DIR); }

std::vector<double> HandFeatures::to_vector() const {
  std::vector<double> v;
  for (const auto* f : {&title, &body}) {
    v.insert(v.end(), {f->length, f->type_token_ratio, f->rate_first_person, f->rate_second_person,
                       f->rate_question_marks, f->rate_capitalized_chars, f->sentiment});
  }
  v.insert(v.end(), {n_links, n_reddit_links, n_imgur_links, n_sentences, readability, rate_italics, rate_bold,
                     has_list});
  v.insert(v.end(), wordlist_rates.begin(), wordlist_rates.end());
  return v;
}

std::vector<std::string> hand_feature_names(const Lexicons& lex) {
  std::vector<std::string> names;
  for (const char* field : {"title", "body"}) {
    for (const char* f : {"length", "type_token_ratio", "rate_first_person", "rate_second_person",
                          "rate_question_marks", "rate_capitalized_chars", "sentiment"})
      names.push_back(std::string("hand_") + field + "_" + f);
  }
  for (const char* f : {"n_links", "n_reddit_links", "n_imgur_links", "n_sentences", "readability", "rate_italics",
                        "rate_bold", "has_list"})
    names.push_back(std::string("hand_") + f);
  for (const auto& [cat, _] : lex.wordlists) names.push_back("hand_wordlist_" + cat);
  return names;
}

namespace {

FieldFeatures field_features(std::string_view s, const std::vector<std::string>& tokens, const Lexicons& lex) {
  FieldFeatures f;
  f.length = static_cast<double>(tokens.size());
  if (!tokens.empty()) {
    std::unordered_set<std::string_view> types(tokens.begin(), tokens.end());
    f.type_token_ratio = static_cast<double>(types.size()) / f.length;
    double fp = 0, sp = 0, hits = 0, polarity = 0;
    for (const auto& t : tokens) {
      fp += lex.first_person.count(t);
      sp += lex.second_person.count(t);
      if (auto it = lex.sentiment.find(t); it != lex.sentiment.end()) {
        hits += 1;
        polarity += it->second;
      }
    }
    f.rate_first_person = fp / f.length;
    f.rate_second_person = sp / f.length;
    f.sentiment = hits > 0 ? polarity / hits : 0.0;
  }
  if (!s.empty()) {
    const auto chars = static_cast<double>(s.size());
    f.rate_question_marks = static_cast<double>(std::count(s.begin(), s.end(), '?')) / chars;
    f.rate_capitalized_chars =
        static_cast<double>(std::count_if(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c); })) /
        chars;
  }
  return f;
}

bool line_is_list_item(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= line.size()) return false;
  if (line[i] == '-' || line[i] == '*' || line[i] == '+') {
    return i + 1 < line.size() && line[i + 1] == ' ' && line.find_first_not_of(" \t", i + 1) != std::string_view::npos;
  }
  std::size_t j = i;
  while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
  return j > i && j + 1 < line.size() && (line[j] == '.' || line[j] == ')') && line[j + 1] == ' ';
}

}  // namespace

double flesch_kincaid_grade(std::string_view s) {
  auto words = text::tokenize(s);
  if (words.empty()) return 0.0;
  const auto sentences = static_cast<double>(std::max<std::size_t>(1, text::count_sentences(s)));
  double syllables = 0;
  for (const auto& w : words) syllables += static_cast<double>(text::count_syllables(w));
  const auto n = static_cast<double>(words.size());
  return 0.39 * (n / sentences) + 11.8 * (syllables / n) - 15.59;
}

HandFeatures hand_features(std::string_view title, std::string_view body, const Lexicons& lex) {
  static const std::regex url_re(R"(https?://[^\s)\]>]+)", std::regex::icase | std::regex::optimize);
  static const std::regex bold_re(R"((\*\*|__)(?=\S)([^\n]*?\S)\1)", std::regex::optimize);
  static const std::regex italic_re(R"((\*|_)(?=[^\s*_])([^*_\n]*?[^\s*_])?\1)", std::regex::optimize);

  HandFeatures h;
  const auto title_tokens = text::tokenize(title);
  const auto body_tokens = text::tokenize(body);
  h.title = field_features(title, title_tokens, lex);
  h.body = field_features(body, body_tokens, lex);

  std::string combined(title);
  if (!combined.empty() && !body.empty()) combined += "\n";
  combined += body;
  const auto n_tokens = static_cast<double>(title_tokens.size() + body_tokens.size());

  for (auto it = std::sregex_iterator(combined.begin(), combined.end(), url_re); it != std::sregex_iterator(); ++it) {
    std::string url = it->str();
    std::transform(url.begin(), url.end(), url.begin(), [](unsigned char c) { return std::tolower(c); });
    h.n_links += 1;
    if (url.find("reddit.com") != std::string::npos || url.find("redd.it") != std::string::npos) h.n_reddit_links += 1;
    if (url.find("imgur.com") != std::string::npos) h.n_imgur_links += 1;
  }

  h.n_sentences = static_cast<double>(text::count_sentences(combined));
  h.readability = flesch_kincaid_grade(combined);

  const auto n_bold = static_cast<double>(std::distance(
      std::sregex_iterator(combined.begin(), combined.end(), bold_re), std::sregex_iterator()));
  const std::string no_bold = std::regex_replace(combined, bold_re, "$2");
  const auto n_italic = static_cast<double>(std::distance(
      std::sregex_iterator(no_bold.begin(), no_bold.end(), italic_re), std::sregex_iterator()));
  if (n_tokens > 0) {
    h.rate_bold = std::min(1.0, n_bold / n_tokens);
    h.rate_italics = std::min(1.0, n_italic / n_tokens);
  }

  std::size_t start = 0;
  while (start <= combined.size()) {
    auto end = combined.find('\n', start);
    if (end == std::string::npos) end = combined.size();
    if (line_is_list_item(std::string_view(combined).substr(start, end - start))) {
      h.has_list = 1;
      break;
    }
    start = end + 1;
  }

  h.wordlist_rates.reserve(lex.wordlists.size());
  for (const auto& [cat, words] : lex.wordlists) {
    double hits = 0;
    for (const auto* toks : {&title_tokens, &body_tokens})
      for (const auto& t : *toks) hits += words.count(t);
    h.wordlist_rates.push_back(n_tokens > 0 ? hits / n_tokens : 0.0);
  }
  return h;
}

}  // namespace contro
