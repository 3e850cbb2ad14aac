#include "contro/text.hpp"

#include <cctype>

namespace contro::text {

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c == '\'' || c >= 0x80;
}

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  // strip apostrophes hanging off either end ('quoted' -> quoted)
  std::vector<std::string> cleaned;
  cleaned.reserve(out.size());
  for (auto& t : out) {
    std::size_t b = 0, e = t.size();
    while (b < e && t[b] == '\'') ++b;
    while (e > b && t[e - 1] == '\'') --e;
    if (e > b) cleaned.emplace_back(t.substr(b, e - b));
  }
  return cleaned;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n_max) {
  std::vector<std::string> out;
  for (int n = 1; n <= n_max; ++n) {
    if (tokens.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (int k = 1; k < n; ++k) {
        g.push_back(' ');
        g += tokens[i + k];
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::size_t count_sentences(std::string_view s) {
  std::size_t n = 0;
  bool word_since_break = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      if (word_since_break) ++n;
      word_since_break = false;
      while (i + 1 < s.size() && (s[i + 1] == '.' || s[i + 1] == '!' || s[i + 1] == '?')) ++i;
    } else if (is_word_byte(static_cast<unsigned char>(c))) {
      word_since_break = true;
    }
  }
  if (word_since_break) ++n;
  return n;
}

std::size_t count_syllables(std::string_view word) {
  std::string w;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (w.empty()) return word.empty() ? 0 : 1;
  std::size_t groups = 0;
  bool in_group = false;
  for (char c : w) {
    bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (w.size() > 2 && w.back() == 'e' && !is_vowel(w[w.size() - 2]) && groups > 1) --groups;
  return groups == 0 ? 1 : groups;
}

}  // namespace contro::text
