#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace contro::text {

/// Lowercased word tokens: maximal runs of letters, digits, apostrophes and
/// non-ASCII bytes. Punctuation and whitespace separate tokens.
std::vector<std::string> tokenize(std::string_view s);

/// Word n-grams (joined by a single space) for n in [1, n_max].
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n_max);

/// Sentence count: runs of '.', '!' or '?' end a sentence; trailing text
/// containing a word counts as one more sentence.
std::size_t count_sentences(std::string_view s);

/// Contiguous vowel groups (a e i o u y), minus a silent trailing 'e',
/// never less than one for a nonempty word.
std::size_t count_syllables(std::string_view word);

}  // namespace contro::text
