#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctxaudit::text {

std::string trim(std::string_view s);
std::string lowercase(std::string_view s);
bool contains(std::string_view haystack, std::string_view needle);

// Lowercased tokens split on any non-alphanumeric byte. The default
// tokenizer for unigram canaries, keyword histograms, ROUGE, and the hashed
// embedder.
std::vector<std::string> tokenize(std::string_view s);

// Replaces every occurrence of `placeholder` in `tmpl`.
std::string substitute(std::string_view tmpl, std::string_view placeholder,
                       std::string_view value);

// True when `a` and `b` share a common substring of at least `min_len` bytes.
bool shares_substring(std::string_view a, std::string_view b, std::size_t min_len);

}  // namespace ctxaudit::text
