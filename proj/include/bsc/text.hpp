#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace bsc {

// Lowercases and splits on runs of non-alphanumeric bytes.
std::vector<std::string> tokenize(std::string_view text);

// Small built-in English stop-word list, overridable via file.
const std::unordered_set<std::string>& default_stopwords();

// One word per line; blank lines ignored.
std::unordered_set<std::string> load_stopwords(const std::string& path);

}  // namespace bsc
