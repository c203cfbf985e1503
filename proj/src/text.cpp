#include "bsc/text.hpp"

#include <cctype>
#include <fstream>

#include "bsc/errors.hpp"

namespace bsc {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",    "an",   "the",  "and",  "or",    "but",  "if",    "then",
      "at",   "by",   "for",  "with", "about", "into", "to",    "from",
      "up",   "down", "in",   "out",  "on",    "off",  "over",  "under",
      "all",  "any",  "both", "each", "few",   "more", "most",  "some",
      "such", "no",   "nor",  "not",  "only",  "own",  "same",  "so",
      "than", "too",  "very", "can",  "will",  "just", "is",    "are",
      "was",  "were", "be",   "been", "being", "of",   "it",    "its",
      "this", "that", "these", "those", "i",   "you",  "he",    "she",
      "we",   "they", "do",   "does", "did",  "have", "has",   "had",
  };
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stop-word file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    for (auto& tok : tokenize(line)) words.insert(std::move(tok));
  }
  return words;
}

}  // namespace bsc
