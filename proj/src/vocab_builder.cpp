#include "lsd/vocab_builder.hpp"

#include <algorithm>

namespace lsd {

NgramCounts count_ngrams(const std::vector<std::string>& lines, std::size_t n_max,
                         const Alphabet& alphabet) {
  if (n_max < 1) {
    throw InvalidConfigError("n_max must be at least 1");
  }
  NgramCounts counts;
  for (const std::string& line : lines) {
    for (char c : line) {
      if (!alphabet.contains(c)) {
        throw InvalidInputError(std::string("corpus symbol '") + c + "' is outside the alphabet");
      }
    }
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == alphabet.space_char()) {
        ++counts[std::string(1, line[i])];
        continue;
      }
      for (std::size_t n = 1; n <= n_max && i + n <= line.size(); ++n) {
        if (line[i + n - 1] == alphabet.space_char()) break;
        ++counts[line.substr(i, n)];
      }
    }
  }
  return counts;
}

BuildVocabResult build_vocab(const NgramCounts& counts, const Alphabet& alphabet,
                             std::size_t n_max, std::size_t size) {
  const std::size_t min_size = alphabet.chars().size() + 1;  // singletons + EOS
  if (size < min_size) {
    throw InvalidConfigError("vocabulary size " + std::to_string(size) +
                             " cannot hold all " + std::to_string(alphabet.chars().size()) +
                             " singletons plus the end-of-sequence token");
  }

  // Candidates: multi-character n-grams only; singletons are force-included.
  std::vector<std::pair<std::string, std::uint64_t>> candidates;
  for (const auto& [text, count] : counts) {
    if (text.size() >= 2 && text.size() <= n_max) {
      candidates.emplace_back(text, count);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const std::size_t budget = size - min_size;
  std::vector<std::string> texts;
  std::vector<std::uint64_t> token_counts;
  for (char c : alphabet.chars()) {
    const std::string s(1, c);
    texts.push_back(Vocabulary::escape_text(s, false));
    auto it = counts.find(s);
    token_counts.push_back(it == counts.end() ? 0 : it->second);
  }
  texts.emplace_back("\\e");
  token_counts.push_back(0);
  for (std::size_t i = 0; i < candidates.size() && i < budget; ++i) {
    texts.push_back(Vocabulary::escape_text(candidates[i].first, false));
    token_counts.push_back(candidates[i].second);
  }

  BuildVocabResult result{Vocabulary(alphabet, texts, std::move(token_counts)),
                          texts.size() < size};
  return result;
}

}  // namespace lsd
