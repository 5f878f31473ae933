#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsd/token_space.hpp"

namespace lsd {

// n-gram text -> occurrence count. std::map keeps iteration lexicographic,
// which the deterministic tie-break relies on.
using NgramCounts = std::map<std::string, std::uint64_t>;

// Sliding-window counts of all character n-grams with 1 <= n <= n_max.
// Windows never cross the space symbol; space itself is counted as a unigram.
NgramCounts count_ngrams(const std::vector<std::string>& lines, std::size_t n_max,
                         const Alphabet& alphabet);

struct BuildVocabResult {
  Vocabulary vocabulary;
  // True when the corpus supplied fewer distinct n-grams than requested and
  // the vocabulary came out smaller than `size`.
  bool truncated = false;
};

// Singletons of the alphabet + EOS + the top (size - |alphabet| - 1)
// multi-character n-grams by count, ties broken lexicographically.
BuildVocabResult build_vocab(const NgramCounts& counts, const Alphabet& alphabet,
                             std::size_t n_max, std::size_t size);

}  // namespace lsd
