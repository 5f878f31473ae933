#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsd/error.hpp"

namespace lsd {

using TokenId = std::uint32_t;

// A decomposition is a sequence of token ids. Complete decompositions (as
// produced by the enumerator, the sampler and the beam) always end with the
// end-of-sequence token; collapse() ignores it.
using Decomposition = std::vector<TokenId>;

// The base symbol set: the characters targets are written in, one of which is
// the distinguished space symbol. The end-of-sequence marker is a synthetic
// symbol appended after the characters; it never occurs inside target text.
class Alphabet {
 public:
  Alphabet(std::string chars, char space_char);

  const std::string& chars() const { return chars_; }
  char space_char() const { return space_char_; }

  // Symbol ids: 0..chars()-1 for characters, eos_symbol_id() one past them.
  std::size_t size() const { return chars_.size() + 1; }
  std::size_t eos_symbol_id() const { return chars_.size(); }
  std::size_t space_symbol_id() const { return space_id_; }

  bool contains(char c) const;

  // Default lowercase letters + space.
  static Alphabet lowercase();

 private:
  std::string chars_;
  char space_char_ = ' ';
  std::size_t space_id_ = 0;
};

struct Token {
  TokenId id = 0;
  std::string text;  // for the EOS token this is the display escape, unused by collapse
  bool is_eos = false;

  std::size_t length() const { return is_eos ? 1 : text.size(); }
};

// The token space: all singletons of the alphabet, the EOS token, and any
// multi-character pieces, indexed by a trie for prefix queries. Immutable
// after construction; queries are pure.
class Vocabulary {
 public:
  // `texts` lists token texts in id order using the file escapes \s (space)
  // and \e (end-of-sequence). Counts are optional metadata, 0 when unknown.
  Vocabulary(const Alphabet& alphabet, const std::vector<std::string>& texts,
             std::vector<std::uint64_t> counts = {});

  const Alphabet& alphabet() const { return alphabet_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t n_max() const { return n_max_; }
  TokenId eos_id() const { return eos_id_; }
  TokenId space_id() const { return space_id_; }

  const Token& token(TokenId id) const;
  const std::string& text(TokenId id) const { return token(id).text; }
  std::uint64_t count(TokenId id) const { return counts_[id]; }

  // Token whose text equals `text`, if any. EOS is not findable by text.
  std::optional<TokenId> find(const std::string& text) const;

  // Singleton token for a character.
  TokenId singleton(char c) const;

  // All tokens t with t.text == y[pos .. pos+|t|). pos == |y| yields {eos}.
  // Sorted by token id. Never empty for valid inputs over the alphabet.
  std::vector<TokenId> valid_extensions(const std::string& y, std::size_t pos) const;

  // Deterministic left-to-right greedy longest-match decomposition of y,
  // terminated with EOS.
  Decomposition max_ext(const std::string& y) const;

  // Concatenation of token texts; EOS contributes nothing.
  std::string collapse(const Decomposition& z) const;

  bool is_valid_decomposition(const Decomposition& z, const std::string& y) const;

  // Token texts joined by `sep`, EOS omitted. The space token renders as its
  // character, so a joined dump reads "...|was| |one|...".
  std::string join_texts(const Decomposition& z, const std::string& sep) const;

  // One token per line: "<text>\t<count>", space escaped as \s, EOS as \e,
  // backslash as \\. Line order defines ids.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path, const Alphabet& alphabet);

  static std::string escape_text(const std::string& text, bool is_eos);
  static std::pair<std::string, bool> unescape_text(const std::string& escaped);

 private:
  struct TrieNode {
    // child index per character, -1 when absent
    std::vector<std::int32_t> children;
    std::int32_t token = -1;
  };

  std::size_t char_index(char c) const;
  void trie_insert(const std::string& text, TokenId id);

  Alphabet alphabet_;
  std::vector<Token> tokens_;
  std::vector<std::uint64_t> counts_;
  std::vector<TrieNode> trie_;
  std::vector<TokenId> singleton_ids_;  // indexed by char_index
  TokenId eos_id_ = 0;
  TokenId space_id_ = 0;
  std::size_t n_max_ = 1;
};

// Convenience builder for tests and the CLI: alphabet singletons + EOS + the
// given extra pieces, ids in that order.
Vocabulary make_vocabulary(const Alphabet& alphabet, const std::vector<std::string>& extra_pieces);

}  // namespace lsd
