#include "lsd/token_space.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lsd {

Alphabet::Alphabet(std::string chars, char space_char)
    : chars_(std::move(chars)), space_char_(space_char) {
  if (chars_.empty()) {
    throw InvalidConfigError("alphabet must contain at least one symbol");
  }
  std::unordered_set<char> seen;
  for (char c : chars_) {
    if (!seen.insert(c).second) {
      throw InvalidConfigError(std::string("duplicate alphabet symbol '") + c + "'");
    }
  }
  auto pos = chars_.find(space_char_);
  if (pos == std::string::npos) {
    throw InvalidConfigError("space symbol must be a member of the alphabet");
  }
  space_id_ = pos;
}

bool Alphabet::contains(char c) const { return chars_.find(c) != std::string::npos; }

Alphabet Alphabet::lowercase() { return Alphabet("abcdefghijklmnopqrstuvwxyz ", ' '); }

namespace {
constexpr const char* kEosEscape = "\\e";
}

Vocabulary::Vocabulary(const Alphabet& alphabet, const std::vector<std::string>& texts,
                       std::vector<std::uint64_t> counts)
    : alphabet_(alphabet) {
  if (counts.empty()) {
    counts.assign(texts.size(), 0);
  }
  if (counts.size() != texts.size()) {
    throw InvalidInputError("vocabulary counts do not match token list");
  }
  counts_ = std::move(counts);

  trie_.push_back(TrieNode{std::vector<std::int32_t>(alphabet_.chars().size(), -1), -1});

  std::unordered_map<std::string, TokenId> by_text;
  bool saw_eos = false;
  singleton_ids_.assign(alphabet_.chars().size(), 0);
  std::vector<bool> have_singleton(alphabet_.chars().size(), false);

  for (std::size_t i = 0; i < texts.size(); ++i) {
    const TokenId id = static_cast<TokenId>(i);
    auto [text, is_eos] = unescape_text(texts[i]);
    if (is_eos) {
      if (saw_eos) {
        throw InvalidInputError("duplicate end-of-sequence token");
      }
      saw_eos = true;
      eos_id_ = id;
      tokens_.push_back(Token{id, kEosEscape, true});
      continue;
    }
    if (text.empty()) {
      throw InvalidInputError("empty token text at line " + std::to_string(i + 1));
    }
    if (text.find(alphabet_.space_char()) != std::string::npos && text.size() != 1) {
      throw InvalidInputError("token \"" + escape_text(text, false) +
                              "\" contains the space symbol but is not the space singleton");
    }
    for (char c : text) {
      if (!alphabet_.contains(c)) {
        throw InvalidInputError("token \"" + escape_text(text, false) +
                                "\" uses a symbol outside the alphabet");
      }
    }
    if (!by_text.emplace(text, id).second) {
      throw InvalidInputError("duplicate token text \"" + escape_text(text, false) + "\"");
    }
    if (text.size() == 1) {
      const std::size_t ci = char_index(text[0]);
      singleton_ids_[ci] = id;
      have_singleton[ci] = true;
      if (text[0] == alphabet_.space_char()) {
        space_id_ = id;
      }
    }
    n_max_ = std::max(n_max_, text.size());
    tokens_.push_back(Token{id, text, false});
    trie_insert(text, id);
  }

  if (!saw_eos) {
    throw InvalidInputError("vocabulary lacks the end-of-sequence token");
  }
  for (std::size_t ci = 0; ci < have_singleton.size(); ++ci) {
    if (!have_singleton[ci]) {
      throw InvalidInputError(std::string("vocabulary lacks the singleton for '") +
                              alphabet_.chars()[ci] + "'");
    }
  }
}

std::size_t Vocabulary::char_index(char c) const {
  auto pos = alphabet_.chars().find(c);
  if (pos == std::string::npos) {
    throw InvalidInputError(std::string("symbol '") + c + "' is outside the alphabet");
  }
  return pos;
}

void Vocabulary::trie_insert(const std::string& text, TokenId id) {
  std::size_t node = 0;
  for (char c : text) {
    const std::size_t ci = char_index(c);
    if (trie_[node].children[ci] < 0) {
      trie_[node].children[ci] = static_cast<std::int32_t>(trie_.size());
      trie_.push_back(TrieNode{std::vector<std::int32_t>(alphabet_.chars().size(), -1), -1});
    }
    node = static_cast<std::size_t>(trie_[node].children[ci]);
  }
  trie_[node].token = static_cast<std::int32_t>(id);
}

const Token& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw InvalidInputError("unknown token id " + std::to_string(id));
  }
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(const std::string& text) const {
  std::size_t node = 0;
  for (char c : text) {
    auto pos = alphabet_.chars().find(c);
    if (pos == std::string::npos) return std::nullopt;
    const std::int32_t next = trie_[node].children[pos];
    if (next < 0) return std::nullopt;
    node = static_cast<std::size_t>(next);
  }
  if (trie_[node].token < 0) return std::nullopt;
  return static_cast<TokenId>(trie_[node].token);
}

TokenId Vocabulary::singleton(char c) const { return singleton_ids_[char_index(c)]; }

std::vector<TokenId> Vocabulary::valid_extensions(const std::string& y, std::size_t pos) const {
  if (pos > y.size()) {
    throw InvalidInputError("position " + std::to_string(pos) + " exceeds target length " +
                            std::to_string(y.size()));
  }
  if (pos == y.size()) {
    return {eos_id_};
  }
  std::vector<TokenId> out;
  std::size_t node = 0;
  for (std::size_t i = pos; i < y.size(); ++i) {
    const std::int32_t next = trie_[node].children[char_index(y[i])];
    if (next < 0) break;
    node = static_cast<std::size_t>(next);
    if (trie_[node].token >= 0) {
      out.push_back(static_cast<TokenId>(trie_[node].token));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Decomposition Vocabulary::max_ext(const std::string& y) const {
  Decomposition z;
  std::size_t pos = 0;
  while (pos < y.size()) {
    std::size_t node = 0;
    std::int32_t best = -1;
    std::size_t best_len = 0;
    for (std::size_t i = pos; i < y.size(); ++i) {
      const std::int32_t next = trie_[node].children[char_index(y[i])];
      if (next < 0) break;
      node = static_cast<std::size_t>(next);
      if (trie_[node].token >= 0) {
        best = trie_[node].token;
        best_len = i - pos + 1;
      }
    }
    if (best < 0) {
      throw InvalidInputError(std::string("no token matches target at symbol '") + y[pos] + "'");
    }
    z.push_back(static_cast<TokenId>(best));
    pos += best_len;
  }
  z.push_back(eos_id_);
  return z;
}

std::string Vocabulary::collapse(const Decomposition& z) const {
  std::string y;
  for (TokenId id : z) {
    const Token& t = token(id);
    if (!t.is_eos) {
      y += t.text;
    }
  }
  return y;
}

bool Vocabulary::is_valid_decomposition(const Decomposition& z, const std::string& y) const {
  return collapse(z) == y;
}

std::string Vocabulary::join_texts(const Decomposition& z, const std::string& sep) const {
  std::string out;
  bool first = true;
  for (TokenId id : z) {
    const Token& t = token(id);
    if (t.is_eos) continue;
    if (!first) out += sep;
    out += t.text;
    first = false;
  }
  return out;
}

std::string Vocabulary::escape_text(const std::string& text, bool is_eos) {
  if (is_eos) return kEosEscape;
  std::string out;
  for (char c : text) {
    if (c == ' ') {
      out += "\\s";
    } else if (c == '\\') {
      out += "\\\\";
    } else {
      out += c;
    }
  }
  return out;
}

std::pair<std::string, bool> Vocabulary::unescape_text(const std::string& escaped) {
  if (escaped == kEosEscape) return {"", true};
  std::string out;
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] == '\\') {
      if (i + 1 >= escaped.size()) {
        throw InvalidInputError("dangling escape in token \"" + escaped + "\"");
      }
      const char n = escaped[++i];
      if (n == 's') {
        out += ' ';
      } else if (n == '\\') {
        out += '\\';
      } else {
        throw InvalidInputError(std::string("unknown escape \\") + n + " in token");
      }
    } else {
      out += escaped[i];
    }
  }
  return {out, false};
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open vocabulary file for writing: " + path);
  }
  for (const Token& t : tokens_) {
    out << escape_text(t.text, t.is_eos) << '\t' << counts_[t.id] << '\n';
  }
  if (!out) {
    throw IoError("failed writing vocabulary file: " + path);
  }
}

Vocabulary Vocabulary::load(const std::string& path, const Alphabet& alphabet) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open vocabulary file: " + path);
  }
  std::vector<std::string> texts;
  std::vector<std::uint64_t> counts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InvalidInputError("vocabulary line lacks a tab: \"" + line + "\"");
    }
    texts.push_back(line.substr(0, tab));
    counts.push_back(std::stoull(line.substr(tab + 1)));
  }
  return Vocabulary(alphabet, texts, std::move(counts));
}

Vocabulary make_vocabulary(const Alphabet& alphabet,
                           const std::vector<std::string>& extra_pieces) {
  std::vector<std::string> texts;
  for (char c : alphabet.chars()) {
    texts.push_back(Vocabulary::escape_text(std::string(1, c), false));
  }
  texts.emplace_back("\\e");
  for (const std::string& piece : extra_pieces) {
    texts.push_back(Vocabulary::escape_text(piece, false));
  }
  return Vocabulary(alphabet, texts);
}

}  // namespace lsd
