#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "lsd/rng.hpp"
#include "lsd/token_space.hpp"

using namespace lsd;

namespace {

// The token set used throughout: {a,b,c,t,at,ca,cat} over alphabet {a,b,c,t, space}.
Vocabulary example_vocab() {
  return make_vocabulary(Alphabet("abct ", ' '), {"at", "ca", "cat"});
}

std::vector<std::string> texts_of(const Vocabulary& v, const Decomposition& z,
                                  bool strip_eos = true) {
  std::vector<std::string> out;
  for (TokenId id : z) {
    if (strip_eos && v.token(id).is_eos) continue;
    out.push_back(v.token(id).text);
  }
  return out;
}

}  // namespace

TEST_CASE("collapse concatenates token texts and ignores EOS") {
  const Vocabulary v = example_vocab();
  CHECK(v.collapse({*v.find("ca"), *v.find("t")}) == "cat");
  CHECK(v.collapse({}) == "");
  CHECK(v.collapse({*v.find("cat")}) == "cat");
  CHECK(v.collapse({*v.find("cat"), v.eos_id()}) == "cat");
  CHECK_THROWS_AS((void)v.collapse({static_cast<TokenId>(v.size())}), InvalidInputError);
}

TEST_CASE("valid_extensions matches the worked example") {
  const Vocabulary v = example_vocab();
  const auto step1 = v.valid_extensions("cat", 0);
  std::set<std::string> texts;
  for (TokenId id : step1) texts.insert(v.token(id).text);
  CHECK(texts == std::set<std::string>{"c", "ca", "cat"});

  CHECK(v.valid_extensions("cat", 3) == std::vector<TokenId>{v.eos_id()});

  const auto step2 = v.valid_extensions("cat", 1);
  texts.clear();
  for (TokenId id : step2) texts.insert(v.token(id).text);
  CHECK(texts == std::set<std::string>{"a", "at"});

  CHECK_THROWS_AS((void)v.valid_extensions("cat", 4), InvalidInputError);
}

TEST_CASE("valid_extensions equals brute-force filtering on random instances") {
  Rng rng(20240811);
  const Alphabet alphabet("abcd ", ' ');
  for (int trial = 0; trial < 60; ++trial) {
    // Random multi-char pieces over the alphabet (no spaces inside pieces).
    std::vector<std::string> pieces;
    const std::size_t n_pieces = rng.uniform_index(8);
    for (std::size_t i = 0; i < n_pieces; ++i) {
      std::string piece;
      const std::size_t len = 2 + rng.uniform_index(3);
      for (std::size_t k = 0; k < len; ++k) piece += "abcd"[rng.uniform_index(4)];
      if (std::find(pieces.begin(), pieces.end(), piece) == pieces.end()) {
        pieces.push_back(piece);
      }
    }
    const Vocabulary v = make_vocabulary(alphabet, pieces);

    std::string y;
    const std::size_t ylen = rng.uniform_index(9);
    for (std::size_t k = 0; k < ylen; ++k) y += "abcd "[rng.uniform_index(5)];

    for (std::size_t pos = 0; pos <= y.size(); ++pos) {
      std::vector<TokenId> expected;
      if (pos == y.size()) {
        expected.push_back(v.eos_id());
      } else {
        for (TokenId id = 0; id < v.size(); ++id) {
          const Token& t = v.token(id);
          if (t.is_eos) continue;
          if (y.compare(pos, t.text.size(), t.text) == 0) expected.push_back(id);
        }
      }
      CHECK(v.valid_extensions(y, pos) == expected);
    }
  }
}

TEST_CASE("max_ext picks the longest match left to right") {
  const Vocabulary v = example_vocab();
  CHECK(texts_of(v, v.max_ext("cat")) == std::vector<std::string>{"cat"});
  CHECK(texts_of(v, v.max_ext("cab")) == std::vector<std::string>{"ca", "b"});
  CHECK(texts_of(v, v.max_ext("b")) == std::vector<std::string>{"b"});
  CHECK(v.max_ext("").size() == 1);  // just EOS
  CHECK_THROWS_AS((void)v.max_ext("dog"), InvalidInputError);
}

TEST_CASE("max_ext is deterministic and locally maximal") {
  Rng rng(7);
  const Alphabet alphabet("abc ", ' ');
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> pieces;
    for (std::size_t i = 0; i < 6; ++i) {
      std::string piece;
      const std::size_t len = 2 + rng.uniform_index(3);
      for (std::size_t k = 0; k < len; ++k) piece += "abc"[rng.uniform_index(3)];
      pieces.push_back(piece);
    }
    std::sort(pieces.begin(), pieces.end());
    pieces.erase(std::unique(pieces.begin(), pieces.end()), pieces.end());
    const Vocabulary v = make_vocabulary(alphabet, pieces);

    std::string y;
    for (std::size_t k = 0; k < 10; ++k) y += "abc"[rng.uniform_index(3)];

    const Decomposition z1 = v.max_ext(y);
    const Decomposition z2 = v.max_ext(y);
    CHECK(z1 == z2);
    CHECK(v.collapse(z1) == y);

    // At every step no strictly longer token matches the remaining suffix.
    std::size_t pos = 0;
    for (TokenId id : z1) {
      if (v.token(id).is_eos) break;
      const std::size_t chosen_len = v.token(id).text.size();
      for (TokenId other : v.valid_extensions(y, pos)) {
        CHECK(v.token(other).length() <= chosen_len);
      }
      pos += chosen_len;
    }
  }
}

TEST_CASE("is_valid_decomposition checks collapse equality") {
  const Vocabulary v = example_vocab();
  CHECK(v.is_valid_decomposition({*v.find("c"), *v.find("at")}, "cat"));
  CHECK_FALSE(v.is_valid_decomposition({*v.find("ca")}, "cat"));
  CHECK(v.is_valid_decomposition({}, ""));
}

TEST_CASE("vocabulary invariants are enforced at construction") {
  const Alphabet alphabet("abct ", ' ');
  // Space inside a multi-character token.
  CHECK_THROWS_AS(Vocabulary(alphabet, {"a", "b", "c", "t", "\\s", "\\e", "a\\sb"}),
                  InvalidInputError);
  // Missing singleton.
  CHECK_THROWS_AS(Vocabulary(alphabet, {"a", "b", "c", "\\s", "\\e"}), InvalidInputError);
  // Duplicate text.
  CHECK_THROWS_AS(Vocabulary(alphabet, {"a", "b", "c", "t", "\\s", "\\e", "ab", "ab"}),
                  InvalidInputError);
  // Missing EOS.
  CHECK_THROWS_AS(Vocabulary(alphabet, {"a", "b", "c", "t", "\\s"}), InvalidInputError);
  // Symbol outside the alphabet.
  CHECK_THROWS_AS(Vocabulary(alphabet, {"a", "b", "c", "t", "\\s", "\\e", "xy"}),
                  InvalidInputError);
}

TEST_CASE("space tokens only appear as the space singleton in built vocabularies") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> pieces;
    for (std::size_t i = 0; i < 5; ++i) {
      std::string piece;
      const std::size_t len = 2 + rng.uniform_index(2);
      for (std::size_t k = 0; k < len; ++k) piece += "ab"[rng.uniform_index(2)];
      pieces.push_back(piece);
    }
    std::sort(pieces.begin(), pieces.end());
    pieces.erase(std::unique(pieces.begin(), pieces.end()), pieces.end());
    const Vocabulary v = make_vocabulary(Alphabet("ab ", ' '), pieces);
    for (TokenId id = 0; id < v.size(); ++id) {
      const Token& t = v.token(id);
      if (t.is_eos) continue;
      if (t.text.find(' ') != std::string::npos) CHECK(t.text == " ");
    }
  }
}

TEST_CASE("vocabulary file round-trips with escapes and preserves ids") {
  const Vocabulary v = example_vocab();
  const std::string path = std::filesystem::temp_directory_path() / "lsd_vocab_roundtrip.txt";
  v.save(path);
  const Vocabulary loaded = Vocabulary::load(path, v.alphabet());
  REQUIRE(loaded.size() == v.size());
  for (TokenId id = 0; id < v.size(); ++id) {
    CHECK(loaded.token(id).text == v.token(id).text);
    CHECK(loaded.token(id).is_eos == v.token(id).is_eos);
  }
  CHECK(loaded.eos_id() == v.eos_id());
  CHECK(loaded.space_id() == v.space_id());
  std::filesystem::remove(path);
}

TEST_CASE("token ids are dense and lengths respect n_max") {
  const Vocabulary v = example_vocab();
  CHECK(v.n_max() == 3);
  for (TokenId id = 0; id < v.size(); ++id) {
    CHECK(v.token(id).id == id);
    CHECK(v.token(id).length() >= 1);
    CHECK(v.token(id).length() <= v.n_max());
  }
}
