#include "lsd/dataset.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "lsd/rng.hpp"

namespace lsd {

namespace {

constexpr char kBase64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr const char* kFramePrefix = "b64:";
constexpr std::uint64_t kCharEmbedSeed = 0x5face0b5ULL;

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) chunk |= bytes[i + 2];
    out += kBase64Chars[(chunk >> 18) & 63];
    out += kBase64Chars[(chunk >> 12) & 63];
    out += i + 1 < bytes.size() ? kBase64Chars[(chunk >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kBase64Chars[chunk & 63] : '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<std::int8_t, 256> lut;
  lut.fill(-1);
  for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kBase64Chars[i])] = static_cast<std::int8_t>(i);
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const std::int8_t v = lut[static_cast<unsigned char>(c)];
    if (v < 0) throw InvalidInputError("invalid base64 character in input-spec");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

void materialize_text_frames(Example& ex, std::size_t frame_dim) {
  ex.frame_count = ex.input_text.size();
  ex.frame_dim = frame_dim;
  ex.frames.clear();
  ex.frames.reserve(ex.frame_count * frame_dim);
  for (char c : ex.input_text) {
    const std::vector<float> emb = character_embedding(c, frame_dim);
    ex.frames.insert(ex.frames.end(), emb.begin(), emb.end());
  }
}

}  // namespace

std::vector<float> character_embedding(char c, std::size_t dim) {
  Rng rng(Rng::derive(kCharEmbedSeed, static_cast<std::uint64_t>(static_cast<unsigned char>(c)),
                      dim));
  std::vector<float> out(dim);
  for (float& v : out) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return out;
}

std::string encode_frames_base64(const std::vector<float>& frames, std::size_t frame_count,
                                 std::size_t frame_dim) {
  if (frames.size() != frame_count * frame_dim) {
    throw InvalidInputError("frame buffer does not match the declared dimensions");
  }
  std::vector<std::uint8_t> bytes(8 + frames.size() * 4);
  const std::uint32_t t = static_cast<std::uint32_t>(frame_count);
  const std::uint32_t d = static_cast<std::uint32_t>(frame_dim);
  std::memcpy(bytes.data(), &t, 4);
  std::memcpy(bytes.data() + 4, &d, 4);
  std::memcpy(bytes.data() + 8, frames.data(), frames.size() * 4);
  return std::string(kFramePrefix) + base64_encode(bytes);
}

namespace {

Example parse_example(const std::string& input_spec, std::string target,
                      std::size_t text_frame_dim) {
  Example ex;
  ex.target = std::move(target);
  if (input_spec.rfind(kFramePrefix, 0) == 0) {
    const std::vector<std::uint8_t> bytes = base64_decode(input_spec.substr(4));
    if (bytes.size() < 8) throw InvalidInputError("frame input-spec lacks a dims prefix");
    std::uint32_t t = 0, d = 0;
    std::memcpy(&t, bytes.data(), 4);
    std::memcpy(&d, bytes.data() + 4, 4);
    if (bytes.size() != 8 + static_cast<std::size_t>(t) * d * 4) {
      throw InvalidInputError("frame input-spec length does not match its dims prefix");
    }
    ex.frame_count = t;
    ex.frame_dim = d;
    ex.frames.resize(static_cast<std::size_t>(t) * d);
    std::memcpy(ex.frames.data(), bytes.data() + 8, ex.frames.size() * 4);
  } else {
    ex.input_text = input_spec;
    materialize_text_frames(ex, text_frame_dim);
  }
  return ex;
}

}  // namespace

Dataset load_tsv(const std::string& path, std::size_t text_frame_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InvalidInputError(path + ":" + std::to_string(line_no) + ": row lacks a tab");
    }
    ds.items.push_back(parse_example(line.substr(0, tab), line.substr(tab + 1), text_frame_dim));
  }
  return ds;
}

void save_tsv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset for writing: " + path);
  for (const Example& ex : dataset.items) {
    if (!ex.input_text.empty()) {
      out << ex.input_text;
    } else {
      out << encode_frames_base64(ex.frames, ex.frame_count, ex.frame_dim);
    }
    out << '\t' << ex.target << '\n';
  }
  if (!out) throw IoError("failed writing dataset: " + path);
}

void GeneratorSpec::validate() const {
  if (letters.empty()) throw InvalidConfigError("generator needs a letter set");
  if (letters.find(' ') != std::string::npos) {
    throw InvalidConfigError("the letter set must not contain the space symbol");
  }
  if (word_len_min == 0 || word_len_min > word_len_max) {
    throw InvalidConfigError("word length range is invalid");
  }
  if (words_per_line_min == 0 || words_per_line_min > words_per_line_max) {
    throw InvalidConfigError("words-per-line range is invalid");
  }
  if (dur_min == 0 || dur_min > dur_max) throw InvalidConfigError("duration range is invalid");
  if (frame_dim == 0) throw InvalidConfigError("frame_dim must be positive");
  if (lexicon_size == 0) throw InvalidConfigError("lexicon must be non-empty");
  if (qu_variant && letters.find('q') == std::string::npos) {
    throw InvalidConfigError("qu variant requires 'q' in the letter set");
  }
  if (qu_variant && letters.find('u') == std::string::npos) {
    throw InvalidConfigError("qu variant requires 'u' in the letter set");
  }
  if (qu_variant && letters.size() < 3) {
    throw InvalidConfigError("qu variant needs letters besides 'q' and 'u'");
  }
}

namespace {

std::string generate_word(Rng& rng, const GeneratorSpec& spec) {
  const std::size_t len =
      spec.word_len_min + rng.uniform_index(spec.word_len_max - spec.word_len_min + 1);
  std::string word;
  while (word.size() < len) {
    char c = spec.letters[rng.uniform_index(spec.letters.size())];
    if (spec.qu_variant && c == 'u') {
      // "u" only ever appears after "q", so "qu" is a reliable bigram.
      continue;
    }
    if (spec.qu_variant && c == 'q') {
      if (word.size() + 2 > len) continue;  // no room for the forced "u"
      word += "qu";
      continue;
    }
    word += c;
  }
  return word;
}

Dataset generate_split(Rng& rng, const GeneratorSpec& spec,
                       const std::vector<std::string>& lexicon, std::size_t size) {
  Dataset ds;
  ds.items.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t words =
        spec.words_per_line_min +
        rng.uniform_index(spec.words_per_line_max - spec.words_per_line_min + 1);
    std::string target;
    for (std::size_t w = 0; w < words; ++w) {
      if (w > 0) target += ' ';
      target += lexicon[rng.uniform_index(lexicon.size())];
    }
    Example ex;
    ex.target = target;
    ex.frame_dim = spec.frame_dim;
    for (char c : target) {
      const std::size_t dur = spec.dur_min + rng.uniform_index(spec.dur_max - spec.dur_min + 1);
      const std::vector<float> emb = character_embedding(c, spec.frame_dim);
      for (std::size_t f = 0; f < dur; ++f) {
        for (std::size_t k = 0; k < spec.frame_dim; ++k) {
          ex.frames.push_back(emb[k] +
                              static_cast<float>(rng.gaussian(0.0, spec.noise_std)));
        }
        ++ex.frame_count;
      }
    }
    ds.items.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace

GeneratedSplits generate_dataset(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<std::string> lexicon;
  lexicon.reserve(spec.lexicon_size);
  std::size_t attempts = 0;
  while (lexicon.size() < spec.lexicon_size) {
    if (++attempts > 10000 * spec.lexicon_size) {
      throw InvalidConfigError("cannot draw " + std::to_string(spec.lexicon_size) +
                               " distinct words from the configured letter set");
    }
    std::string word = generate_word(rng, spec);
    if (std::find(lexicon.begin(), lexicon.end(), word) == lexicon.end()) {
      lexicon.push_back(std::move(word));
    }
  }
  GeneratedSplits splits;
  splits.train = generate_split(rng, spec, lexicon, spec.train_size);
  splits.dev = generate_split(rng, spec, lexicon, spec.dev_size);
  splits.test = generate_split(rng, spec, lexicon, spec.test_size);
  return splits;
}

void write_splits(const GeneratedSplits& splits, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_tsv(splits.train, dir + "/train.tsv");
  save_tsv(splits.dev, dir + "/dev.tsv");
  save_tsv(splits.test, dir + "/test.tsv");
}

}  // namespace lsd
