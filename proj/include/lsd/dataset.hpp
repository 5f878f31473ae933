#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsd/tensor.hpp"
#include "lsd/token_space.hpp"

namespace lsd {

// One (input, target) pair. Frame inputs are stored as float32 row-major
// [frames x frame_dim]; text inputs keep the raw string and materialize
// frames from the fixed per-character embedding when loaded.
struct Example {
  std::vector<float> frames;
  std::size_t frame_count = 0;
  std::size_t frame_dim = 0;
  std::string input_text;  // non-empty iff this is a text-input example
  std::string target;

  template <typename T>
  Tensor<T> input_tensor() const {
    Tensor<T> t({frame_count, frame_dim});
    for (std::size_t i = 0; i < frames.size(); ++i) t[i] = static_cast<T>(frames[i]);
    return t;
  }
};

struct Dataset {
  std::vector<Example> items;
};

// The per-character embedding used for text inputs and as the clean frame
// for synthetic frame inputs. Deterministic in (c, dim) only, so text-input
// TSVs mean the same thing everywhere.
std::vector<float> character_embedding(char c, std::size_t dim);

// TSV rows are "<input-spec>\t<target>". A frame input-spec is
// "b64:" + base64([u32 frames][u32 dim][f32 data...]) little-endian; anything
// else is a raw text input.
Dataset load_tsv(const std::string& path, std::size_t text_frame_dim = 8);
void save_tsv(const Dataset& dataset, const std::string& path);

std::string encode_frames_base64(const std::vector<float>& frames, std::size_t frame_count,
                                 std::size_t frame_dim);

struct GeneratorSpec {
  std::uint64_t seed = 1;
  std::size_t train_size = 200;
  std::size_t dev_size = 32;
  std::size_t test_size = 32;

  // Toy language: a seeded lexicon of words joined by single spaces.
  std::string letters = "abcdefghijklmnopqrstuvwxyz";
  std::size_t lexicon_size = 12;
  std::size_t word_len_min = 2;
  std::size_t word_len_max = 5;
  std::size_t words_per_line_min = 1;
  std::size_t words_per_line_max = 3;
  bool qu_variant = false;  // every generated "q" is immediately followed by "u"

  // Frame synthesis: per character, duration uniform in [dur_min, dur_max]
  // frames of its embedding plus Gaussian noise.
  std::size_t frame_dim = 8;
  std::size_t dur_min = 1;
  std::size_t dur_max = 3;
  double noise_std = 0.1;

  void validate() const;
};

struct GeneratedSplits {
  Dataset train, dev, test;
};

GeneratedSplits generate_dataset(const GeneratorSpec& spec);

// Writes train.tsv / dev.tsv / test.tsv under dir (created if needed).
void write_splits(const GeneratedSplits& splits, const std::string& dir);

}  // namespace lsd
