#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lsd/config.hpp"
#include "lsd/dataset.hpp"
#include "lsd/decoding.hpp"
#include "lsd/token_space.hpp"

namespace lsd {

// The documented set of experiment config keys (README lists semantics).
const std::vector<std::string>& known_config_keys();

Alphabet alphabet_from_config(const Config& cfg);
BeamConfig beam_config_from(const Config& cfg);
GeneratorSpec generator_spec_from(const Config& cfg);

// Mode names used across the CLI, metrics and directory layout.
inline constexpr const char* kModeLsd = "lsd";
inline constexpr const char* kModeMaxExt = "maxext";
inline constexpr const char* kModeCharBaseline = "char-baseline";

struct ModeMetrics {
  std::string mode;
  std::size_t n_max = 0;
  std::size_t vocab_size = 0;
  double wer = 0.0;
  double cer = 0.0;
};

// Full experiment driver: resolves data (generating it when configured),
// then per mode builds the vocabulary, trains, decodes the test split and
// writes vocab/checkpoint/stats/nbest/coverage plus a cross-mode metrics
// table under out_dir. Returns the per-mode metrics in run order.
std::vector<ModeMetrics> run_experiment(const Config& cfg, const std::string& out_dir);

// Single-mode training pipeline (the `train` subcommand): same artifacts as
// one mode of run_experiment, without test decoding.
void train_single(const Config& cfg, const std::string& mode, const std::string& out_dir);

// Beam-decodes every row of data_path with the model saved under model_dir
// and writes one Appendix-style n-best dump per row to `out` (rows separated
// by a line naming the input index and reference).
void decode_command(const std::string& model_dir, const std::string& data_path,
                    const BeamConfig& beam, std::ostream& out);

struct EvalResult {
  double wer = 0.0;
  double cer = 0.0;
  std::size_t examples = 0;
};

// Corpus-level WER/CER of top-1 beam decodes against the references.
EvalResult eval_command(const std::string& model_dir, const std::string& data_path,
                        const BeamConfig& beam);

// Prints the exact posterior over decompositions of a target, under either a
// trained model (model_dir) or a freshly initialized one (model_dir empty,
// dims from cfg). x comes from `row` of data_path; the target defaults to
// that row's reference.
void oracle_posterior_command(const Config& cfg, const std::string& model_dir,
                              const std::string& data_path, std::size_t row,
                              const std::string& target_override, std::size_t limit,
                              std::ostream& out);

}  // namespace lsd
