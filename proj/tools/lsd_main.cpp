#include <CLI11.hpp>
#include <iostream>

#include "lsd/dataset.hpp"
#include "lsd/experiment.hpp"
#include "lsd/lattice.hpp"
#include "lsd/vocab_builder.hpp"

namespace {

int exit_code_for(const lsd::Error& e) {
  const std::string& c = e.category();
  if (c == "invalid-input") return 2;
  if (c == "invalid-config") return 3;
  if (c == "capacity") return 4;
  if (c == "io") return 5;
  if (c == "corrupt-checkpoint") return 6;
  if (c == "state") return 7;
  if (c == "empty-beam") return 8;
  return 9;
}

// Corpus lines for vocabulary building: TSV rows contribute their target
// field, plain text files contribute whole lines.
std::vector<std::string> read_corpus_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lsd::IoError("cannot open corpus: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    lines.push_back(tab == std::string::npos ? line : line.substr(tab + 1));
  }
  return lines;
}

lsd::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  lsd::Config cfg = path.empty() ? lsd::Config() : lsd::Config::parse_file(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw lsd::InvalidConfigError("--set expects key=value, got \"" + kv + "\"");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-decomposition sequence-to-sequence toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode = lsd::kModeLsd;
  std::vector<std::string> overrides;

  // vocab build
  auto* vocab_cmd = app.add_subcommand("vocab", "Vocabulary operations");
  auto* vocab_build = vocab_cmd->add_subcommand("build", "Build a vocabulary from corpus counts");
  std::string corpus_path, vocab_out, alphabet_chars = "abcdefghijklmnopqrstuvwxyz\\s";
  std::size_t n_max = 4, vocab_size = 64;
  vocab_build->add_option("--corpus", corpus_path, "Corpus file (TSV or plain text)")->required();
  vocab_build->add_option("--n-max", n_max, "Maximum token length");
  vocab_build->add_option("--size", vocab_size, "Vocabulary size (singletons included)");
  vocab_build->add_option("--alphabet", alphabet_chars, "Alphabet characters (space as \\s)");
  vocab_build->add_option("--out", vocab_out, "Output vocabulary file")->required();

  // dataset generate
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset operations");
  auto* dataset_gen = dataset_cmd->add_subcommand("generate", "Generate synthetic splits");
  dataset_gen->add_option("--config", config_path, "Experiment config file");
  dataset_gen->add_option("--set", overrides, "Override config key (key=value)");
  dataset_gen->add_option("--out", out_dir, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one mode");
  train_cmd->add_option("--config", config_path, "Experiment config file");
  train_cmd->add_option("--set", overrides, "Override config key (key=value)");
  train_cmd->add_option("--mode", mode, "lsd | maxext | char-baseline");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Beam-decode a dataset, print n-best dumps");
  std::string model_dir, data_path;
  std::size_t beam_width = 8, nbest = 8, max_steps = 96;
  bool merge = false;
  decode_cmd->add_option("--model", model_dir, "Trained model directory")->required();
  decode_cmd->add_option("--data", data_path, "Dataset TSV")->required();
  decode_cmd->add_option("--beam", beam_width, "Beam width");
  decode_cmd->add_option("--nbest", nbest, "Hypotheses to emit per input");
  decode_cmd->add_option("--max-steps", max_steps, "Decode step cap");
  decode_cmd->add_flag("--merge", merge, "Merge hypotheses with equal collapsed strings");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Report corpus WER/CER of top-1 decodes");
  eval_cmd->add_option("--model", model_dir, "Trained model directory")->required();
  eval_cmd->add_option("--data", data_path, "Dataset TSV")->required();
  eval_cmd->add_option("--beam", beam_width, "Beam width");
  eval_cmd->add_option("--max-steps", max_steps, "Decode step cap");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact small-scale oracles");
  std::string target, vocab_path, target_override;
  std::size_t limit = lsd::kDefaultEnumerationLimit, row = 0;
  auto* oracle_count = oracle_cmd->add_subcommand("count", "Count decompositions of a target");
  oracle_count->add_option("--target", target, "Target string")->required();
  oracle_count->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  oracle_count->add_option("--alphabet", alphabet_chars, "Alphabet characters (space as \\s)");
  auto* oracle_enum = oracle_cmd->add_subcommand("enumerate", "List decompositions of a target");
  oracle_enum->add_option("--target", target, "Target string")->required();
  oracle_enum->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  oracle_enum->add_option("--alphabet", alphabet_chars, "Alphabet characters (space as \\s)");
  oracle_enum->add_option("--limit", limit, "Enumeration guard");
  auto* oracle_post = oracle_cmd->add_subcommand("posterior", "Exact posterior over decompositions");
  oracle_post->add_option("--model", model_dir, "Trained model directory (omit for a fresh model)");
  oracle_post->add_option("--config", config_path, "Config for the fresh-model case");
  oracle_post->add_option("--set", overrides, "Override config key (key=value)");
  oracle_post->add_option("--data", data_path, "Dataset TSV supplying the input")->required();
  oracle_post->add_option("--row", row, "Dataset row index");
  oracle_post->add_option("--target", target_override, "Target override");
  oracle_post->add_option("--limit", limit, "Enumeration guard");

  // report
  auto* report_cmd = app.add_subcommand("report", "Run the full multi-mode experiment");
  report_cmd->add_option("--config", config_path, "Experiment config file");
  report_cmd->add_option("--set", overrides, "Override config key (key=value)");
  report_cmd->add_option("--out", out_dir, "Report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*vocab_build) {
      const lsd::Alphabet alphabet(lsd::Vocabulary::unescape_text(alphabet_chars).first, ' ');
      const auto lines = read_corpus_lines(corpus_path);
      const lsd::NgramCounts counts = lsd::count_ngrams(lines, n_max, alphabet);
      lsd::BuildVocabResult built = lsd::build_vocab(counts, alphabet, n_max, vocab_size);
      if (built.truncated) {
        std::cerr << "warning: corpus supplied fewer distinct tokens than requested\n";
      }
      built.vocabulary.save(vocab_out);
      std::cout << built.vocabulary.size() << " tokens -> " << vocab_out << "\n";
    } else if (*dataset_gen) {
      lsd::Config cfg = load_config(config_path, overrides);
      cfg.check_known(lsd::known_config_keys());
      const lsd::GeneratedSplits splits = lsd::generate_dataset(lsd::generator_spec_from(cfg));
      lsd::write_splits(splits, out_dir);
      std::cout << "wrote " << splits.train.items.size() << "/" << splits.dev.items.size() << "/"
                << splits.test.items.size() << " rows under " << out_dir << "\n";
    } else if (*train_cmd) {
      lsd::train_single(load_config(config_path, overrides), mode, out_dir);
      std::cout << "trained " << mode << " -> " << out_dir << "\n";
    } else if (*decode_cmd) {
      lsd::BeamConfig beam;
      beam.beam_width = beam_width;
      beam.n_best = std::min(nbest, beam_width);
      beam.max_steps = max_steps;
      beam.collapse_merge = merge;
      lsd::decode_command(model_dir, data_path, beam, std::cout);
    } else if (*eval_cmd) {
      lsd::BeamConfig beam;
      beam.beam_width = beam_width;
      beam.n_best = 1;
      beam.max_steps = max_steps;
      const lsd::EvalResult r = lsd::eval_command(model_dir, data_path, beam);
      std::cout << "examples\t" << r.examples << "\nwer\t" << r.wer << "\ncer\t" << r.cer << "\n";
    } else if (*oracle_count || *oracle_enum) {
      const lsd::Alphabet alphabet(lsd::Vocabulary::unescape_text(alphabet_chars).first, ' ');
      const lsd::Vocabulary vocab = lsd::Vocabulary::load(vocab_path, alphabet);
      if (*oracle_count) {
        std::cout << lsd::count_decompositions(target, vocab).str() << "\n";
      } else {
        const lsd::DecompositionSet set = lsd::enumerate_decompositions(target, vocab, limit);
        for (const lsd::Decomposition& z : set.items) {
          std::cout << vocab.join_texts(z, "|") << "\n";
        }
      }
    } else if (*oracle_post) {
      lsd::oracle_posterior_command(load_config(config_path, overrides), model_dir, data_path,
                                    row, target_override, limit, std::cout);
    } else if (*report_cmd) {
      const std::vector<lsd::ModeMetrics> metrics =
          lsd::run_experiment(load_config(config_path, overrides), out_dir);
      for (const lsd::ModeMetrics& m : metrics) {
        std::cout << m.mode << "\tn_max=" << m.n_max << "\tsize=" << m.vocab_size
                  << "\twer=" << m.wer << "\tcer=" << m.cer << "\n";
      }
      std::cout << "report written to " << out_dir << "\n";
    }
  } catch (const lsd::Error& e) {
    std::cerr << "error[" << e.category() << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 9;
  }
  return 0;
}
