#include "lsd/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lsd/dataset.hpp"
#include "lsd/lattice.hpp"
#include "lsd/training.hpp"
#include "lsd/vocab_builder.hpp"

namespace lsd {

namespace fs = std::filesystem;

namespace {

std::string escape_spaces(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ' ') {
      out += "\\s";
    } else {
      out += c;
    }
  }
  return out;
}

std::string unescape_spaces(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == 's') {
      out += ' ';
      ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

ScheduleShape shape_from(const std::string& name, const std::string& key) {
  if (name == "linear") return ScheduleShape::kLinear;
  if (name == "exponential") return ScheduleShape::kExponential;
  throw InvalidConfigError(key + " must be linear or exponential, got \"" + name + "\"");
}

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "seed", "precision", "threads", "modes", "task",
      "alphabet.chars",
      "data.train", "data.dev", "data.test", "data.generate", "data.text_frame_dim",
      "data.train_size", "data.dev_size", "data.test_size",
      "data.letters", "data.lexicon_size", "data.word_len_min", "data.word_len_max",
      "data.words_per_line_min", "data.words_per_line_max",
      "data.frame_dim", "data.dur_min", "data.dur_max", "data.noise_std",
      "vocab.path", "vocab.n_max", "vocab.size",
      "model.enc_hidden", "model.enc_layers", "model.time_reduction",
      "model.dec_hidden", "model.attn_dim", "model.embed_dim",
      "train.steps", "train.batch", "train.eval_interval", "train.patience",
      "train.lr_start", "train.lr_end", "train.lr_shape",
      "train.clip_norm", "train.weight_noise_std", "train.l2_decay",
      "train.adam_beta1", "train.adam_beta2", "train.adam_eps",
      "train.eps_start", "train.eps_end", "train.eps_decay_frac", "train.eps_shape",
      "train.decode_max_steps",
      "decode.beam_width", "decode.max_steps", "decode.n_best", "decode.merge",
      "decode.length_normalize",
      "report.nbest_examples",
  };
  return keys;
}

Alphabet alphabet_from_config(const Config& cfg) {
  const std::string chars =
      unescape_spaces(cfg.get_string("alphabet.chars", "abcdefghijklmnopqrstuvwxyz\\s"));
  return Alphabet(chars, ' ');
}

BeamConfig beam_config_from(const Config& cfg) {
  BeamConfig beam;
  beam.beam_width = cfg.get_size("decode.beam_width", 8);
  beam.max_steps = cfg.get_size("decode.max_steps", 96);
  beam.n_best = cfg.get_size("decode.n_best", std::min<std::size_t>(8, beam.beam_width));
  beam.collapse_merge = cfg.get_bool("decode.merge", false);
  beam.length_normalize = cfg.get_bool("decode.length_normalize", false);
  beam.validate();
  return beam;
}

GeneratorSpec generator_spec_from(const Config& cfg) {
  GeneratorSpec spec;
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  spec.train_size = cfg.get_size("data.train_size", spec.train_size);
  spec.dev_size = cfg.get_size("data.dev_size", spec.dev_size);
  spec.test_size = cfg.get_size("data.test_size", spec.test_size);
  spec.letters = cfg.get_string("data.letters", spec.letters);
  spec.lexicon_size = cfg.get_size("data.lexicon_size", spec.lexicon_size);
  spec.word_len_min = cfg.get_size("data.word_len_min", spec.word_len_min);
  spec.word_len_max = cfg.get_size("data.word_len_max", spec.word_len_max);
  spec.words_per_line_min = cfg.get_size("data.words_per_line_min", spec.words_per_line_min);
  spec.words_per_line_max = cfg.get_size("data.words_per_line_max", spec.words_per_line_max);
  spec.qu_variant = cfg.get_string("task", "words") == "qu";
  spec.frame_dim = cfg.get_size("data.frame_dim", spec.frame_dim);
  spec.dur_min = cfg.get_size("data.dur_min", spec.dur_min);
  spec.dur_max = cfg.get_size("data.dur_max", spec.dur_max);
  spec.noise_std = cfg.get_double("data.noise_std", spec.noise_std);
  return spec;
}

namespace {

struct ResolvedData {
  Dataset train, dev, test;
  std::size_t input_dim = 0;
};

ResolvedData resolve_data(const Config& cfg, const std::string& out_dir) {
  ResolvedData data;
  if (cfg.get_bool("data.generate", !cfg.has("data.train"))) {
    const GeneratorSpec spec = generator_spec_from(cfg);
    GeneratedSplits splits = generate_dataset(spec);
    write_splits(splits, out_dir + "/data");
    data.train = std::move(splits.train);
    data.dev = std::move(splits.dev);
    data.test = std::move(splits.test);
  } else {
    const std::size_t text_dim = cfg.get_size("data.text_frame_dim", 8);
    data.train = load_tsv(cfg.require_string("data.train"), text_dim);
    if (cfg.has("data.dev")) data.dev = load_tsv(cfg.require_string("data.dev"), text_dim);
    if (cfg.has("data.test")) data.test = load_tsv(cfg.require_string("data.test"), text_dim);
  }
  if (data.train.items.empty()) throw InvalidInputError("training split is empty");
  data.input_dim = data.train.items.front().frame_dim;
  for (const Dataset* split : {&data.train, &data.dev, &data.test}) {
    for (const Example& ex : split->items) {
      if (ex.frame_dim != data.input_dim) {
        throw InvalidInputError("inconsistent frame dimension across dataset rows");
      }
    }
  }
  return data;
}

std::vector<std::string> split_targets(const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.items.size());
  for (const Example& ex : ds.items) out.push_back(ex.target);
  return out;
}

Vocabulary vocab_for_mode(const Config& cfg, const std::string& mode, const Alphabet& alphabet,
                          const Dataset& train) {
  if (mode == kModeCharBaseline) {
    return make_vocabulary(alphabet, {});
  }
  if (cfg.has("vocab.path")) {
    return Vocabulary::load(cfg.require_string("vocab.path"), alphabet);
  }
  const std::size_t n_max = cfg.get_size("vocab.n_max", 4);
  const std::size_t size = cfg.get_size("vocab.size", alphabet.chars().size() + 1 + 32);
  const NgramCounts counts = count_ngrams(split_targets(train), n_max, alphabet);
  BuildVocabResult built = build_vocab(counts, alphabet, n_max, size);
  if (built.truncated) {
    std::cerr << "warning: corpus supplied only " << built.vocabulary.size()
              << " distinct tokens, below the requested size " << size << "\n";
  }
  return std::move(built.vocabulary);
}

template <typename T>
std::vector<TrainExample<T>> to_examples(const Dataset& ds, const Alphabet& alphabet,
                                         std::size_t time_reduction) {
  std::vector<TrainExample<T>> out;
  out.reserve(ds.items.size());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const Example& ex = ds.items[i];
    if (ex.target.empty()) {
      throw InvalidInputError("row " + std::to_string(i + 1) + " has an empty target");
    }
    for (char c : ex.target) {
      if (!alphabet.contains(c)) {
        throw InvalidInputError("row " + std::to_string(i + 1) + " target symbol '" +
                                std::string(1, c) + "' is outside the alphabet");
      }
    }
    if (ex.frame_count < time_reduction) {
      throw InvalidInputError("row " + std::to_string(i + 1) + " has " +
                              std::to_string(ex.frame_count) +
                              " frames, fewer than the time reduction factor " +
                              std::to_string(time_reduction) +
                              "; lengthen targets or lower model.time_reduction");
    }
    out.push_back(TrainExample<T>{ex.input_tensor<T>(), ex.target});
  }
  return out;
}

ModelConfig model_config_from(const Config& cfg, std::size_t input_dim, std::size_t vocab_size) {
  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.vocab_size = vocab_size;
  mc.enc_hidden = cfg.get_size("model.enc_hidden", 32);
  mc.enc_layers = cfg.get_size("model.enc_layers", 3);
  mc.time_reduction = cfg.get_size("model.time_reduction", 4);
  mc.dec_hidden = cfg.get_size("model.dec_hidden", 64);
  mc.attn_dim = cfg.get_size("model.attn_dim", 32);
  mc.embed_dim = cfg.get_size("model.embed_dim", 16);
  mc.validate();
  return mc;
}

TrainerOptions trainer_options_from(const Config& cfg, const std::string& mode) {
  TrainerOptions opts;
  opts.optimizer.adam_beta1 = cfg.get_double("train.adam_beta1", 0.9);
  opts.optimizer.adam_beta2 = cfg.get_double("train.adam_beta2", 0.999);
  opts.optimizer.adam_eps = cfg.get_double("train.adam_eps", 1e-8);
  opts.optimizer.lr_start = cfg.get_double("train.lr_start", 1e-3);
  opts.optimizer.lr_end = cfg.get_double("train.lr_end", 1e-4);
  opts.optimizer.lr_shape = shape_from(cfg.get_string("train.lr_shape", "linear"),
                                       "train.lr_shape");
  opts.optimizer.grad_clip_norm = cfg.get_double("train.clip_norm", 1.0);
  opts.optimizer.weight_noise_std = cfg.get_double("train.weight_noise_std", 0.075);
  opts.optimizer.l2_decay = cfg.get_double("train.l2_decay", 1e-5);

  const std::size_t steps = cfg.get_size("train.steps", 1000);
  opts.learning_rate.decay_steps = steps;

  // Exploration defaults: linear 1.0 -> 0.1 over the first quarter of
  // training, then constant.
  opts.epsilon.start = cfg.get_double("train.eps_start", 1.0);
  opts.epsilon.end = cfg.get_double("train.eps_end", 0.1);
  const double frac = cfg.get_double("train.eps_decay_frac", 0.25);
  opts.epsilon.decay_steps = static_cast<std::size_t>(static_cast<double>(steps) * frac);
  opts.epsilon.shape = shape_from(cfg.get_string("train.eps_shape", "linear"),
                                  "train.eps_shape");

  opts.source = mode == kModeLsd ? DecompositionSource::kSampled : DecompositionSource::kMaxExt;
  opts.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  opts.threads = cfg.get_size("threads", 1);
  return opts;
}

TrainRunOptions run_options_from(const Config& cfg) {
  TrainRunOptions run;
  run.total_steps = cfg.get_size("train.steps", 1000);
  run.batch_size = cfg.get_size("train.batch", 8);
  run.eval_interval = cfg.get_size("train.eval_interval", 100);
  run.patience = cfg.get_size("train.patience", 10);
  run.decode_max_steps = cfg.get_size("train.decode_max_steps", 96);
  return run;
}

void write_model_config(const ModelConfig& mc, const std::string& path,
                        const std::string& precision, const Alphabet& alphabet) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write model config: " + path);
  out << "precision = " << precision << "\n";
  out << "alphabet.chars = " << escape_spaces(alphabet.chars()) << "\n";
  out << "model.input_dim = " << mc.input_dim << "\n";
  out << "model.enc_hidden = " << mc.enc_hidden << "\n";
  out << "model.enc_layers = " << mc.enc_layers << "\n";
  out << "model.time_reduction = " << mc.time_reduction << "\n";
  out << "model.dec_hidden = " << mc.dec_hidden << "\n";
  out << "model.attn_dim = " << mc.attn_dim << "\n";
  out << "model.embed_dim = " << mc.embed_dim << "\n";
  if (!out) throw IoError("failed writing model config: " + path);
}

template <typename T>
struct ModeArtifacts {
  Vocabulary vocab;
  Model<T> model;
};

template <typename T>
ModeArtifacts<T> train_mode(const Config& cfg, const std::string& mode,
                            const ResolvedData& data, const Alphabet& alphabet,
                            const std::string& mode_dir, const std::string& precision) {
  fs::create_directories(mode_dir);
  Vocabulary vocab = vocab_for_mode(cfg, mode, alphabet, data.train);
  vocab.save(mode_dir + "/vocab.txt");

  const ModelConfig mc = model_config_from(cfg, data.input_dim, vocab.size());
  const std::vector<TrainExample<T>> train =
      to_examples<T>(data.train, alphabet, mc.time_reduction);
  const std::vector<TrainExample<T>> dev = to_examples<T>(data.dev, alphabet, mc.time_reduction);

  Model<T> model(mc, static_cast<std::uint64_t>(cfg.get_int("seed", 1)));
  TrainerOptions topts = trainer_options_from(cfg, mode);
  TrainRunOptions ropts = run_options_from(cfg);

  std::ofstream stats(mode_dir + "/stats.csv", std::ios::trunc);
  if (!stats) throw IoError("cannot write stats csv under " + mode_dir);
  stats << TrainStats::csv_header() << "\n";
  train_run<T>(model, vocab, train, dev, topts, ropts,
               [&stats](const TrainStats& s) { stats << s.csv_row() << "\n"; });
  stats.close();

  save_checkpoint(model.params(), mode_dir + "/checkpoint.lsdc");
  write_model_config(mc, mode_dir + "/model.cfg", precision, alphabet);
  return ModeArtifacts<T>{std::move(vocab), std::move(model)};
}

template <typename T>
ModeMetrics decode_and_report(const Config& cfg, const std::string& mode,
                              const ResolvedData& data, const Alphabet& alphabet,
                              const std::string& mode_dir, ModeArtifacts<T>& art) {
  const BeamConfig beam = beam_config_from(cfg);
  const std::vector<TrainExample<T>> test =
      to_examples<T>(data.test, alphabet, art.model.config().time_reduction);

  std::size_t word_errors = 0, word_len = 0, char_errors = 0, char_len = 0;
  std::vector<Decomposition> top_decomps;
  std::ofstream nbest(mode_dir + "/nbest.txt", std::ios::trunc);
  if (!nbest) throw IoError("cannot write nbest dump under " + mode_dir);
  const std::size_t nbest_examples = cfg.get_size("report.nbest_examples", 3);

  for (std::size_t i = 0; i < test.size(); ++i) {
    std::string hyp;
    try {
      std::vector<Hypothesis> hyps = beam_search(art.model, test[i].input, art.vocab, beam);
      hyp = art.vocab.collapse(hyps.front().token_ids);
      top_decomps.push_back(hyps.front().token_ids);
      if (i < nbest_examples) {
        nbest << "# input " << i << "\treference: " << test[i].target << "\n";
        nbest << format_nbest_dump(hyps, art.vocab);
      }
    } catch (const EmptyBeamError& e) {
      if (!e.partials().empty()) {
        hyp = art.vocab.collapse(e.partials().front().token_ids);
        top_decomps.push_back(e.partials().front().token_ids);
      }
    }
    const EditDistanceResult w = edit_distance_metrics(hyp, test[i].target, EditUnit::kWord);
    const EditDistanceResult c = edit_distance_metrics(hyp, test[i].target, EditUnit::kChar);
    word_errors += w.errors;
    word_len += w.ref_len;
    char_errors += c.errors;
    char_len += c.ref_len;
  }

  const std::map<std::size_t, double> coverage = coverage_distribution(top_decomps, art.vocab);
  std::ofstream cov(mode_dir + "/coverage.csv", std::ios::trunc);
  if (!cov) throw IoError("cannot write coverage csv under " + mode_dir);
  cov << "token_length,fraction\n";
  for (const auto& [len, frac] : coverage) {
    cov << len << ',' << format_rate(frac) << "\n";
  }

  ModeMetrics m;
  m.mode = mode;
  m.n_max = art.vocab.n_max();
  m.vocab_size = art.vocab.size();
  m.wer = word_len == 0 ? 0.0 : static_cast<double>(word_errors) / static_cast<double>(word_len);
  m.cer = char_len == 0 ? 0.0 : static_cast<double>(char_errors) / static_cast<double>(char_len);
  return m;
}

template <typename T>
std::vector<ModeMetrics> run_experiment_impl(const Config& cfg, const std::string& out_dir,
                                             const std::string& precision) {
  fs::create_directories(out_dir);
  const Alphabet alphabet = alphabet_from_config(cfg);
  const ResolvedData data = resolve_data(cfg, out_dir);
  const std::vector<std::string> modes = cfg.get_list("modes", {kModeLsd});

  std::vector<ModeMetrics> metrics;
  for (const std::string& mode : modes) {
    if (mode != kModeLsd && mode != kModeMaxExt && mode != kModeCharBaseline) {
      throw InvalidConfigError("unknown mode \"" + mode + "\"");
    }
    const std::string mode_dir = out_dir + "/" + mode;
    ModeArtifacts<T> art = train_mode<T>(cfg, mode, data, alphabet, mode_dir, precision);
    if (!data.test.items.empty()) {
      metrics.push_back(decode_and_report<T>(cfg, mode, data, alphabet, mode_dir, art));
    }
  }

  std::ofstream table(out_dir + "/metrics.csv", std::ios::trunc);
  if (!table) throw IoError("cannot write metrics table under " + out_dir);
  table << "mode,n_max,vocab_size,wer,cer\n";
  for (const ModeMetrics& m : metrics) {
    table << m.mode << ',' << m.n_max << ',' << m.vocab_size << ',' << format_rate(m.wer) << ','
          << format_rate(m.cer) << "\n";
  }
  std::ofstream text(out_dir + "/metrics.txt", std::ios::trunc);
  text << "mode            n_max  size   WER      CER\n";
  for (const ModeMetrics& m : metrics) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-15s %-6zu %-6zu %-8.4f %-8.4f\n", m.mode.c_str(),
                  m.n_max, m.vocab_size, m.wer, m.cer);
    text << line;
  }
  return metrics;
}

}  // namespace

std::vector<ModeMetrics> run_experiment(const Config& cfg, const std::string& out_dir) {
  cfg.check_known(known_config_keys());
  const std::string precision = cfg.get_string("precision", "float32");
  if (precision == "float32") return run_experiment_impl<float>(cfg, out_dir, precision);
  if (precision == "float64") return run_experiment_impl<double>(cfg, out_dir, precision);
  throw InvalidConfigError("precision must be float32 or float64");
}

void train_single(const Config& cfg, const std::string& mode, const std::string& out_dir) {
  cfg.check_known(known_config_keys());
  fs::create_directories(out_dir);
  const Alphabet alphabet = alphabet_from_config(cfg);
  const ResolvedData data = resolve_data(cfg, out_dir);
  const std::string precision = cfg.get_string("precision", "float32");
  if (precision == "float32") {
    train_mode<float>(cfg, mode, data, alphabet, out_dir, precision);
  } else if (precision == "float64") {
    train_mode<double>(cfg, mode, data, alphabet, out_dir, precision);
  } else {
    throw InvalidConfigError("precision must be float32 or float64");
  }
}

namespace {

// State shared by the model-consuming subcommands: model.cfg + vocab.txt +
// checkpoint.lsdc written by train_mode.
template <typename T>
struct LoadedModel {
  Alphabet alphabet;
  Vocabulary vocab;
  Model<T> model;
  std::size_t text_frame_dim;
};

template <typename T>
LoadedModel<T> load_model_dir(const Config& mc, const std::string& dir) {
  Alphabet alphabet = alphabet_from_config(mc);
  Vocabulary vocab = Vocabulary::load(dir + "/vocab.txt", alphabet);
  ModelConfig cfg;
  cfg.input_dim = mc.get_size("model.input_dim", 8);
  cfg.vocab_size = vocab.size();
  cfg.enc_hidden = mc.get_size("model.enc_hidden", 32);
  cfg.enc_layers = mc.get_size("model.enc_layers", 3);
  cfg.time_reduction = mc.get_size("model.time_reduction", 4);
  cfg.dec_hidden = mc.get_size("model.dec_hidden", 64);
  cfg.attn_dim = mc.get_size("model.attn_dim", 32);
  cfg.embed_dim = mc.get_size("model.embed_dim", 16);
  cfg.validate();
  Model<T> model(cfg, 0);
  load_checkpoint(model.params(), dir + "/checkpoint.lsdc");
  return LoadedModel<T>{std::move(alphabet), std::move(vocab), std::move(model),
                        mc.get_size("data.text_frame_dim", cfg.input_dim)};
}

template <typename T>
void decode_impl(const Config& mc, const std::string& model_dir, const std::string& data_path,
                 const BeamConfig& beam, std::ostream& out) {
  LoadedModel<T> lm = load_model_dir<T>(mc, model_dir);
  const Dataset data = load_tsv(data_path, lm.text_frame_dim);
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    out << "# input " << i << "\treference: " << data.items[i].target << "\n";
    std::vector<Hypothesis> hyps =
        beam_search(lm.model, data.items[i].input_tensor<T>(), lm.vocab, beam);
    if (beam.collapse_merge) {
      std::vector<NbestRow> rows = collapse_nbest(hyps, lm.vocab, true);
      hyps.clear();
      for (const NbestRow& r : rows) hyps.push_back(Hypothesis{r.decomposition, r.log_prob, true});
    }
    out << format_nbest_dump(hyps, lm.vocab);
  }
}

template <typename T>
EvalResult eval_impl(const Config& mc, const std::string& model_dir, const std::string& data_path,
                     const BeamConfig& beam) {
  LoadedModel<T> lm = load_model_dir<T>(mc, model_dir);
  const Dataset data = load_tsv(data_path, lm.text_frame_dim);
  EvalResult res;
  std::size_t word_errors = 0, word_len = 0, char_errors = 0, char_len = 0;
  for (const Example& ex : data.items) {
    std::string hyp;
    try {
      hyp = lm.vocab.collapse(
          beam_search(lm.model, ex.input_tensor<T>(), lm.vocab, beam).front().token_ids);
    } catch (const EmptyBeamError& e) {
      if (!e.partials().empty()) hyp = lm.vocab.collapse(e.partials().front().token_ids);
    }
    const EditDistanceResult w = edit_distance_metrics(hyp, ex.target, EditUnit::kWord);
    const EditDistanceResult c = edit_distance_metrics(hyp, ex.target, EditUnit::kChar);
    word_errors += w.errors;
    word_len += w.ref_len;
    char_errors += c.errors;
    char_len += c.ref_len;
    ++res.examples;
  }
  res.wer = word_len == 0 ? 0.0 : static_cast<double>(word_errors) / static_cast<double>(word_len);
  res.cer = char_len == 0 ? 0.0 : static_cast<double>(char_errors) / static_cast<double>(char_len);
  return res;
}

template <typename T>
void oracle_posterior_impl(const Config& cfg, const std::string& model_dir,
                           const std::string& data_path, std::size_t row,
                           const std::string& target_override, std::size_t limit,
                           std::ostream& out) {
  const std::size_t text_dim = cfg.get_size("data.text_frame_dim", 8);
  const Dataset data = load_tsv(data_path, text_dim);
  if (row >= data.items.size()) {
    throw InvalidInputError("row " + std::to_string(row) + " is out of range (dataset has " +
                            std::to_string(data.items.size()) + " rows)");
  }
  const Example& ex = data.items[row];
  const std::string target = target_override.empty() ? ex.target : target_override;

  auto print = [&](const Vocabulary& vocab, const auto& model) {
    DecompositionSet post = exact_posterior(model, ex.input_tensor<T>(), target, vocab, limit);
    for (std::size_t i = 0; i < post.items.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", std::exp(post.log_weights[i]));
      out << vocab.join_texts(post.items[i], "|") << '\t' << buf << '\n';
    }
  };

  if (!model_dir.empty()) {
    LoadedModel<T> lm = load_model_dir<T>(Config::parse_file(model_dir + "/model.cfg"), model_dir);
    print(lm.vocab, lm.model);
  } else {
    const Alphabet alphabet = alphabet_from_config(cfg);
    Vocabulary vocab = cfg.has("vocab.path")
                           ? Vocabulary::load(cfg.require_string("vocab.path"), alphabet)
                           : make_vocabulary(alphabet, {});
    ModelConfig mc = model_config_from(cfg, ex.frame_dim, vocab.size());
    Model<T> model(mc, static_cast<std::uint64_t>(cfg.get_int("seed", 1)));
    print(vocab, model);
  }
}

Config model_dir_config(const std::string& model_dir) {
  return Config::parse_file(model_dir + "/model.cfg");
}

}  // namespace

void decode_command(const std::string& model_dir, const std::string& data_path,
                    const BeamConfig& beam, std::ostream& out) {
  const Config mc = model_dir_config(model_dir);
  const std::string precision = mc.get_string("precision", "float32");
  if (precision == "float64") {
    decode_impl<double>(mc, model_dir, data_path, beam, out);
  } else {
    decode_impl<float>(mc, model_dir, data_path, beam, out);
  }
}

EvalResult eval_command(const std::string& model_dir, const std::string& data_path,
                        const BeamConfig& beam) {
  const Config mc = model_dir_config(model_dir);
  const std::string precision = mc.get_string("precision", "float32");
  if (precision == "float64") {
    return eval_impl<double>(mc, model_dir, data_path, beam);
  }
  return eval_impl<float>(mc, model_dir, data_path, beam);
}

void oracle_posterior_command(const Config& cfg, const std::string& model_dir,
                              const std::string& data_path, std::size_t row,
                              const std::string& target_override, std::size_t limit,
                              std::ostream& out) {
  std::string precision = cfg.get_string("precision", "float32");
  if (!model_dir.empty()) {
    precision = model_dir_config(model_dir).get_string("precision", "float32");
  }
  if (precision == "float64") {
    oracle_posterior_impl<double>(cfg, model_dir, data_path, row, target_override, limit, out);
  } else {
    oracle_posterior_impl<float>(cfg, model_dir, data_path, row, target_override, limit, out);
  }
}

}  // namespace lsd
