#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lsd/decoding.hpp"
#include "lsd/rng.hpp"
#include "test_util.hpp"

using namespace lsd;

namespace {

// |Z| = 5: singletons a, b, space, the piece "ab", and EOS.
Vocabulary small_vocab() { return make_vocabulary(Alphabet("ab ", ' '), {"ab"}); }

ModelConfig tiny_config(std::size_t vocab_size) {
  ModelConfig cfg;
  cfg.input_dim = 3;
  cfg.vocab_size = vocab_size;
  cfg.enc_hidden = 3;
  cfg.enc_layers = 1;
  cfg.time_reduction = 1;
  cfg.dec_hidden = 4;
  cfg.attn_dim = 3;
  cfg.embed_dim = 3;
  return cfg;
}

Tensor<double> random_input(Rng& rng, std::size_t frames, std::size_t dim) {
  Tensor<double> x({frames, dim});
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.0, 1.0);
  return x;
}

// All complete sequences with at most max_steps tokens (EOS last), scored by
// the model; the exact search oracle beam search approximates.
std::vector<Hypothesis> exhaustive_complete(const Model<double>& model, const Tensor<double>& x,
                                            const Vocabulary& v, std::size_t max_steps) {
  std::vector<Hypothesis> out;
  std::vector<Decomposition> frontier{{}};
  for (std::size_t len = 1; len <= max_steps; ++len) {
    std::vector<Decomposition> next;
    for (const Decomposition& prefix : frontier) {
      Decomposition complete = prefix;
      complete.push_back(v.eos_id());
      out.push_back(Hypothesis{complete,
                               model.log_prob_sequence(x, complete, v.eos_id()), true});
      if (len == max_steps) continue;
      for (TokenId t = 0; t < v.size(); ++t) {
        if (t == v.eos_id()) continue;
        Decomposition ext = prefix;
        ext.push_back(t);
        next.push_back(std::move(ext));
      }
    }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.token_ids < b.token_ids;
  });
  return out;
}

}  // namespace

TEST_CASE("full-width beam search finds the exhaustive argmax") {
  const Vocabulary v = small_vocab();
  REQUIRE(v.size() == 5);
  Rng rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    Model<double> model(tiny_config(v.size()), 500 + trial);
    const Tensor<double> x = random_input(rng, 4, 3);
    const std::size_t max_steps = 4;

    const std::vector<Hypothesis> oracle = exhaustive_complete(model, x, v, max_steps);
    BeamConfig cfg;
    cfg.beam_width = 625;  // 5^4 dominates every frontier
    cfg.n_best = 5;
    cfg.max_steps = max_steps;
    const std::vector<Hypothesis> beam = beam_search(model, x, v, cfg);

    REQUIRE(!beam.empty());
    CHECK(beam.front().token_ids == oracle.front().token_ids);
    CHECK(beam.front().log_prob == doctest::Approx(oracle.front().log_prob).epsilon(1e-12));
    // The n-best prefix agrees too.
    for (std::size_t i = 0; i < beam.size(); ++i) {
      CHECK(beam[i].token_ids == oracle[i].token_ids);
    }
  }
}

TEST_CASE("wider beams never lower the best hypothesis") {
  const Vocabulary v = small_vocab();
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    Model<double> model(tiny_config(v.size()), 700 + trial);
    const Tensor<double> x = random_input(rng, 5, 3);
    double prev = -1e300;
    for (std::size_t width : {1ul, 2ul, 4ul, 625ul}) {
      BeamConfig cfg;
      cfg.beam_width = width;
      cfg.n_best = 1;
      cfg.max_steps = 4;
      const std::vector<Hypothesis> hyps = beam_search(model, x, v, cfg);
      REQUIRE(!hyps.empty());
      CHECK(hyps.front().log_prob >= prev - 1e-12);
      prev = hyps.front().log_prob;
    }
  }
}

TEST_CASE("beam width one is stepwise greedy decoding") {
  const Vocabulary v = small_vocab();
  Rng rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    Model<double> model(tiny_config(v.size()), 900 + trial);
    const Tensor<double> x = random_input(rng, 5, 3);

    // Manual greedy rollout.
    Tape<double> tape;
    BoundParams<double> p = model.bind(tape);
    const EncoderStates<double> enc = model.encode(tape, p, x);
    DecoderState<double> state = model.initial_decoder_state(tape);
    std::optional<TokenId> prev;
    Decomposition greedy;
    for (std::size_t step = 0; step < 16; ++step) {
      const StepResult<double> sr = model.decode_step(tape, p, prev, state, enc);
      const Tensor<double>& lp = tape.value(sr.log_probs);
      TokenId best = 0;
      for (TokenId t = 1; t < v.size(); ++t) {
        if (lp[t] > lp[best]) best = t;
      }
      greedy.push_back(best);
      if (best == v.eos_id()) break;
      state = sr.state;
      prev = best;
    }

    if (greedy.back() == v.eos_id()) {
      const Hypothesis hyp = greedy_decode(model, x, v, 16);
      CHECK(hyp.token_ids == greedy);
    }
  }
}

TEST_CASE("n-best log probs are non-increasing and recompute exactly") {
  const Vocabulary v = small_vocab();
  Model<double> model(tiny_config(v.size()), 53);
  Rng rng(53);
  const Tensor<double> x = random_input(rng, 5, 3);
  BeamConfig cfg;
  cfg.beam_width = 8;
  cfg.n_best = 8;
  cfg.max_steps = 6;
  const std::vector<Hypothesis> hyps = beam_search(model, x, v, cfg);
  REQUIRE(hyps.size() >= 2);
  for (std::size_t i = 1; i < hyps.size(); ++i) {
    CHECK(hyps[i - 1].log_prob >= hyps[i].log_prob);
  }
  for (const Hypothesis& h : hyps) {
    CHECK(h.finished);
    const double recomputed = model.log_prob_sequence(x, h.token_ids, v.eos_id());
    CHECK(std::abs(h.log_prob - recomputed) <= 1e-9);
  }
}

TEST_CASE("an unreachable EOS raises an empty-beam error carrying partials") {
  const Vocabulary v = small_vocab();
  Model<double> model(tiny_config(v.size()), 54);
  // Push the EOS logit far down so that narrow beams never select it.
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    if (model.params().name(i) == "out.b") {
      model.params().tensor(i)[v.eos_id()] = -1e3;
    }
  }
  Rng rng(54);
  const Tensor<double> x = random_input(rng, 4, 3);
  BeamConfig cfg;
  cfg.beam_width = 2;
  cfg.n_best = 1;
  cfg.max_steps = 4;
  try {
    (void)beam_search(model, x, v, cfg);
    FAIL("expected EmptyBeamError");
  } catch (const EmptyBeamError& e) {
    CHECK(!e.partials().empty());
    CHECK(e.partials().front().token_ids.size() == cfg.max_steps);
    CHECK_FALSE(e.partials().front().finished);
  }
}

TEST_CASE("collapse_nbest keeps or merges duplicate surface strings") {
  const Vocabulary v = small_vocab();
  const TokenId a = v.singleton('a');
  const TokenId b = v.singleton('b');
  const TokenId ab = *v.find("ab");
  std::vector<Hypothesis> hyps{
      Hypothesis{{ab, v.eos_id()}, -0.5, true},
      Hypothesis{{a, b, v.eos_id()}, -1.5, true},
      Hypothesis{{b, v.eos_id()}, -2.0, true},
  };

  const std::vector<NbestRow> unmerged = collapse_nbest(hyps, v, false);
  REQUIRE(unmerged.size() == 3);
  CHECK(unmerged[0].output == "ab");
  CHECK(unmerged[1].output == "ab");
  CHECK(unmerged[2].output == "b");

  const std::vector<NbestRow> merged = collapse_nbest(hyps, v, true);
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].output == "ab");
  CHECK(merged[0].log_prob == doctest::Approx(-0.5));
  CHECK(merged[1].output == "b");

  CHECK(collapse_nbest({}, v, false).empty());
  Hypothesis unfinished{{a}, -1.0, false};
  CHECK_THROWS_AS((void)collapse_nbest({unfinished}, v, true), InvalidInputError);
}

TEST_CASE("the n-best dump renders ranks, pieces and spaces in the table style") {
  const Vocabulary v = small_vocab();
  const TokenId a = v.singleton('a');
  const TokenId b = v.singleton('b');
  const TokenId sp = v.space_id();
  const TokenId ab = *v.find("ab");
  const std::vector<Hypothesis> hyps{
      Hypothesis{{ab, sp, a, v.eos_id()}, -1.25, true},
      Hypothesis{{a, b, sp, a, v.eos_id()}, -2.0, true},
  };
  const std::string dump = format_nbest_dump(hyps, v);
  CHECK(dump ==
        "1\tab| |a\t-1.250000\n"
        "2\ta|b| |a\t-2.000000\n");
}

TEST_CASE("edit distance metrics cover the worked examples") {
  const EditDistanceResult same = edit_distance_metrics("abc", "abc", EditUnit::kChar);
  CHECK(same.errors == 0);
  CHECK(same.rate == 0.0);

  const EditDistanceResult wer = edit_distance_metrics("a cat", "the cat", EditUnit::kWord);
  CHECK(wer.errors == 1);
  CHECK(wer.ref_len == 2);
  CHECK(wer.rate == doctest::Approx(0.5));

  const EditDistanceResult cer = edit_distance_metrics("cat", "cut", EditUnit::kChar);
  CHECK(cer.errors == 1);
  CHECK(cer.ref_len == 3);
  CHECK(cer.rate == doctest::Approx(1.0 / 3.0));

  const EditDistanceResult empty_ref = edit_distance_metrics("ab", "", EditUnit::kChar);
  CHECK(empty_ref.ref_len == 0);
  CHECK(empty_ref.rate == doctest::Approx(2.0));  // documented convention

  const EditDistanceResult ins = edit_distance_metrics("the big cat", "the cat", EditUnit::kWord);
  CHECK(ins.errors == 1);
  CHECK(ins.rate == doctest::Approx(0.5));
}

TEST_CASE("coverage distribution buckets characters by token length") {
  const Vocabulary v = small_vocab();
  const TokenId a = v.singleton('a');
  const TokenId b = v.singleton('b');
  const TokenId sp = v.space_id();
  const TokenId ab = *v.find("ab");

  const auto unigram = coverage_distribution({{a, b, v.eos_id()}}, v);
  REQUIRE(unigram.size() == 1);
  CHECK(unigram.at(1) == doctest::Approx(1.0));

  // "ca","t"-styled split: one bigram + one unigram over three characters.
  const auto mixed = coverage_distribution({{ab, a, v.eos_id()}}, v);
  CHECK(mixed.at(2) == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.at(1) == doctest::Approx(1.0 / 3.0));

  // Space and EOS are excluded from the statistic.
  const auto spaced = coverage_distribution({{ab, sp, ab, v.eos_id()}}, v);
  CHECK(spaced.at(2) == doctest::Approx(1.0));
  CHECK(spaced.count(1) == 0);

  double total = 0.0;
  for (const auto& [len, frac] : mixed) total += frac;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}
