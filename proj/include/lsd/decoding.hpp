#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "lsd/model.hpp"
#include "lsd/token_space.hpp"

namespace lsd {

struct Hypothesis {
  Decomposition token_ids;  // ends with EOS once finished
  double log_prob = 0.0;
  bool finished = false;
};

struct BeamConfig {
  std::size_t beam_width = 8;
  std::size_t max_steps = 64;
  std::size_t n_best = 8;
  bool collapse_merge = false;
  // Raw log-prob comparison by default; per-token normalization is opt-in.
  bool length_normalize = false;

  void validate() const {
    if (beam_width == 0) throw InvalidConfigError("beam_width must be positive");
    if (n_best == 0 || n_best > beam_width) {
      throw InvalidConfigError("n_best must satisfy 1 <= n_best <= beam_width");
    }
    if (max_steps == 0) throw InvalidConfigError("max_steps must be positive");
  }
};

// Raised when no hypothesis reaches EOS within max_steps; carries the best
// unfinished prefixes for diagnostics.
class EmptyBeamError : public Error {
 public:
  EmptyBeamError(std::string message, std::vector<Hypothesis> partials)
      : Error("empty-beam", std::move(message)), partials_(std::move(partials)) {}
  const std::vector<Hypothesis>& partials() const { return partials_; }

 private:
  std::vector<Hypothesis> partials_;
};

namespace detail {

inline bool hypothesis_less(const Hypothesis& a, const Hypothesis& b, bool length_normalize) {
  const double sa = length_normalize ? a.log_prob / static_cast<double>(a.token_ids.size())
                                     : a.log_prob;
  const double sb = length_normalize ? b.log_prob / static_cast<double>(b.token_ids.size())
                                     : b.log_prob;
  if (sa != sb) return sa > sb;
  return a.token_ids < b.token_ids;  // deterministic tie-break
}

}  // namespace detail

// Left-to-right beam search over the whole token space. Each step expands
// every live hypothesis over all tokens and keeps the top beam_width by
// log-prob; hypotheses that emit EOS retire to a finished pool and stop
// competing for beam slots. Returns the top n_best finished hypotheses.
template <typename T>
std::vector<Hypothesis> beam_search(const Model<T>& model, const Tensor<T>& x,
                                    const Vocabulary& v, const BeamConfig& cfg) {
  cfg.validate();
  const TokenId eos = v.eos_id();
  const std::size_t vocab = v.size();

  Tape<T> tape;
  BoundParams<T> p = model.bind(tape);
  EncoderStates<T> enc = model.encode(tape, p, x);

  struct Live {
    Decomposition tokens;
    double log_prob;
    DecoderState<T> state;
    std::optional<TokenId> prev;
  };

  std::vector<Live> live;
  live.push_back(Live{{}, 0.0, model.initial_decoder_state(tape), std::nullopt});
  std::vector<Hypothesis> finished;

  for (std::size_t step = 0; step < cfg.max_steps && !live.empty(); ++step) {
    struct Candidate {
      std::size_t parent;
      TokenId token;
      double log_prob;
      Decomposition tokens;  // filled in lazily for kept candidates
    };
    std::vector<Candidate> expansions;
    expansions.reserve(live.size() * vocab);
    std::vector<StepResult<T>> steps;
    steps.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      StepResult<T> sr = model.decode_step(tape, p, live[i].prev, live[i].state, enc);
      const Tensor<T>& lp = tape.value(sr.log_probs);
      for (TokenId t = 0; t < vocab; ++t) {
        expansions.push_back(Candidate{i, t, live[i].log_prob + static_cast<double>(lp[t]), {}});
      }
      steps.push_back(std::move(sr));
    }
    for (Candidate& c : expansions) {
      c.tokens = live[c.parent].tokens;
      c.tokens.push_back(c.token);
    }
    std::sort(expansions.begin(), expansions.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return a.tokens < b.tokens;
    });

    // The top beam_width candidates overall are kept; those ending in EOS
    // retire to the finished pool and stop competing, the rest stay live.
    std::vector<Live> next;
    next.reserve(cfg.beam_width);
    const std::size_t keep = std::min(cfg.beam_width, expansions.size());
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = expansions[k];
      if (c.token == eos) {
        finished.push_back(Hypothesis{c.tokens, c.log_prob, true});
      } else {
        next.push_back(Live{c.tokens, c.log_prob, steps[c.parent].state, c.token});
      }
    }
    live = std::move(next);
  }

  if (finished.empty()) {
    std::vector<Hypothesis> partials;
    for (const Live& l : live) partials.push_back(Hypothesis{l.tokens, l.log_prob, false});
    std::sort(partials.begin(), partials.end(),
              [&](const Hypothesis& a, const Hypothesis& b) {
                return detail::hypothesis_less(a, b, false);
              });
    throw EmptyBeamError("no hypothesis finished within " + std::to_string(cfg.max_steps) +
                             " steps",
                         std::move(partials));
  }

  std::sort(finished.begin(), finished.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return detail::hypothesis_less(a, b, cfg.length_normalize);
  });
  if (finished.size() > cfg.n_best) finished.resize(cfg.n_best);
  return finished;
}

// Greedy decoding is the width-1 special case; exposed for validation loops.
template <typename T>
Hypothesis greedy_decode(const Model<T>& model, const Tensor<T>& x, const Vocabulary& v,
                         std::size_t max_steps) {
  BeamConfig cfg;
  cfg.beam_width = 1;
  cfg.n_best = 1;
  cfg.max_steps = max_steps;
  return beam_search(model, x, v, cfg).front();
}

struct NbestRow {
  std::string output;
  Decomposition decomposition;
  double log_prob;
};

// With merge=false one row per decomposition; with merge=true rows are
// deduplicated by collapsed string, keeping each string's best-scoring
// decomposition (input order is score order).
std::vector<NbestRow> collapse_nbest(const std::vector<Hypothesis>& hyps, const Vocabulary& v,
                                     bool merge);

// Appendix-style dump: "rank<TAB>pieces joined by |<TAB>log_prob" with six
// decimal places; EOS is not rendered.
std::string format_nbest_dump(const std::vector<Hypothesis>& hyps, const Vocabulary& v);

struct EditDistanceResult {
  std::size_t errors = 0;
  std::size_t ref_len = 0;
  double rate = 0.0;
};

enum class EditUnit { kWord, kChar };

// Unit-level Levenshtein distance (all edits cost 1). rate = errors/ref_len;
// an empty reference with a nonempty hypothesis reports rate = errors.
EditDistanceResult edit_distance_metrics(const std::string& hyp, const std::string& ref,
                                         EditUnit unit);

// Fraction of non-space characters covered by tokens of each length; space
// and EOS tokens are excluded. Fractions sum to 1 when any characters exist.
std::map<std::size_t, double> coverage_distribution(const std::vector<Decomposition>& decomps,
                                                    const Vocabulary& v);

}  // namespace lsd
