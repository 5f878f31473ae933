#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "lsd/model.hpp"
#include "lsd/rng.hpp"
#include "lsd/token_space.hpp"

namespace lsd {

using BigInt = boost::multiprecision::cpp_int;

// Exact number of decompositions of y: N[|y|] = 1,
// N[pos] = sum over valid extensions t at pos of N[pos + |t|].
BigInt count_decompositions(const std::string& y, const Vocabulary& v);

struct DecompositionSet {
  std::string target;
  std::vector<Decomposition> items;
  std::vector<double> log_weights;  // empty unless a posterior was computed
};

constexpr std::size_t kDefaultEnumerationLimit = 100000;

// All decompositions of y in lexicographic token-id order, each terminated
// with EOS. Refuses (CapacityError carrying the DP count) when the count
// exceeds `limit`.
DecompositionSet enumerate_decompositions(const std::string& y, const Vocabulary& v,
                                          std::size_t limit = kDefaultEnumerationLimit);

// log p(y|x) = log sum over {z : collapse(z) = y} of p(z|x), via one encode
// and log-sum-exp over per-path sequence log probabilities.
template <typename T>
double exact_log_marginal(const Model<T>& model, const Tensor<T>& x, const std::string& y,
                          const Vocabulary& v, std::size_t limit = kDefaultEnumerationLimit) {
  DecompositionSet set = enumerate_decompositions(y, v, limit);
  Tape<T> tape;
  BoundParams<T> p = model.bind(tape);
  EncoderStates<T> enc = model.encode(tape, p, x);
  std::vector<double> log_probs;
  log_probs.reserve(set.items.size());
  for (const Decomposition& z : set.items) {
    log_probs.push_back(
        static_cast<double>(tape.value(model.log_prob_sequence_var(tape, p, enc, z, v.eos_id()))[0]));
  }
  double mx = log_probs[0];
  for (double lp : log_probs) mx = std::max(mx, lp);
  double sum = 0;
  for (double lp : log_probs) sum += std::exp(lp - mx);
  return mx + std::log(sum);
}

// Enumerated decompositions with normalized posterior log-weights:
// log_weights[i] = log p(z_i|x) - log p(y|x).
template <typename T>
DecompositionSet exact_posterior(const Model<T>& model, const Tensor<T>& x, const std::string& y,
                                 const Vocabulary& v,
                                 std::size_t limit = kDefaultEnumerationLimit) {
  DecompositionSet set = enumerate_decompositions(y, v, limit);
  Tape<T> tape;
  BoundParams<T> p = model.bind(tape);
  EncoderStates<T> enc = model.encode(tape, p, x);
  set.log_weights.reserve(set.items.size());
  for (const Decomposition& z : set.items) {
    set.log_weights.push_back(
        static_cast<double>(tape.value(model.log_prob_sequence_var(tape, p, enc, z, v.eos_id()))[0]));
  }
  double mx = set.log_weights[0];
  for (double lw : set.log_weights) mx = std::max(mx, lw);
  double sum = 0;
  for (double lw : set.log_weights) sum += std::exp(lw - mx);
  const double log_marginal = mx + std::log(sum);
  for (double& lw : set.log_weights) lw -= log_marginal;
  return set;
}

// Gradient of log p(y|x) w.r.t. the flattened parameters: the posterior-
// weighted average of per-path gradients, accumulated in enumeration order.
template <typename T>
std::vector<T> exact_gradient(const Model<T>& model, const Tensor<T>& x, const std::string& y,
                              const Vocabulary& v,
                              std::size_t limit = kDefaultEnumerationLimit) {
  DecompositionSet post = exact_posterior(model, x, y, v, limit);
  std::vector<T> grad(model.params().total_elements(), T(0));
  ParamSet<T> path_grads = model.make_like();
  for (std::size_t i = 0; i < post.items.size(); ++i) {
    Tape<T> tape;
    BoundParams<T> p = model.bind(tape);
    VarId lp = model.log_prob_sequence_var(tape, p, x, post.items[i], v.eos_id());
    tape.backward(lp);
    path_grads.zero_all();
    p.add_grads_to(tape, path_grads);
    const std::vector<T> flat = path_grads.flatten();
    const T w = static_cast<T>(std::exp(post.log_weights[i]));
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += w * flat[j];
  }
  return grad;
}

// Draws one decomposition from the exact posterior by inverse CDF over the
// deterministic enumeration order, using a single uniform variate.
template <typename T>
Decomposition sample_posterior(const Model<T>& model, const Tensor<T>& x, const std::string& y,
                               const Vocabulary& v, Rng& rng,
                               std::size_t limit = kDefaultEnumerationLimit) {
  DecompositionSet post = exact_posterior(model, x, y, v, limit);
  const double u = rng.uniform();
  double cum = 0;
  for (std::size_t i = 0; i < post.items.size(); ++i) {
    cum += std::exp(post.log_weights[i]);
    if (u < cum) return post.items[i];
  }
  return post.items.back();  // guard against rounding at the tail
}

}  // namespace lsd
