#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lsd/decoding.hpp"
#include "lsd/model.hpp"
#include "lsd/rng.hpp"
#include "lsd/token_space.hpp"

namespace lsd {

enum class ScheduleShape { kLinear, kExponential };

// Monotone interpolation from start to end over decay_steps, constant after.
struct Schedule {
  double start = 1.0;
  double end = 0.1;
  std::size_t decay_steps = 1000;
  ScheduleShape shape = ScheduleShape::kLinear;

  double at(std::size_t step) const {
    if (decay_steps == 0 || step >= decay_steps) return end;
    const double f = static_cast<double>(step) / static_cast<double>(decay_steps);
    if (shape == ScheduleShape::kLinear) {
      return start + (end - start) * f;
    }
    return start * std::pow(end / start, f);
  }

  void validate_epsilon() const {
    if (!(0.0 <= end && end <= start && start <= 1.0)) {
      throw InvalidConfigError("epsilon schedule requires 0 <= end <= start <= 1");
    }
  }

  void validate_positive() const {
    if (start <= 0.0 || end <= 0.0) {
      throw InvalidConfigError("schedule endpoints must be positive");
    }
    if (shape == ScheduleShape::kExponential && end > start) {
      throw InvalidConfigError("exponential schedule requires end <= start");
    }
  }
};

struct OptimizerConfig {
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  ScheduleShape lr_shape = ScheduleShape::kLinear;
  double grad_clip_norm = 1.0;
  double weight_noise_std = 0.075;
  double l2_decay = 1e-5;
};

struct TrainStats {
  std::size_t step = 0;
  double epsilon = 0.0;
  bool epsilon_active = false;  // false in maxext / char-baseline modes
  double lr = 0.0;
  double loss = 0.0;
  double len_ratio = 0.0;
  double grad_norm = 0.0;  // global norm before clipping
  double wall_ms = 0.0;

  static const char* csv_header() { return "step,epsilon,lr,loss,len_ratio,grad_norm,wall_ms"; }

  std::string csv_row() const {
    std::ostringstream out;
    out << step << ',';
    if (epsilon_active) {
      out << format(epsilon);
    } else {
      out << "n/a";
    }
    out << ',' << format(lr) << ',' << format(loss) << ',' << format(len_ratio) << ','
        << format(grad_norm) << ',' << format(wall_ms);
    return out.str();
  }

 private:
  static std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
  }
};

// Left-to-right constrained sampling: at each step the model's next-token
// distribution is restricted to the valid extensions and renormalized; with
// probability epsilon the step instead draws uniformly over the extensions.
// The result always collapses to y and ends with EOS.
template <typename T>
Decomposition sample_decomposition(const Model<T>& model, const Tensor<T>& x,
                                   const std::string& y, const Vocabulary& v, double epsilon,
                                   Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw InvalidInputError("epsilon must lie in [0, 1]");
  }
  Tape<T> tape;
  BoundParams<T> p = model.bind(tape);
  EncoderStates<T> enc = model.encode(tape, p, x);
  DecoderState<T> state = model.initial_decoder_state(tape);
  std::optional<TokenId> prev;
  Decomposition z;
  std::size_t pos = 0;
  while (true) {
    const std::vector<TokenId> exts = v.valid_extensions(y, pos);
    StepResult<T> step = model.decode_step(tape, p, prev, state, enc);
    std::size_t choice;
    if (rng.uniform() < epsilon) {
      choice = static_cast<std::size_t>(rng.uniform_index(exts.size()));
    } else {
      const Tensor<T>& lp = tape.value(step.log_probs);
      Tensor<double> restricted({exts.size()});
      for (std::size_t i = 0; i < exts.size(); ++i) {
        restricted[i] = static_cast<double>(lp[exts[i]]);
      }
      Tape<double>::softmax_inplace(restricted);
      const double u = rng.uniform();
      double cum = 0.0;
      choice = exts.size() - 1;
      for (std::size_t i = 0; i < exts.size(); ++i) {
        cum += restricted[i];
        if (u < cum) {
          choice = i;
          break;
        }
      }
    }
    const TokenId token = exts[choice];
    z.push_back(token);
    if (token == v.eos_id()) break;
    pos += v.token(token).length();
    state = step.state;
    prev = token;
  }
  return z;
}

// Backpropagates -log p(z|x) for one sampled path and leaves that gradient
// in the model's buffers (zeroed first). Returns the loss value.
template <typename T>
T estimate_gradient(Model<T>& model, const Tensor<T>& x, const std::string& y,
                    const Decomposition& z, const Vocabulary& v) {
  if (!v.is_valid_decomposition(z, y)) {
    throw InvalidInputError("sampled decomposition does not collapse to the target");
  }
  Tape<T> tape;
  BoundParams<T> p = model.bind(tape);
  VarId lp = model.log_prob_sequence_var(tape, p, x, z, v.eos_id());
  VarId loss = tape.scale(lp, T(-1));
  tape.backward(loss);
  model.grads().zero_all();
  p.add_grads_to(tape, model.grads());
  return tape.value(loss)[0];
}

template <typename T>
struct TrainExample {
  Tensor<T> input;
  std::string target;
};

enum class DecompositionSource { kSampled, kMaxExt };

struct TrainerOptions {
  OptimizerConfig optimizer;
  Schedule epsilon;           // used only when source == kSampled
  Schedule learning_rate;
  DecompositionSource source = DecompositionSource::kSampled;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

// Owns the optimizer state and the per-step pipeline: weight-noise snapshot,
// per-example decomposition + gradient, L2, global-norm clip, Adam update.
template <typename T>
class Trainer {
 public:
  Trainer(Model<T>& model, const Vocabulary& vocab, TrainerOptions opts)
      : model_(model), vocab_(vocab), opts_(opts) {
    opts_.learning_rate = normalize_lr(opts_.learning_rate, opts_.optimizer);
    if (opts_.source == DecompositionSource::kSampled) opts_.epsilon.validate_epsilon();
    adam_m_ = model.make_like();
    adam_v_ = model.make_like();
    if (opts_.threads == 0) opts_.threads = 1;
  }

  std::size_t step_count() const { return step_; }

  TrainStats train_step(const std::vector<const TrainExample<T>*>& batch) {
    if (batch.empty()) throw InvalidInputError("empty training batch");
    const auto t0 = std::chrono::steady_clock::now();

    TrainStats stats;
    stats.step = step_;
    stats.lr = opts_.learning_rate.at(step_);
    stats.epsilon_active = opts_.source == DecompositionSource::kSampled;
    stats.epsilon = stats.epsilon_active ? opts_.epsilon.at(step_) : 0.0;

    // One weight-noise realization per step, shared across the batch; the
    // gradient is taken at the noisy point and applied to the clean weights.
    Model<T> noisy = model_;
    if (opts_.optimizer.weight_noise_std > 0.0) {
      Rng noise_rng(Rng::derive(opts_.seed, step_, 0x6e6f6973));
      ParamSet<T>& np = noisy.params();
      for (std::size_t i = 0; i < np.size(); ++i) {
        if (np.is_bias(i)) continue;
        Tensor<T>& t = np.tensor(i);
        for (std::size_t j = 0; j < t.numel(); ++j) {
          t[j] += static_cast<T>(noise_rng.gaussian(0.0, opts_.optimizer.weight_noise_std));
        }
      }
    }

    struct PerExample {
      ParamSet<T> grads;
      double loss = 0.0;
      double len_ratio = 0.0;
    };
    std::vector<PerExample> results(batch.size());
    auto run_example = [&](std::size_t i) {
      const TrainExample<T>& ex = *batch[i];
      Rng ex_rng(Rng::derive(opts_.seed, step_, i));
      Decomposition z;
      if (opts_.source == DecompositionSource::kSampled) {
        z = sample_decomposition(noisy, ex.input, ex.target, vocab_, stats.epsilon, ex_rng);
      } else {
        z = vocab_.max_ext(ex.target);
      }
      Tape<T> tape;
      BoundParams<T> p = noisy.bind(tape);
      VarId lp = noisy.log_prob_sequence_var(tape, p, ex.input, z, vocab_.eos_id());
      VarId loss = tape.scale(lp, T(-1));
      tape.backward(loss);
      results[i].grads = noisy.make_like();
      p.add_grads_to(tape, results[i].grads);
      results[i].loss = static_cast<double>(tape.value(loss)[0]);
      results[i].len_ratio = ex.target.empty()
                                 ? 1.0
                                 : static_cast<double>(z.size() - 1) /
                                       static_cast<double>(ex.target.size());
    };
    run_parallel(batch.size(), run_example);

    // Fixed-order accumulation keeps results identical across thread counts.
    ParamSet<T>& grads = model_.grads();
    grads.zero_all();
    const T inv_batch = T(1) / static_cast<T>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t k = 0; k < grads.size(); ++k) {
        Tensor<T>& dst = grads.tensor(k);
        const Tensor<T>& src = results[i].grads.tensor(k);
        for (std::size_t j = 0; j < dst.numel(); ++j) dst[j] += inv_batch * src[j];
      }
      stats.loss += results[i].loss;
      stats.len_ratio += results[i].len_ratio;
      if (!std::isfinite(results[i].loss)) {
        throw StateError("non-finite loss at step " + std::to_string(step_) + ", batch example " +
                         std::to_string(i));
      }
    }
    stats.loss /= static_cast<double>(batch.size());
    stats.len_ratio /= static_cast<double>(batch.size());

    if (opts_.optimizer.l2_decay > 0.0) {
      for (std::size_t k = 0; k < grads.size(); ++k) {
        Tensor<T>& g = grads.tensor(k);
        const Tensor<T>& w = model_.params().tensor(k);
        for (std::size_t j = 0; j < g.numel(); ++j) {
          g[j] += static_cast<T>(opts_.optimizer.l2_decay) * w[j];
        }
      }
    }

    double norm_sq = 0.0;
    for (std::size_t k = 0; k < grads.size(); ++k) {
      const Tensor<T>& g = grads.tensor(k);
      for (std::size_t j = 0; j < g.numel(); ++j) {
        norm_sq += static_cast<double>(g[j]) * static_cast<double>(g[j]);
      }
    }
    stats.grad_norm = std::sqrt(norm_sq);
    if (!std::isfinite(stats.grad_norm)) {
      throw StateError("non-finite gradient norm at step " + std::to_string(step_));
    }
    if (opts_.optimizer.grad_clip_norm > 0.0 && stats.grad_norm > opts_.optimizer.grad_clip_norm) {
      const T scale = static_cast<T>(opts_.optimizer.grad_clip_norm / stats.grad_norm);
      for (std::size_t k = 0; k < grads.size(); ++k) {
        Tensor<T>& g = grads.tensor(k);
        for (std::size_t j = 0; j < g.numel(); ++j) g[j] *= scale;
      }
    }

    adam_update(stats.lr);
    ++step_;

    stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              t0)
                        .count();
    return stats;
  }

 private:
  static Schedule normalize_lr(Schedule lr, const OptimizerConfig& opt) {
    lr.start = opt.lr_start;
    lr.end = opt.lr_end;
    lr.shape = opt.lr_shape;
    lr.validate_positive();
    return lr;
  }

  void run_parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (opts_.threads <= 1 || n <= 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    const std::size_t workers = std::min(opts_.threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  void adam_update(double lr) {
    const double b1 = opts_.optimizer.adam_beta1;
    const double b2 = opts_.optimizer.adam_beta2;
    const double t = static_cast<double>(step_ + 1);
    const double corr1 = 1.0 - std::pow(b1, t);
    const double corr2 = 1.0 - std::pow(b2, t);
    ParamSet<T>& params = model_.params();
    const ParamSet<T>& grads = model_.grads();
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T>& w = params.tensor(k);
      const Tensor<T>& g = grads.tensor(k);
      Tensor<T>& m = adam_m_.tensor(k);
      Tensor<T>& v = adam_v_.tensor(k);
      for (std::size_t j = 0; j < w.numel(); ++j) {
        const double gj = static_cast<double>(g[j]);
        const double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * gj;
        const double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * gj * gj;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double mhat = mj / corr1;
        const double vhat = vj / corr2;
        w[j] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + opts_.optimizer.adam_eps));
      }
    }
  }

  Model<T>& model_;
  const Vocabulary& vocab_;
  TrainerOptions opts_;
  ParamSet<T> adam_m_;
  ParamSet<T> adam_v_;
  std::size_t step_ = 0;
};

struct TrainRunOptions {
  std::size_t total_steps = 1000;
  std::size_t batch_size = 8;
  std::size_t eval_interval = 100;
  std::size_t patience = 10;  // evaluations without dev improvement
  std::size_t decode_max_steps = 96;
};

struct TrainRunResult {
  std::size_t steps_run = 0;
  double best_dev_cer = 1.0;
  std::size_t best_step = 0;
};

// Greedy-decodes an input, falling back to the best partial prefix when no
// hypothesis finishes within the step cap (common early in training).
template <typename T>
std::string decode_or_partial(const Model<T>& model, const Tensor<T>& x, const Vocabulary& v,
                              std::size_t max_steps) {
  try {
    return v.collapse(greedy_decode(model, x, v, max_steps).token_ids);
  } catch (const EmptyBeamError& e) {
    return e.partials().empty() ? std::string() : v.collapse(e.partials().front().token_ids);
  }
}

// Corpus-level character error rate of greedy decodes.
template <typename T>
double evaluate_cer(const Model<T>& model, const std::vector<TrainExample<T>>& split,
                    const Vocabulary& v, std::size_t decode_max_steps) {
  std::size_t errors = 0, ref_len = 0;
  for (const TrainExample<T>& ex : split) {
    const std::string hyp = decode_or_partial(model, ex.input, v, decode_max_steps);
    const EditDistanceResult r = edit_distance_metrics(hyp, ex.target, EditUnit::kChar);
    errors += r.errors;
    ref_len += r.ref_len;
  }
  return ref_len == 0 ? static_cast<double>(errors)
                      : static_cast<double>(errors) / static_cast<double>(ref_len);
}

// Full training loop: deterministic per-epoch shuffling, periodic dev
// evaluation with early stopping, best-checkpoint tracking. Stats rows go to
// `stats_sink` (one call per step); the best parameter snapshot is left in
// the model on return.
template <typename T>
TrainRunResult train_run(Model<T>& model, const Vocabulary& vocab,
                         const std::vector<TrainExample<T>>& train,
                         const std::vector<TrainExample<T>>& dev, TrainerOptions trainer_opts,
                         TrainRunOptions run_opts,
                         const std::function<void(const TrainStats&)>& stats_sink) {
  if (train.empty()) throw InvalidInputError("training split is empty");
  Trainer<T> trainer(model, vocab, trainer_opts);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = 0, epoch = 0;
  auto reshuffle = [&]() {
    Rng rng(Rng::derive(trainer_opts.seed, 0x73687566, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_index(i))]);
    }
    cursor = 0;
  };
  reshuffle();

  TrainRunResult result;
  ParamSet<T> best = model.params();
  double best_cer = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0, evals_since_best = 0;
  bool stopped = false;

  for (std::size_t step = 0; step < run_opts.total_steps && !stopped; ++step) {
    std::vector<const TrainExample<T>*> batch;
    batch.reserve(run_opts.batch_size);
    for (std::size_t b = 0; b < run_opts.batch_size; ++b) {
      if (cursor == order.size()) {
        ++epoch;
        reshuffle();
      }
      batch.push_back(&train[order[cursor++]]);
    }
    TrainStats stats = trainer.train_step(batch);
    if (stats_sink) stats_sink(stats);
    result.steps_run = step + 1;

    const bool at_eval = !dev.empty() && run_opts.eval_interval > 0 &&
                         ((step + 1) % run_opts.eval_interval == 0 ||
                          step + 1 == run_opts.total_steps);
    if (at_eval) {
      const double cer = evaluate_cer(model, dev, vocab, run_opts.decode_max_steps);
      if (cer < best_cer) {
        best_cer = cer;
        best = model.params();
        best_step = step + 1;
        evals_since_best = 0;
      } else if (++evals_since_best >= run_opts.patience) {
        stopped = true;
      }
    }
  }

  if (!dev.empty()) {
    model.params() = best;
    result.best_dev_cer = best_cer;
    result.best_step = best_step;
  } else {
    result.best_dev_cer = std::numeric_limits<double>::quiet_NaN();
    result.best_step = result.steps_run;
  }
  return result;
}

}  // namespace lsd
