#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsd/autodiff.hpp"
#include "lsd/rng.hpp"
#include "lsd/tensor.hpp"
#include "lsd/token_space.hpp"

namespace lsd {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

struct ModelConfig {
  std::size_t input_dim = 8;
  std::size_t vocab_size = 0;
  std::size_t enc_hidden = 32;  // per direction
  std::size_t enc_layers = 3;
  std::size_t time_reduction = 4;  // power of two; realized between encoder layers
  std::size_t dec_hidden = 64;
  std::size_t attn_dim = 32;
  std::size_t embed_dim = 16;

  std::size_t enc_out_dim() const { return 2 * enc_hidden; }

  std::size_t reduction_stages() const {
    std::size_t k = 0, r = time_reduction;
    while (r > 1) {
      r /= 2;
      ++k;
    }
    return k;
  }

  void validate() const {
    if (vocab_size == 0) throw InvalidConfigError("vocab_size must be set");
    if (input_dim == 0 || enc_hidden == 0 || dec_hidden == 0 || attn_dim == 0 || embed_dim == 0) {
      throw InvalidConfigError("model dimensions must be positive");
    }
    if (enc_layers == 0) throw InvalidConfigError("encoder needs at least one layer");
    std::size_t r = time_reduction;
    while (r > 1 && r % 2 == 0) r /= 2;
    if (r != 1) throw InvalidConfigError("time_reduction must be a power of two");
    if (reduction_stages() > enc_layers) {
      throw InvalidConfigError("time_reduction needs at least log2(reduction) encoder layers");
    }
  }
};

// Named tensors with stable registration order; the order defines the
// checkpoint manifest and the flattened coordinate layout.
template <typename T>
class ParamSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, bool is_bias) {
    if (index_.count(name)) throw InvalidConfigError("duplicate parameter name " + name);
    index_.emplace(name, items_.size());
    items_.push_back(Item{std::move(name), Tensor<T>(std::move(shape)), is_bias});
    return items_.size() - 1;
  }

  std::size_t size() const { return items_.size(); }
  const std::string& name(std::size_t i) const { return items_[i].name; }
  Tensor<T>& tensor(std::size_t i) { return items_[i].tensor; }
  const Tensor<T>& tensor(std::size_t i) const { return items_[i].tensor; }
  bool is_bias(std::size_t i) const { return items_[i].is_bias; }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const Item& it : items_) n += it.tensor.numel();
    return n;
  }

  std::vector<T> flatten() const {
    std::vector<T> out;
    out.reserve(total_elements());
    for (const Item& it : items_) {
      out.insert(out.end(), it.tensor.vec().begin(), it.tensor.vec().end());
    }
    return out;
  }

  void load_flat(const std::vector<T>& flat) {
    if (flat.size() != total_elements()) throw InvalidInputError("flat size mismatch");
    std::size_t off = 0;
    for (Item& it : items_) {
      std::copy(flat.begin() + off, flat.begin() + off + it.tensor.numel(),
                it.tensor.vec().begin());
      off += it.tensor.numel();
    }
  }

  void zero_all() {
    for (Item& it : items_) it.tensor.fill(T(0));
  }

 private:
  struct Item {
    std::string name;
    Tensor<T> tensor;
    bool is_bias;
  };
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// All parameters of one model bound onto one tape as leaves. After
// tape.backward(), add_grads_to() routes the leaf gradients into a gradient
// ParamSet; this is the single accumulation point the trainer owns.
template <typename T>
class BoundParams {
 public:
  BoundParams(Tape<T>& tape, const ParamSet<T>& params) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      vars_.push_back(tape.leaf(params.tensor(i)));
    }
  }

  VarId operator[](std::size_t i) const { return vars_[i]; }

  void add_grads_to(const Tape<T>& tape, ParamSet<T>& dst, T scale = T(1)) const {
    if (!tape.backward_done()) throw StateError("no backward pass recorded on this tape");
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const Tensor<T>& g = tape.grad(vars_[i]);
      Tensor<T>& d = dst.tensor(i);
      for (std::size_t j = 0; j < g.numel(); ++j) d[j] += scale * g[j];
    }
  }

 private:
  std::vector<VarId> vars_;
};

template <typename T>
struct EncoderStates {
  std::vector<VarId> h;  // one [enc_out_dim] vector per reduced time step
};

template <typename T>
struct DecoderState {
  VarId h;    // recurrent state
  VarId cell;
  VarId ctx;  // previous attention context
};

template <typename T>
struct StepResult {
  DecoderState<T> state;
  VarId energies;   // [T']
  VarId alpha;      // [T'], softmax of energies
  VarId log_probs;  // [V], log-softmax over the token space
};

// Attention encoder-decoder over the token space. Parameters initialize from
// U(-0.075, 0.075) with zero biases, drawn from the given seed.
template <typename T>
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    register_params();
    init_params(seed);
    grads_ = make_like();
  }

  const ModelConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }
  ParamSet<T>& grads() { return grads_; }
  const ParamSet<T>& grads() const { return grads_; }

  // A zeroed ParamSet with identical structure (for Adam moments etc).
  ParamSet<T> make_like() const {
    ParamSet<T> ps;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      ps.add(params_.name(i), params_.tensor(i).shape(), params_.is_bias(i));
    }
    return ps;
  }

  BoundParams<T> bind(Tape<T>& tape) const { return BoundParams<T>(tape, params_); }

  // Stacked bidirectional recurrence with pairwise time concatenation between
  // the first log2(time_reduction) layers.
  EncoderStates<T> encode(Tape<T>& tape, const BoundParams<T>& p, const Tensor<T>& x) const {
    if (x.rank() != 2 || x.dim(1) != cfg_.input_dim) {
      throw InvalidInputError("encoder input must be [T, input_dim]");
    }
    const std::size_t frames = x.dim(0);
    if (frames < cfg_.time_reduction) {
      throw InvalidInputError("input has " + std::to_string(frames) +
                              " frames, fewer than the time reduction factor " +
                              std::to_string(cfg_.time_reduction));
    }
    std::vector<VarId> seq;
    seq.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      Tensor<T> frame({cfg_.input_dim});
      std::copy(x.data() + t * cfg_.input_dim, x.data() + (t + 1) * cfg_.input_dim, frame.data());
      seq.push_back(tape.leaf(std::move(frame)));
    }

    const std::size_t stages = cfg_.reduction_stages();
    for (std::size_t layer = 0; layer < cfg_.enc_layers; ++layer) {
      const EncLayerIdx& idx = enc_idx_[layer];
      std::vector<VarId> fw = lstm_run(tape, p[idx.fw_wx], p[idx.fw_wh], p[idx.fw_b], seq,
                                       cfg_.enc_hidden, false);
      std::vector<VarId> bw = lstm_run(tape, p[idx.bw_wx], p[idx.bw_wh], p[idx.bw_b], seq,
                                       cfg_.enc_hidden, true);
      seq.clear();
      for (std::size_t t = 0; t < fw.size(); ++t) {
        seq.push_back(tape.concat(fw[t], bw[t]));
      }
      if (layer < stages) {
        seq = subsample_pairs(tape, seq);
      }
    }
    return EncoderStates<T>{std::move(seq)};
  }

  DecoderState<T> initial_decoder_state(Tape<T>& tape) const {
    return DecoderState<T>{tape.zeros({cfg_.dec_hidden}), tape.zeros({cfg_.dec_hidden}),
                           tape.zeros({cfg_.enc_out_dim()})};
  }

  // e_j = <v, tanh(W [s; h_j] + b)>; alpha = softmax(e); ctx = sum_j alpha_j h_j
  std::tuple<VarId, VarId, VarId> attend(Tape<T>& tape, const BoundParams<T>& p, VarId s,
                                         const EncoderStates<T>& enc) const {
    std::vector<VarId> energy_terms;
    energy_terms.reserve(enc.h.size());
    for (VarId hj : enc.h) {
      VarId u = tape.tanh(tape.affine(p[attn_w_], tape.concat(s, hj), p[attn_b_]));
      energy_terms.push_back(tape.dot(p[attn_v_], u));
    }
    VarId energies = tape.concat_scalars(energy_terms);
    VarId alpha = tape.softmax(energies);
    VarId ctx = tape.weighted_sum(alpha, enc.h);
    return {energies, alpha, ctx};
  }

  // One decoder step. prev == nullopt conditions on the start embedding.
  StepResult<T> decode_step(Tape<T>& tape, const BoundParams<T>& p,
                            std::optional<TokenId> prev, const DecoderState<T>& state,
                            const EncoderStates<T>& enc) const {
    VarId emb;
    if (prev.has_value()) {
      if (*prev >= cfg_.vocab_size) {
        throw InvalidInputError("token id " + std::to_string(*prev) +
                                " outside the vocabulary of size " +
                                std::to_string(cfg_.vocab_size));
      }
      emb = tape.pick_row(p[embed_], *prev);
    } else {
      emb = p[start_embed_];
    }
    VarId x = tape.concat(emb, state.ctx);
    auto [h, cell] =
        lstm_step(tape, p[dec_wx_], p[dec_wh_], p[dec_b_], x, state.h, state.cell, cfg_.dec_hidden);
    auto [energies, alpha, ctx] = attend(tape, p, h, enc);
    VarId logits = tape.affine(p[out_w_], tape.concat(h, ctx), p[out_b_]);
    VarId log_probs = tape.log_softmax(logits);
    return StepResult<T>{DecoderState<T>{h, cell, ctx}, energies, alpha, log_probs};
  }

  // log p(z | x) = sum_i log p(z_i | x, z_<i). z must end with EOS.
  VarId log_prob_sequence_var(Tape<T>& tape, const BoundParams<T>& p, const Tensor<T>& x,
                              const Decomposition& z, TokenId eos_id) const {
    check_sequence(z, eos_id);
    EncoderStates<T> enc = encode(tape, p, x);
    return log_prob_sequence_var(tape, p, enc, z, eos_id);
  }

  // Same, reusing already-encoded states (one encode per input, many paths).
  VarId log_prob_sequence_var(Tape<T>& tape, const BoundParams<T>& p,
                              const EncoderStates<T>& enc, const Decomposition& z,
                              TokenId eos_id) const {
    check_sequence(z, eos_id);
    DecoderState<T> state = initial_decoder_state(tape);
    std::optional<TokenId> prev;
    std::vector<VarId> terms;
    terms.reserve(z.size());
    for (TokenId id : z) {
      StepResult<T> step = decode_step(tape, p, prev, state, enc);
      terms.push_back(tape.pick(step.log_probs, id));
      state = step.state;
      prev = id;
    }
    return tape.add_scalars(terms);
  }

  // Value-only convenience: runs on a throwaway tape.
  T log_prob_sequence(const Tensor<T>& x, const Decomposition& z, TokenId eos_id) const {
    Tape<T> tape;
    BoundParams<T> p = bind(tape);
    return tape.value(log_prob_sequence_var(tape, p, x, z, eos_id))[0];
  }

 private:
  struct EncLayerIdx {
    std::size_t fw_wx, fw_wh, fw_b, bw_wx, bw_wh, bw_b;
  };

  static void check_sequence(const Decomposition& z, TokenId eos_id) {
    if (z.empty() || z.back() != eos_id) {
      throw InvalidInputError("sequence must terminate with the end-of-sequence token");
    }
    for (std::size_t i = 0; i + 1 < z.size(); ++i) {
      if (z[i] == eos_id) {
        throw InvalidInputError("end-of-sequence token occurs before the final position");
      }
    }
  }

  void register_params() {
    const std::size_t h = cfg_.enc_hidden;
    std::size_t in_dim = cfg_.input_dim;
    const std::size_t stages = cfg_.reduction_stages();
    for (std::size_t layer = 0; layer < cfg_.enc_layers; ++layer) {
      const std::string base = "enc" + std::to_string(layer);
      EncLayerIdx idx;
      idx.fw_wx = params_.add(base + ".fw.wx", {4 * h, in_dim}, false);
      idx.fw_wh = params_.add(base + ".fw.wh", {4 * h, h}, false);
      idx.fw_b = params_.add(base + ".fw.b", {4 * h}, true);
      idx.bw_wx = params_.add(base + ".bw.wx", {4 * h, in_dim}, false);
      idx.bw_wh = params_.add(base + ".bw.wh", {4 * h, h}, false);
      idx.bw_b = params_.add(base + ".bw.b", {4 * h}, true);
      enc_idx_.push_back(idx);
      in_dim = 2 * h;
      if (layer < stages) in_dim *= 2;
    }
    const std::size_t dh = cfg_.dec_hidden;
    const std::size_t ctx_dim = cfg_.enc_out_dim();
    dec_wx_ = params_.add("dec.wx", {4 * dh, cfg_.embed_dim + ctx_dim}, false);
    dec_wh_ = params_.add("dec.wh", {4 * dh, dh}, false);
    dec_b_ = params_.add("dec.b", {4 * dh}, true);
    embed_ = params_.add("embed", {cfg_.vocab_size, cfg_.embed_dim}, false);
    start_embed_ = params_.add("start_embed", {cfg_.embed_dim}, false);
    attn_w_ = params_.add("attn.w", {cfg_.attn_dim, dh + ctx_dim}, false);
    attn_b_ = params_.add("attn.b", {cfg_.attn_dim}, true);
    attn_v_ = params_.add("attn.v", {cfg_.attn_dim}, false);
    out_w_ = params_.add("out.w", {cfg_.vocab_size, dh + ctx_dim}, false);
    out_b_ = params_.add("out.b", {cfg_.vocab_size}, true);
  }

  void init_params(std::uint64_t seed) {
    constexpr double kInitRange = 0.075;
    Rng rng(seed);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_.is_bias(i)) continue;  // biases stay zero
      Tensor<T>& t = params_.tensor(i);
      for (std::size_t j = 0; j < t.numel(); ++j) {
        t[j] = static_cast<T>(rng.uniform(-kInitRange, kInitRange));
      }
    }
  }

  // Gate layout: [input; forget; candidate; output].
  static std::pair<VarId, VarId> lstm_step(Tape<T>& tape, VarId wx, VarId wh, VarId b, VarId x,
                                           VarId h_prev, VarId c_prev, std::size_t hidden) {
    VarId gates = tape.add(tape.affine(wx, x, b), tape.matvec(wh, h_prev));
    VarId ig = tape.sigmoid(tape.slice(gates, 0, hidden));
    VarId fg = tape.sigmoid(tape.slice(gates, hidden, hidden));
    VarId gg = tape.tanh(tape.slice(gates, 2 * hidden, hidden));
    VarId og = tape.sigmoid(tape.slice(gates, 3 * hidden, hidden));
    VarId cell = tape.add(tape.mul(fg, c_prev), tape.mul(ig, gg));
    VarId h = tape.mul(og, tape.tanh(cell));
    return {h, cell};
  }

  static std::vector<VarId> lstm_run(Tape<T>& tape, VarId wx, VarId wh, VarId b,
                                     const std::vector<VarId>& xs, std::size_t hidden,
                                     bool reverse) {
    std::vector<VarId> out(xs.size());
    VarId h = tape.zeros({hidden});
    VarId c = tape.zeros({hidden});
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const std::size_t t = reverse ? xs.size() - 1 - k : k;
      auto [nh, nc] = lstm_step(tape, wx, wh, b, xs[t], h, c, hidden);
      out[t] = nh;
      h = nh;
      c = nc;
    }
    return out;
  }

  // Adjacent pairs concatenate; an odd tail pairs with zeros, so the reduced
  // length is ceil(T/2).
  static std::vector<VarId> subsample_pairs(Tape<T>& tape, const std::vector<VarId>& seq) {
    std::vector<VarId> out;
    out.reserve((seq.size() + 1) / 2);
    for (std::size_t t = 0; t + 1 < seq.size(); t += 2) {
      out.push_back(tape.concat(seq[t], seq[t + 1]));
    }
    if (seq.size() % 2 == 1) {
      VarId pad = tape.zeros(tape.value(seq.back()).shape());
      out.push_back(tape.concat(seq.back(), pad));
    }
    return out;
  }

  ModelConfig cfg_;
  ParamSet<T> params_;
  ParamSet<T> grads_;
  std::vector<EncLayerIdx> enc_idx_;
  std::size_t dec_wx_ = 0, dec_wh_ = 0, dec_b_ = 0;
  std::size_t embed_ = 0, start_embed_ = 0;
  std::size_t attn_w_ = 0, attn_b_ = 0, attn_v_ = 0;
  std::size_t out_w_ = 0, out_b_ = 0;
};

namespace detail {

inline void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename U>
void write_pod(std::ofstream& out, U v) {
  write_bytes(out, &v, sizeof(U));
}

inline void read_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CheckpointError("truncated checkpoint file");
  }
}

template <typename U>
U read_pod(std::ifstream& in) {
  U v;
  read_bytes(in, &v, sizeof(U));
  return v;
}

}  // namespace detail

constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: magic "LSDC", u32 version, u32 precision bytes, u64 tensor count,
// per tensor {u32 name_len, name, u32 rank, u64 dims..., u64 offset}, u64
// data size, then raw little-endian tensor data.
template <typename T>
void save_checkpoint(const ParamSet<T>& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  detail::write_bytes(out, "LSDC", 4);
  detail::write_pod<std::uint32_t>(out, kCheckpointVersion);
  detail::write_pod<std::uint32_t>(out, sizeof(T));
  detail::write_pod<std::uint64_t>(out, params.size());
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    detail::write_bytes(out, name.data(), name.size());
    const auto& shape = params.tensor(i).shape();
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) detail::write_pod<std::uint64_t>(out, d);
    detail::write_pod<std::uint64_t>(out, offset);
    offset += params.tensor(i).numel() * sizeof(T);
  }
  detail::write_pod<std::uint64_t>(out, offset);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<T>& t = params.tensor(i);
    detail::write_bytes(out, t.data(), t.numel() * sizeof(T));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

// Loads into an existing ParamSet; every manifest entry must match the
// destination's name, shape and precision.
template <typename T>
void load_checkpoint(ParamSet<T>& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  detail::read_bytes(in, magic, 4);
  if (std::memcmp(magic, "LSDC", 4) != 0) throw CheckpointError("bad magic bytes");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto precision = detail::read_pod<std::uint32_t>(in);
  if (precision != sizeof(T)) {
    throw CheckpointError("checkpoint precision is " + std::to_string(precision * 8) +
                          "-bit but the model expects " + std::to_string(sizeof(T) * 8) + "-bit");
  }
  const auto count = detail::read_pod<std::uint64_t>(in);
  if (count != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, expected " +
                          std::to_string(params.size()));
  }
  std::vector<std::uint64_t> offsets(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    detail::read_bytes(in, name.data(), name_len);
    if (name != params.name(i)) {
      throw CheckpointError("tensor " + std::to_string(i) + " is named \"" + name +
                            "\", expected \"" + params.name(i) + "\"");
    }
    const auto rank = detail::read_pod<std::uint32_t>(in);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = static_cast<std::size_t>(detail::read_pod<std::uint64_t>(in));
    if (dims != params.tensor(i).shape()) {
      throw CheckpointError("shape mismatch for tensor \"" + name + "\"");
    }
    offsets[i] = detail::read_pod<std::uint64_t>(in);
  }
  const auto data_size = detail::read_pod<std::uint64_t>(in);
  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (offsets[i] != expected) throw CheckpointError("inconsistent tensor offsets");
    expected += params.tensor(i).numel() * sizeof(T);
  }
  if (data_size != expected) throw CheckpointError("data section size mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    Tensor<T>& t = params.tensor(i);
    detail::read_bytes(in, t.data(), t.numel() * sizeof(T));
  }
}

}  // namespace lsd
