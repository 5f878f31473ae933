#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lsd/error.hpp"
#include "lsd/tensor.hpp"

namespace lsd {

// Index of a node on a tape. Only meaningful for the tape that created it.
struct VarId {
  std::uint32_t index = 0;
};

// Single-use reverse-mode tape over Tensor<T> values. Each operation records
// a node whose pull function adds the node's gradient contribution into its
// inputs. backward() may be called once; a second call is a StateError.
template <typename T>
class Tape {
 public:
  VarId leaf(Tensor<T> value) { return push(std::move(value), nullptr); }

  VarId zeros(std::vector<std::size_t> shape) { return leaf(Tensor<T>(std::move(shape))); }

  VarId scalar(T value) { return leaf(Tensor<T>::scalar(value)); }

  const Tensor<T>& value(VarId v) const { return nodes_[v.index].value; }
  const Tensor<T>& grad(VarId v) const { return nodes_[v.index].grad; }

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  // y = a + b (same shape)
  VarId add(VarId a, VarId b) {
    check_same_shape(a, b, "add");
    Tensor<T> out = value(a);
    const Tensor<T>& vb = value(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
    return push(std::move(out), [a, b](Tape& t, const Node& n) {
      t.axpy(a, T(1), n.grad);
      t.axpy(b, T(1), n.grad);
    });
  }

  // y = a - b (same shape)
  VarId sub(VarId a, VarId b) {
    check_same_shape(a, b, "sub");
    Tensor<T> out = value(a);
    const Tensor<T>& vb = value(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
    return push(std::move(out), [a, b](Tape& t, const Node& n) {
      t.axpy(a, T(1), n.grad);
      t.axpy(b, T(-1), n.grad);
    });
  }

  // y = a ⊙ b (same shape)
  VarId mul(VarId a, VarId b) {
    check_same_shape(a, b, "mul");
    Tensor<T> out = value(a);
    const Tensor<T>& vb = value(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= vb[i];
    return push(std::move(out), [a, b](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      Tensor<T>& gb = t.nodes_[b.index].grad;
      const Tensor<T>& va = t.value(a);
      const Tensor<T>& vb2 = t.value(b);
      for (std::size_t i = 0; i < n.grad.numel(); ++i) {
        ga[i] += n.grad[i] * vb2[i];
        gb[i] += n.grad[i] * va[i];
      }
    });
  }

  // y = k * a
  VarId scale(VarId a, T k) {
    Tensor<T> out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= k;
    return push(std::move(out),
                [a, k](Tape& t, const Node& n) { t.axpy(a, k, n.grad); });
  }

  // y = W x + b with W [m,n], x [n], b [m]
  VarId affine(VarId w, VarId x, VarId b) {
    const Tensor<T>& vw = value(w);
    const Tensor<T>& vx = value(x);
    const Tensor<T>& vb = value(b);
    if (vw.rank() != 2 || vw.dim(1) != vx.numel() || vw.dim(0) != vb.numel()) {
      throw InvalidInputError("affine shape mismatch");
    }
    const std::size_t m = vw.dim(0), n = vw.dim(1);
    Tensor<T> out({m});
    for (std::size_t i = 0; i < m; ++i) {
      T acc = vb[i];
      const T* row = vw.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * vx[j];
      out[i] = acc;
    }
    return push(std::move(out), [w, x, b](Tape& t, const Node& nd) {
      const Tensor<T>& vw2 = t.value(w);
      const Tensor<T>& vx2 = t.value(x);
      Tensor<T>& gw = t.nodes_[w.index].grad;
      Tensor<T>& gx = t.nodes_[x.index].grad;
      Tensor<T>& gb = t.nodes_[b.index].grad;
      const std::size_t m2 = vw2.dim(0), n2 = vw2.dim(1);
      for (std::size_t i = 0; i < m2; ++i) {
        const T gy = nd.grad[i];
        gb[i] += gy;
        T* gwrow = gw.data() + i * n2;
        const T* wrow = vw2.data() + i * n2;
        for (std::size_t j = 0; j < n2; ++j) {
          gwrow[j] += gy * vx2[j];
          gx[j] += gy * wrow[j];
        }
      }
    });
  }

  // y = W x with W [m,n], x [n]
  VarId matvec(VarId w, VarId x) {
    const Tensor<T>& vw = value(w);
    const Tensor<T>& vx = value(x);
    if (vw.rank() != 2 || vw.dim(1) != vx.numel()) {
      throw InvalidInputError("matvec shape mismatch");
    }
    const std::size_t m = vw.dim(0), n = vw.dim(1);
    Tensor<T> out({m});
    for (std::size_t i = 0; i < m; ++i) {
      T acc = 0;
      const T* row = vw.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * vx[j];
      out[i] = acc;
    }
    return push(std::move(out), [w, x](Tape& t, const Node& nd) {
      const Tensor<T>& vw2 = t.value(w);
      const Tensor<T>& vx2 = t.value(x);
      Tensor<T>& gw = t.nodes_[w.index].grad;
      Tensor<T>& gx = t.nodes_[x.index].grad;
      const std::size_t m2 = vw2.dim(0), n2 = vw2.dim(1);
      for (std::size_t i = 0; i < m2; ++i) {
        const T gy = nd.grad[i];
        T* gwrow = gw.data() + i * n2;
        const T* wrow = vw2.data() + i * n2;
        for (std::size_t j = 0; j < n2; ++j) {
          gwrow[j] += gy * vx2[j];
          gx[j] += gy * wrow[j];
        }
      }
    });
  }

  // y = [a; b]
  VarId concat(VarId a, VarId b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    Tensor<T> out({va.numel() + vb.numel()});
    std::copy(va.data(), va.data() + va.numel(), out.data());
    std::copy(vb.data(), vb.data() + vb.numel(), out.data() + va.numel());
    return push(std::move(out), [a, b](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      Tensor<T>& gb = t.nodes_[b.index].grad;
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[i];
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += n.grad[ga.numel() + i];
    });
  }

  // y = a[offset .. offset+len)
  VarId slice(VarId a, std::size_t offset, std::size_t len) {
    const Tensor<T>& va = value(a);
    if (offset + len > va.numel()) {
      throw InvalidInputError("slice out of range");
    }
    Tensor<T> out({len});
    std::copy(va.data() + offset, va.data() + offset + len, out.data());
    return push(std::move(out), [a, offset](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[offset + i] += n.grad[i];
    });
  }

  // y = W[row, :] for W [m,n]
  VarId pick_row(VarId w, std::size_t row) {
    const Tensor<T>& vw = value(w);
    if (vw.rank() != 2 || row >= vw.dim(0)) {
      throw InvalidInputError("pick_row out of range");
    }
    const std::size_t n = vw.dim(1);
    Tensor<T> out({n});
    std::copy(vw.data() + row * n, vw.data() + (row + 1) * n, out.data());
    return push(std::move(out), [w, row, n](Tape& t, const Node& nd) {
      Tensor<T>& gw = t.nodes_[w.index].grad;
      for (std::size_t i = 0; i < n; ++i) gw[row * n + i] += nd.grad[i];
    });
  }

  // scalar y = a[i]
  VarId pick(VarId a, std::size_t i) {
    const Tensor<T>& va = value(a);
    if (i >= va.numel()) {
      throw InvalidInputError("pick index out of range");
    }
    Tensor<T> out = Tensor<T>::scalar(va[i]);
    return push(std::move(out), [a, i](Tape& t, const Node& n) {
      t.nodes_[a.index].grad[i] += n.grad[0];
    });
  }

  VarId sigmoid(VarId a) {
    Tensor<T> out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = T(1) / (T(1) + std::exp(-out[i]));
    return push(std::move(out), [a](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      for (std::size_t i = 0; i < n.grad.numel(); ++i) {
        const T s = n.value[i];
        ga[i] += n.grad[i] * s * (T(1) - s);
      }
    });
  }

  VarId tanh(VarId a) {
    Tensor<T> out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    return push(std::move(out), [a](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      for (std::size_t i = 0; i < n.grad.numel(); ++i) {
        const T y = n.value[i];
        ga[i] += n.grad[i] * (T(1) - y * y);
      }
    });
  }

  // scalar y = <a, b>
  VarId dot(VarId a, VarId b) {
    check_same_shape(a, b, "dot");
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    T acc = 0;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va[i] * vb[i];
    return push(Tensor<T>::scalar(acc), [a, b](Tape& t, const Node& n) {
      const T gy = n.grad[0];
      Tensor<T>& ga = t.nodes_[a.index].grad;
      Tensor<T>& gb = t.nodes_[b.index].grad;
      const Tensor<T>& va2 = t.value(a);
      const Tensor<T>& vb2 = t.value(b);
      for (std::size_t i = 0; i < va2.numel(); ++i) {
        ga[i] += gy * vb2[i];
        gb[i] += gy * va2[i];
      }
    });
  }

  // y_i = exp(a_i) / sum_j exp(a_j), computed with the max-shift trick
  VarId softmax(VarId a) {
    Tensor<T> out = value(a);
    softmax_inplace(out);
    return push(std::move(out), [a](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      T dot_gy_y = 0;
      for (std::size_t i = 0; i < n.grad.numel(); ++i) dot_gy_y += n.grad[i] * n.value[i];
      for (std::size_t i = 0; i < n.grad.numel(); ++i) {
        ga[i] += n.value[i] * (n.grad[i] - dot_gy_y);
      }
    });
  }

  // y_i = a_i - logsumexp(a)
  VarId log_softmax(VarId a) {
    Tensor<T> out = value(a);
    const T lse = log_sum_exp(out);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= lse;
    return push(std::move(out), [a](Tape& t, const Node& n) {
      Tensor<T>& ga = t.nodes_[a.index].grad;
      T gsum = 0;
      for (std::size_t i = 0; i < n.grad.numel(); ++i) gsum += n.grad[i];
      for (std::size_t i = 0; i < n.grad.numel(); ++i) {
        ga[i] += n.grad[i] - std::exp(n.value[i]) * gsum;
      }
    });
  }

  // c = sum_j alpha[j] * h_j over a list of equal-shaped vectors
  VarId weighted_sum(VarId alpha, const std::vector<VarId>& hs) {
    const Tensor<T>& valpha = value(alpha);
    if (valpha.numel() != hs.size() || hs.empty()) {
      throw InvalidInputError("weighted_sum arity mismatch");
    }
    Tensor<T> out(value(hs[0]).shape());
    for (std::size_t j = 0; j < hs.size(); ++j) {
      const Tensor<T>& h = value(hs[j]);
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] += valpha[j] * h[i];
    }
    return push(std::move(out), [alpha, hs](Tape& t, const Node& n) {
      Tensor<T>& galpha = t.nodes_[alpha.index].grad;
      const Tensor<T>& valpha2 = t.value(alpha);
      for (std::size_t j = 0; j < hs.size(); ++j) {
        const Tensor<T>& h = t.value(hs[j]);
        Tensor<T>& gh = t.nodes_[hs[j].index].grad;
        T acc = 0;
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
          acc += n.grad[i] * h[i];
          gh[i] += n.grad[i] * valpha2[j];
        }
        galpha[j] += acc;
      }
    });
  }

  // y = [s_0, s_1, ...] from scalar vars
  VarId concat_scalars(const std::vector<VarId>& scalars) {
    Tensor<T> out({scalars.size()});
    for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = value(scalars[i])[0];
    return push(std::move(out), [scalars](Tape& t, const Node& n) {
      for (std::size_t i = 0; i < scalars.size(); ++i) {
        t.nodes_[scalars[i].index].grad[0] += n.grad[i];
      }
    });
  }

  // scalar y = sum_i terms_i
  VarId add_scalars(const std::vector<VarId>& terms) {
    T acc = 0;
    for (VarId v : terms) acc += value(v)[0];
    return push(Tensor<T>::scalar(acc), [terms](Tape& t, const Node& n) {
      for (VarId v : terms) t.nodes_[v.index].grad[0] += n.grad[0];
    });
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Single use.
  void backward(VarId loss) {
    if (backward_done_) {
      throw StateError("backward already ran on this tape");
    }
    if (value(loss).numel() != 1) {
      throw InvalidInputError("backward requires a scalar loss");
    }
    backward_done_ = true;
    nodes_[loss.index].grad[0] = T(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.pull) n.pull(*this, n);
    }
  }

  static void softmax_inplace(Tensor<T>& v) {
    T mx = v[0];
    for (std::size_t i = 1; i < v.numel(); ++i) mx = std::max(mx, v[i]);
    T sum = 0;
    for (std::size_t i = 0; i < v.numel(); ++i) {
      v[i] = std::exp(v[i] - mx);
      sum += v[i];
    }
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] /= sum;
  }

  static T log_sum_exp(const Tensor<T>& v) {
    T mx = v[0];
    for (std::size_t i = 1; i < v.numel(); ++i) mx = std::max(mx, v[i]);
    T sum = 0;
    for (std::size_t i = 0; i < v.numel(); ++i) sum += std::exp(v[i] - mx);
    return mx + std::log(sum);
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::function<void(Tape&, const Node&)> pull;
  };

  VarId push(Tensor<T> value, std::function<void(Tape&, const Node&)> pull) {
    Node n;
    n.grad = Tensor<T>(value.shape());
    n.value = std::move(value);
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    return VarId{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  void axpy(VarId dst, T k, const Tensor<T>& g) {
    Tensor<T>& gd = nodes_[dst.index].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) gd[i] += k * g[i];
  }

  void check_same_shape(VarId a, VarId b, const char* op) const {
    if (!value(a).same_shape(value(b))) {
      throw InvalidInputError(std::string(op) + " shape mismatch");
    }
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace lsd
