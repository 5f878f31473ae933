#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lsd/autodiff.hpp"
#include "lsd/rng.hpp"
#include "test_util.hpp"

using namespace lsd;
using lsd::testutil::rel_err;

namespace {

Tensor<double> random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

// Checks d(scalar expr)/d(leaf) against central differences for every input
// coordinate of every leaf.
void check_gradients(
    const std::vector<Tensor<double>>& inputs,
    const std::function<VarId(Tape<double>&, const std::vector<VarId>&)>& build) {
  Tape<double> tape;
  std::vector<VarId> vars;
  for (const auto& x : inputs) vars.push_back(tape.leaf(x));
  VarId out = build(tape, vars);
  REQUIRE(tape.value(out).numel() == 1);
  tape.backward(out);

  const double h = 1e-6;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      auto eval_at = [&](double delta) {
        std::vector<Tensor<double>> shifted = inputs;
        shifted[k][i] += delta;
        Tape<double> t2;
        std::vector<VarId> v2;
        for (const auto& x : shifted) v2.push_back(t2.leaf(x));
        return t2.value(build(t2, v2))[0];
      };
      const double numeric = (eval_at(h) - eval_at(-h)) / (2 * h);
      const double analytic = tape.grad(vars[k])[i];
      INFO("input ", k, " coordinate ", i);
      CHECK(rel_err(analytic, numeric) < 1e-5);
    }
  }
}

}  // namespace

TEST_CASE("elementwise and linear ops match finite differences") {
  Rng rng(42);
  const Tensor<double> a = random_tensor(rng, {5});
  const Tensor<double> b = random_tensor(rng, {5});
  const Tensor<double> w = random_tensor(rng, {3, 5});
  const Tensor<double> bias = random_tensor(rng, {3});
  const Tensor<double> v3 = random_tensor(rng, {3});

  check_gradients({a, b}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.dot(t.add(v[0], v[1]), t.mul(v[0], v[1]));
  });
  check_gradients({a, b}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.dot(t.sub(v[0], v[1]), t.sub(v[0], v[1]));
  });
  check_gradients({w, a, bias, v3}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.dot(t.tanh(t.affine(v[0], v[1], v[2])), v[3]);
  });
  check_gradients({w, a, v3}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.dot(t.sigmoid(t.matvec(v[0], v[1])), v[2]);
  });
}

TEST_CASE("structural ops match finite differences") {
  Rng rng(43);
  const Tensor<double> a = random_tensor(rng, {4});
  const Tensor<double> b = random_tensor(rng, {3});
  const Tensor<double> w = random_tensor(rng, {4, 2});

  check_gradients({a, b}, [](Tape<double>& t, const std::vector<VarId>& v) {
    VarId cat = t.concat(v[0], v[1]);
    return t.dot(t.slice(cat, 2, 4), t.slice(cat, 3, 4));
  });
  check_gradients({w}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.pick(t.pick_row(v[0], 2), 1);
  });
  check_gradients({a}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.scale(t.pick(v[0], 3), -2.5);
  });
}

TEST_CASE("softmax family matches finite differences") {
  Rng rng(44);
  const Tensor<double> a = random_tensor(rng, {6}, 2.0);
  const Tensor<double> b = random_tensor(rng, {6});

  check_gradients({a, b}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.dot(t.softmax(v[0]), v[1]);
  });
  check_gradients({a, b}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.dot(t.log_softmax(v[0]), v[1]);
  });
  check_gradients({a}, [](Tape<double>& t, const std::vector<VarId>& v) {
    return t.pick(t.log_softmax(v[0]), 2);
  });
}

TEST_CASE("weighted_sum and scalar aggregation match finite differences") {
  Rng rng(45);
  const Tensor<double> alpha = random_tensor(rng, {3});
  const Tensor<double> h1 = random_tensor(rng, {4});
  const Tensor<double> h2 = random_tensor(rng, {4});
  const Tensor<double> h3 = random_tensor(rng, {4});
  const Tensor<double> probe = random_tensor(rng, {4});

  check_gradients({alpha, h1, h2, h3, probe},
                  [](Tape<double>& t, const std::vector<VarId>& v) {
                    VarId c = t.weighted_sum(v[0], {v[1], v[2], v[3]});
                    VarId s1 = t.dot(c, v[4]);
                    VarId s2 = t.pick(c, 0);
                    VarId vec = t.concat_scalars({s1, s2});
                    return t.add_scalars({t.pick(vec, 0), t.pick(vec, 1), s1});
                  });
}

TEST_CASE("softmax output sums to one") {
  Rng rng(46);
  Tape<double> tape;
  VarId x = tape.leaf(random_tensor(rng, {9}, 3.0));
  const Tensor<double>& y = tape.value(tape.softmax(x));
  double sum = 0;
  for (std::size_t i = 0; i < y.numel(); ++i) {
    CHECK(y[i] >= 0.0);
    sum += y[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient of a leaf w.r.t. itself is one and others zero") {
  Tape<double> tape;
  VarId a = tape.leaf(Tensor<double>::scalar(2.0));
  VarId b = tape.leaf(Tensor<double>::scalar(3.0));
  VarId c = tape.add(a, b);
  tape.backward(tape.pick(c, 0));
  CHECK(tape.grad(a)[0] == 1.0);
  CHECK(tape.grad(b)[0] == 1.0);
}

TEST_CASE("backward is single-use") {
  Tape<double> tape;
  VarId a = tape.leaf(Tensor<double>::scalar(1.0));
  VarId b = tape.scale(a, 2.0);
  tape.backward(b);
  CHECK_THROWS_AS(tape.backward(b), StateError);
}

TEST_CASE("backward without a scalar loss is rejected") {
  Tape<double> tape;
  VarId a = tape.leaf(Tensor<double>({3}, {1, 2, 3}));
  CHECK_THROWS_AS(tape.backward(a), InvalidInputError);
}

TEST_CASE("gradients are linear in the loss scaling") {
  Rng rng(47);
  const Tensor<double> x = random_tensor(rng, {5});
  auto grad_with_scale = [&](double k) {
    Tape<double> tape;
    VarId v = tape.leaf(x);
    VarId loss = tape.scale(tape.dot(tape.sigmoid(v), v), k);
    tape.backward(loss);
    std::vector<double> g(tape.grad(v).vec());
    return g;
  };
  const std::vector<double> g1 = grad_with_scale(1.0);
  const std::vector<double> g3 = grad_with_scale(3.0);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g3[i] == doctest::Approx(3.0 * g1[i]).epsilon(1e-12));
  }
}
