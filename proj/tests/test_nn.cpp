#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "caah/errors.hpp"
#include "caah/nn/grad_check.hpp"
#include "caah/nn/graph.hpp"
#include "caah/nn/ops.hpp"
#include "caah/nn/optim.hpp"
#include "caah/nn/rng.hpp"
#include "support.hpp"

using namespace caah;
using namespace caah::nn;
using caah::testing::random_projection;
using caah::testing::random_tensor;

namespace {

double erf_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Checks d/dparams of objective on a double graph.
void expect_gradients(const Objective& f, std::vector<Parameter<double>*> params) {
  std::vector<NamedParameter> named;
  for (std::size_t i = 0; i < params.size(); ++i) named.push_back({"p" + std::to_string(i), params[i]});
  const auto report = grad_check(f, named);
  INFO("worst entry " << report.worst_entry << " rel " << report.max_rel_error << " " << report.failure);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(derive_seed(5, "shuffle")), b(derive_seed(5, "shuffle")), c(derive_seed(5, "window"));
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  CHECK(derive_seed(1, "init", 0) != derive_seed(1, "init", 1));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("rng below, shuffle and normal") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v.begin(), v.end());
  CHECK(std::set<int>(v.begin(), v.end()).size() == 8);
  double mean = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    mean += x;
    sq += x * x;
  }
  mean /= n;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("gelu examples and erf oracle") {
  CHECK(gelu_value(0.0) == 0.0);
  CHECK(std::abs(gelu_value(10.0) - 10.0) < 1e-4);
  CHECK(std::abs(gelu_value(1.0) - 0.8412) < 1e-3);
  for (double x = -6.0; x <= 6.0; x += 0.01) CHECK(std::abs(gelu_value(x) - erf_gelu(x)) < 1e-3);
  const double k = std::sqrt(2.0 / std::numbers::pi);
  for (double x : {-2.5, -0.3, 0.7, 3.1}) {
    CHECK(gelu_value(x) == doctest::Approx(0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)))).epsilon(1e-15));
  }
}

TEST_CASE("layer norm examples and mean/variance oracle") {
  Graph<double> g;
  auto ones = g.constant(Tensor<double>({3}, 1.0));
  auto zeros = g.constant(Tensor<double>({3}, 0.0));
  auto y = layer_norm(g.constant(Tensor<double>({3}, {5, 5, 5})), ones, zeros, 1e-5);
  for (double v : y.value().values()) CHECK(v == 0.0);

  auto y2 = layer_norm(g.constant(Tensor<double>({2}, {-1, 1})), g.constant(Tensor<double>({2}, 1.0)),
                       g.constant(Tensor<double>({2}, 0.0)), 1e-12);
  CHECK(y2.value()[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y2.value()[1] == doctest::Approx(1.0).epsilon(1e-9));

  Rng rng(3);
  const auto x = random_tensor({8}, rng, 2.0);
  const auto gain = random_tensor({8}, rng);
  const auto bias = random_tensor({8}, rng);
  auto out = layer_norm(g.constant(x), g.constant(gain), g.constant(bias), 1e-5);
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= 8.0;
  double var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  var /= 8.0;
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(std::abs(out.value()[i] - ((x[i] - mean) / std::sqrt(var + 1e-5) * gain[i] + bias[i])) < 1e-6);
  }
}

TEST_CASE("layer norm rejects an empty last axis") {
  Graph<double> g;
  auto empty = g.constant(Tensor<double>({2, 0}));
  auto p = g.constant(Tensor<double>({0}));
  CHECK_THROWS(layer_norm(empty, p, p, 1e-5));
}

TEST_CASE("masked softmax examples") {
  Graph<double> g;
  const std::uint8_t first_only[] = {1, 0};
  auto a = masked_softmax(g.constant(Tensor<double>({2}, {3.0, 7.0})), first_only);
  CHECK(a.value()[0] == 1.0);
  CHECK(a.value()[1] == 0.0);

  const std::uint8_t all3[] = {1, 1, 1};
  auto b = masked_softmax(g.constant(Tensor<double>({3}, {2.5, 2.5, 2.5})), all3);
  for (double v : b.value().values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const std::uint8_t all2[] = {1, 1};
  auto c = masked_softmax(g.constant(Tensor<double>({2}, {0.0, std::log(3.0)})), all2);
  CHECK(c.value()[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(c.value()[1] == doctest::Approx(0.75).epsilon(1e-14));

  const std::uint8_t none[] = {0, 0};
  CHECK_THROWS_AS(masked_softmax(g.constant(Tensor<double>({2}, {1.0, 2.0})), none), DataError);
}

TEST_CASE("masked softmax property: bounded, normalised, exact zeros") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.below(4), cols = 1 + rng.below(9);
    std::vector<std::uint8_t> mask(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < cols; ++k) mask[r * cols + k] = rng.bernoulli(0.6);
      mask[r * cols + rng.below(cols)] = 1;
    }
    Graph<double> g;
    auto s = masked_softmax(g.constant(random_tensor({rows, cols}, rng, 30.0)), mask);
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t k = 0; k < cols; ++k) {
        const double v = s.value()[r * cols + k];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (!mask[r * cols + k]) CHECK(v == 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("bce examples and direct formula oracle") {
  CHECK(bce_with_logits_value(0.0, 0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_with_logits_value(20.0, 1.0, 1.0) < 1e-8);
  const double l = 1.0, y = 0.95, pw = 0.96;
  const double sig = 1.0 / (1.0 + std::exp(-l));
  const double direct = -(pw * y * std::log(sig) + (1.0 - y) * std::log(1.0 - sig));
  CHECK(std::abs(bce_with_logits_value(l, y, pw) - direct) < 1e-7);
  // Stable at extreme logits.
  CHECK(bce_with_logits_value(1000.0, 0.0, 1.0) == doctest::Approx(1000.0));
  CHECK(std::isfinite(bce_with_logits_value(-1000.0, 1.0, 1.0)));
}

TEST_CASE("bce loss is non-negative") {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const double l = rng.uniform(-50.0, 50.0), y = rng.uniform(), pw = rng.uniform(0.1, 5.0);
    CHECK(bce_with_logits_value(l, y, pw) >= 0.0);
  }
}

TEST_CASE("linear, concat and abs values") {
  Graph<double> g;
  auto x = g.constant(Tensor<double>({2, 3}, {1, 2, 3, 4, 5, 6}));
  auto w = g.constant(Tensor<double>({3, 2}, {1, 0, 0, 1, 1, 1}));
  auto b = g.constant(Tensor<double>({2}, {0.5, -0.5}));
  const auto y = linear(x, w, b).value();
  CHECK(y.shape() == Shape{2, 2});
  CHECK(y.storage() == std::vector<double>{4.5, 4.5, 10.5, 10.5});

  auto c = concat<double>({x, g.constant(Tensor<double>({2, 1}, {7, 8}))}).value();
  CHECK(c.shape() == Shape{2, 4});
  CHECK(c.storage() == std::vector<double>{1, 2, 3, 7, 4, 5, 6, 8});

  CHECK(abs(g.constant(Tensor<double>({3}, {-2, 0, 3}))).value().storage() == std::vector<double>{2, 0, 3});
}

TEST_CASE("abs subgradient at zero is zero") {
  Parameter<double> p(Tensor<double>({3}, {0.0, -1.0, 2.0}));
  Graph<double> g;
  g.backward(sum(abs(g.parameter(p))));
  CHECK(p.grad.storage() == std::vector<double>{0.0, -1.0, 1.0});
}

TEST_CASE("grad_check on x^2") {
  Parameter<double> p(Tensor<double>::scalar(3.0));
  const Objective f = [&](Graph<double>& g) {
    auto x = g.parameter(p);
    return mul(x, x);
  };
  NamedParameter named[] = {{"x", &p}};
  const auto r = grad_check(f, named);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-8);
  CHECK(p.grad[0] == doctest::Approx(6.0));
}

TEST_CASE("grad_check reports non-finite values with a location") {
  Parameter<double> p(Tensor<double>({2}, {1.0, 0.0}));
  const Objective f = [&](Graph<double>& g) {
    auto x = g.parameter(p);
    // 0 * inf at the second entry.
    auto big = g.constant(Tensor<double>({2}, {1.0, std::numeric_limits<double>::infinity()}));
    return sum(mul(x, big));
  };
  NamedParameter named[] = {{"weights", &p}};
  const auto r = grad_check(f, named);
  CHECK_FALSE(r.passed);
  CHECK_FALSE(r.failure.empty());
}

TEST_CASE("grad_check rejects active dropout") {
  Parameter<double> p(Tensor<double>({4}, 1.0));
  Rng rng(1);
  const Objective f = [&](Graph<double>& g) { return sum(dropout(g.parameter(p), 0.3, rng)); };
  NamedParameter named[] = {{"x", &p}};
  CHECK_THROWS_AS(grad_check(f, named), GradCheckError);
}

TEST_CASE("dropout: inverted scaling, determinism, p = 0 identity") {
  Graph<double> g;
  auto x = g.constant(Tensor<double>({10000}, 1.0));
  Rng r1(4), r2(4);
  const auto a = dropout(x, 0.3, r1).value();
  const auto b = dropout(x, 0.3, r2).value();
  CHECK(a == b);
  CHECK(g.stochastic());
  double mean = 0.0;
  for (double v : a.values()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-12));
    mean += v;
  }
  CHECK(std::abs(mean / 10000.0 - 1.0) < 0.05);

  Graph<double> h;
  Rng r3(4);
  auto y = dropout(h.constant(Tensor<double>({5}, 2.0)), 0.0, r3);
  CHECK(y.value() == Tensor<double>({5}, 2.0));
  CHECK_FALSE(h.stochastic());
}

TEST_CASE("primitive op gradients match finite differences") {
  Rng rng(17);
  Parameter<double> x(random_tensor({2, 3, 4}, rng));
  Parameter<double> y(random_tensor({2, 3, 4}, rng));
  Parameter<double> w(random_tensor({4, 5}, rng));
  Parameter<double> b(random_tensor({5}, rng));
  Parameter<double> gain(random_tensor({4}, rng));
  Parameter<double> beta(random_tensor({4}, rng));
  Parameter<double> q(random_tensor({4}, rng));
  Parameter<double> logits(random_tensor({3, 4}, rng));
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 0, 0, 0, 0, 1, 1, 1};

  SUBCASE("linear") {
    expect_gradients([&](Graph<double>& g) { return random_projection(g, linear(g.parameter(x), g.parameter(w), g.parameter(b)), 1); },
                     {&x, &w, &b});
  }
  SUBCASE("gelu") {
    expect_gradients([&](Graph<double>& g) { return random_projection(g, gelu(g.parameter(x)), 2); }, {&x});
  }
  SUBCASE("layer_norm") {
    expect_gradients(
        [&](Graph<double>& g) {
          return random_projection(g, layer_norm(g.parameter(x), g.parameter(gain), g.parameter(beta), 1e-5), 3);
        },
        {&x, &gain, &beta});
  }
  SUBCASE("masked_softmax") {
    expect_gradients([&](Graph<double>& g) { return random_projection(g, masked_softmax(g.parameter(logits), mask), 4); },
                     {&logits});
  }
  SUBCASE("attention_scores and weighted_sum") {
    const std::vector<std::uint8_t> m(6, 1);
    expect_gradients(
        [&](Graph<double>& g) {
          auto seq = g.parameter(x);
          auto s = masked_softmax(attention_scores(seq, g.parameter(q)), m);
          return random_projection(g, weighted_sum(s, seq), 5);
        },
        {&x, &q});
  }
  SUBCASE("add, sub, mul, scale") {
    expect_gradients(
        [&](Graph<double>& g) {
          auto a = g.parameter(x), c = g.parameter(y);
          return random_projection(g, scale(add(mul(a, c), sub(a, c)), 0.7), 6);
        },
        {&x, &y});
  }
  SUBCASE("abs and concat") {
    expect_gradients(
        [&](Graph<double>& g) {
          auto a = g.parameter(x), c = g.parameter(y);
          return random_projection(g, concat<double>({abs(sub(a, c)), a}), 7);
        },
        {&x, &y});
  }
  SUBCASE("bce_with_logits") {
    const std::vector<double> targets{0.95, 0.05, 0.5, 1.0, 0.0, 0.3, 0.8, 0.1, 0.6, 0.9, 0.2, 0.4};
    expect_gradients([&](Graph<double>& g) { return bce_with_logits(g.parameter(logits), std::span<const double>(targets), 0.96); },
                     {&logits});
  }
}

TEST_CASE("backward requires a scalar root") {
  Graph<double> g;
  Parameter<double> p(Tensor<double>({2}, 1.0));
  CHECK_THROWS(g.backward(g.parameter(p)));
}

TEST_CASE("adamw: decay-only first step") {
  Parameter<double> p(Tensor<double>::scalar(1.0));
  OptimState<double> s;
  s.config.weight_decay = 0.01;
  Parameter<double>* ps[] = {&p};
  adamw_step<double>(ps, s, 0.1);
  // p - lr * wd * p = 1 - 0.1 * 0.01 = 0.999
  CHECK(p.value[0] == doctest::Approx(0.999).epsilon(1e-15));
  CHECK(s.step == 1);
}

TEST_CASE("adamw: first step moves by lr * sign(g)") {
  for (double grad : {0.37, -4.0}) {
    Parameter<double> p(Tensor<double>::scalar(2.0));
    p.grad[0] = grad;
    OptimState<double> s;
    s.config.weight_decay = 0.0;
    Parameter<double>* ps[] = {&p};
    adamw_step<double>(ps, s, 0.01);
    CHECK(p.value[0] - 2.0 == doctest::Approx(-0.01 * (grad > 0 ? 1.0 : -1.0)).epsilon(1e-6));
  }
}

TEST_CASE("adamw: three-step trace matches an independent recurrence") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01, g = 0.5;
  double p = 1.5, m = 0.0, v = 0.0;
  Parameter<double> param(Tensor<double>::scalar(1.5));
  OptimState<double> s;
  s.config = {b1, b2, eps, wd};
  Parameter<double>* ps[] = {&param};
  for (int t = 1; t <= 3; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    p = p - lr * mh / (std::sqrt(vh) + eps) - lr * wd * p;
    param.grad[0] = g;
    adamw_step<double>(ps, s, lr);
    CHECK(std::abs(param.value[0] - p) < 1e-7);
  }
  CHECK(s.step == 3);
}

TEST_CASE("adamw: lr = 0 is an exact no-op; shape mismatch throws") {
  Rng rng(2);
  Parameter<float> p(random_tensor<float>({3, 4}, rng));
  p.grad = random_tensor<float>({3, 4}, rng);
  const auto before = p.value;
  OptimState<float> s;
  Parameter<float>* ps[] = {&p};
  adamw_step<float>(ps, s, 0.0);
  CHECK(p.value == before);

  Parameter<float> other(Tensor<float>({5}, 1.0f));
  Parameter<float>* qs[] = {&other};
  CHECK_THROWS(adamw_step<float>(qs, s, 0.1));
  CHECK_THROWS(adamw_step<float>(ps, s, -1.0));
}

TEST_CASE("cosine schedule endpoints, midpoint and clamping") {
  CHECK(std::abs(cosine_lr(0, 1000, 3e-5, 3e-7) - 3e-5) < 1e-12);
  CHECK(std::abs(cosine_lr(1000, 1000, 3e-5, 3e-7) - 3e-7) < 1e-12);
  CHECK(std::abs(cosine_lr(500, 1000, 3e-5, 3e-7) - 1.515e-5) < 1e-12);
  CHECK(cosine_lr(5000, 1000, 3e-5, 3e-7) == 3e-7);
}

TEST_CASE("cosine schedule is monotone and bounded") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto total = 1 + rng.below(500);
    const double base = rng.uniform(1e-6, 1e-2), lo = base * rng.uniform();
    double prev = base;
    for (std::uint64_t s = 0; s <= total + 3; ++s) {
      const double lr = cosine_lr(s, total, base, lo);
      CHECK(lr <= prev);
      CHECK(lr >= lo);
      CHECK(lr <= base);
      prev = lr;
    }
  }
}

TEST_CASE("inference graph records no gradients") {
  Parameter<float> p(Tensor<float>({2}, 1.0f));
  Graph<float> g(false);
  auto y = sum(g.parameter(p));
  CHECK(y.value().item() == 2.0f);
  CHECK_FALSE(g.requires_grad(y.id()));
}
