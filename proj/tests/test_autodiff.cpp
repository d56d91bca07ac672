#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "sig2sig/autodiff.hpp"
#include "sig2sig/error.hpp"
#include "support.hpp"

using namespace sig2sig;
using ad::Shape;
using ad::Tensor;

namespace {

std::vector<double> grad_of(const ad::Tape& tape, const Tensor& t) {
  const auto g = tape.grad(t);
  return {g.begin(), g.end()};
}

Tensor vec(std::vector<double> v) {
  const auto n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor sig(std::size_t c, std::size_t l, std::vector<double> v) {
  return Tensor({c, l}, std::move(v));
}

// Weighted sum with fixed random weights; avoids degenerate projections.
Tensor project(const Tensor& t, std::uint64_t seed) {
  SeededRng rng(seed);
  return ad::sum(ad::mul(t, testing::random_tensor(t.shape(), rng)));
}

}  // namespace

TEST_CASE("elementwise forward examples") {
  CHECK(ad::add(vec({1, 2}), vec({3, 4})).values() == std::vector<double>{4, 6});
  CHECK(ad::mul(vec({1, 2}), 0.0).values() == std::vector<double>{0, 0});
  CHECK(ad::sum(vec({1, 2, 3})).item() == 6.0);
  CHECK(ad::mean(vec({2, 4})).item() == 3.0);
  CHECK(ad::relu(vec({-1, 2})).values() == std::vector<double>{0, 2});
  CHECK(ad::leaky_relu(vec({-5}), 0.2).item() == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(ad::tanh(vec({0})).item() == 0.0);
  const auto leaky = ad::leaky_relu(vec({-1, 2}), 0.2).values();
  CHECK(leaky[0] == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(leaky[1] == 2.0);
}

TEST_CASE("gradient of sum(a*b) w.r.t. a is b") {
  ad::Tape tape;
  const auto a = tape.watch(vec({1, 2}));
  const auto b = tape.watch(vec({5, 7}));
  tape.backward(ad::sum(a * b));
  CHECK(grad_of(tape, a) == std::vector<double>{5, 7});
  CHECK(grad_of(tape, b) == std::vector<double>{1, 2});
  // Same thing via finite differences.
  const double err = testing::gradient_check(
      [](const std::vector<Tensor>& in) { return ad::sum(in[0] * in[1]); },
      {vec({1, 2}), vec({5, 7})});
  CHECK(err < 1e-6);
}

TEST_CASE("mean gradient") {
  ad::Tape t2;
  const auto a2 = t2.watch(vec({1, 9}));
  t2.backward(ad::mean(a2));
  CHECK(grad_of(t2, a2) == std::vector<double>{0.5, 0.5});

  ad::Tape tape;
  const auto a = tape.watch(vec({1, 2, 3, 4}));
  tape.backward(ad::mean(a));
  for (double g : tape.grad(a)) CHECK(g == 0.25);
}

TEST_CASE("subgradient conventions at zero") {
  auto grad_at_zero = [](ad::Activation act) {
    ad::Tape tape;
    const auto a = tape.watch(vec({0.0}));
    tape.backward(ad::sum(ad::activation(act, a)));
    return tape.grad(a)[0];
  };
  CHECK(grad_at_zero({ad::ActivationKind::relu}) == 0.0);
  CHECK(grad_at_zero({ad::ActivationKind::leaky_relu, 0.2}) == 0.2);
  CHECK(grad_at_zero({ad::ActivationKind::abs}) == -1.0);
  CHECK(grad_at_zero({ad::ActivationKind::tanh}) == 1.0);
}

TEST_CASE("shape mismatch names both shapes") {
  try {
    (void)ad::add(vec({1, 2}), vec({1, 2, 3}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }
}

TEST_CASE("scalar broadcasts against tensors, with gradient") {
  ad::Tape tape;
  const auto a = tape.watch(vec({1, 2, 3}));
  const auto s = tape.watch(Tensor::scalar(2.0));
  const auto out = ad::mul(a, s);
  CHECK(out.values() == std::vector<double>{2, 4, 6});
  tape.backward(ad::sum(out));
  CHECK(tape.grad(s)[0] == 6.0);
  CHECK(grad_of(tape, a) == std::vector<double>{2, 2, 2});
}

TEST_CASE("conv1d examples") {
  const auto x = sig(1, 3, {1, 2, 3});
  const Tensor w({1, 1, 3}, {1, 0, -1});
  const auto b = Tensor::zeros({1});
  // Padded [0,1,2,3,0] against [1,0,-1].
  CHECK(ad::conv1d(x, w, b, 1, 1).values() == std::vector<double>{-2, -2, 2});

  const auto delta = Tensor({1, 1, 1}, {1});
  const auto y = sig(1, 5, {0.5, -1, 2, 3, 4});
  CHECK(ad::conv1d(y, delta, b, 1, 0).values() == y.values());
}

TEST_CASE("conv_transpose1d examples") {
  const auto x = sig(1, 3, {1, 2, 3});
  const Tensor w({1, 1, 3}, {1, 2, 3});
  CHECK(ad::conv_transpose1d(sig(1, 1, {1}), w, Tensor::zeros({1}), 1, 0).values() ==
        std::vector<double>{1, 2, 3});
  CHECK(ad::conv_transpose1d(x, Tensor({1, 1, 1}, {1}), Tensor::zeros({1}), 1, 0).values() ==
        x.values());

  SeededRng rng(1);
  const auto in = testing::random_tensor({2, 64}, rng);
  const auto wt = testing::random_tensor({2, 3, 16}, rng);
  const auto out = ad::conv_transpose1d(in, wt, Tensor::zeros({3}), 2, 7);
  CHECK(out.shape() == Shape{3, 128});
}

TEST_CASE("conv_transpose1d is the adjoint of conv1d") {
  SeededRng rng(2);
  for (std::size_t trial = 0; trial < 40; ++trial) {
    const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(3);
    const std::size_t k = 1 + rng.below(8), s = 1 + rng.below(3), p = rng.below((k + 1) / 2);
    // len + 2p - k divisible by s, so the transpose maps back onto [cin, len].
    const std::size_t len = rng.below(10) * s + k - 2 * p;
    const auto x = testing::random_tensor({cin, len}, rng);
    const auto w = testing::random_tensor({cout, cin, k}, rng);
    const auto ax = ad::conv1d(x, w, Tensor::zeros({cout}), s, p);
    const auto y = testing::random_tensor(ax.shape(), rng);
    // Same weights read as [in=cout, out=cin, k] for the transpose.
    const auto aty = ad::conv_transpose1d(y, Tensor({cout, cin, k}, w.values()),
                                          Tensor::zeros({cin}), s, p);
    REQUIRE(aty.shape() == x.shape());
    const double rhs = testing::dot(x.data(), aty.data());
    const double lhs = testing::dot(ax.data(), y.data());
    CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(1.0, std::fabs(lhs)));
  }
}

TEST_CASE("conv output length matches the geometry formula") {
  SeededRng rng(4);
  for (std::size_t len : {4, 9, 16, 31})
    for (std::size_t k : {1, 3, 4, 16})
      for (std::size_t s : {1, 2, 3})
        for (std::size_t p : {0, 1, 7}) {
          if (len + 2 * p < k) continue;
          const auto x = testing::random_tensor({1, len}, rng);
          const auto w = testing::random_tensor({2, 1, k}, rng);
          const auto out = ad::conv1d(x, w, Tensor::zeros({2}), s, p);
          CHECK(out.dim(1) == (len + 2 * p - k) / s + 1);
          const auto wt = testing::random_tensor({1, 2, k}, rng);
          if ((len - 1) * s + k > 2 * p) {
            const auto up = ad::conv_transpose1d(x, wt, Tensor::zeros({2}), s, p);
            CHECK(up.dim(1) == (len - 1) * s - 2 * p + k);
          }
        }
}

TEST_CASE("concat and slice") {
  CHECK(ad::concat_channels(sig(1, 2, {1, 2}), sig(1, 2, {3, 4})).values() ==
        std::vector<double>{1, 2, 3, 4});
  const auto a = sig(1, 2, {1, 2});
  const auto b = sig(2, 2, {3, 4, 5, 6});
  const auto c = ad::concat_channels(a, b);
  CHECK(c.shape() == Shape{3, 2});
  CHECK(c.values() == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(ad::slice_channels(c, 1, 2).values() == b.values());
  CHECK_THROWS_AS(ad::concat_channels(a, sig(1, 3, {1, 2, 3})), ShapeError);

  ad::Tape tape;
  const auto ta = tape.watch(a), tb = tape.watch(b);
  tape.backward(ad::sum(ad::concat_channels(ta, tb)));
  CHECK(grad_of(tape, ta) == std::vector<double>{1, 1});
  CHECK(grad_of(tape, tb) == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("tape semantics") {
  SUBCASE("fan-out accumulates") {
    ad::Tape t2;
    const auto x = t2.watch(vec({1, 2}));
    t2.backward(ad::sum(x + x));
    CHECK(grad_of(t2, x) == std::vector<double>{2, 2});
    ad::Tape tape;
    const auto a = tape.watch(vec({3.0}));
    tape.backward(ad::sum(a * a + a));
    CHECK(tape.grad(a)[0] == 7.0);
  }
  SUBCASE("non-ancestors have zero gradient") {
    ad::Tape tape;
    const auto a = tape.watch(vec({1, 2}));
    const auto unused = tape.watch(vec({5, 5}));
    (void)ad::mul(unused, 3.0);
    tape.backward(ad::sum(a));
    CHECK(grad_of(tape, unused) == std::vector<double>{0, 0});
  }
  SUBCASE("leaf root gets unit seed") {
    ad::Tape tape;
    const auto a = tape.watch(Tensor::scalar(4.0));
    tape.backward(a);
    CHECK(tape.grad(a)[0] == 1.0);
  }
  SUBCASE("non-scalar root is rejected") {
    ad::Tape tape;
    const auto a = tape.watch(vec({1, 2}));
    CHECK_THROWS_AS(tape.backward(ad::relu(a)), Error);
  }
  SUBCASE("root from another tape is rejected") {
    ad::Tape t1, t2;
    const auto a = t1.watch(Tensor::scalar(1.0));
    CHECK_THROWS_AS(t2.backward(a), Error);
  }
  SUBCASE("tracked tensors are immutable") {
    ad::Tape tape;
    auto a = tape.watch(vec({1}));
    CHECK_THROWS_AS(a.mutable_data(), Error);
  }
  SUBCASE("detach cuts the gradient") {
    ad::Tape tape;
    const auto a = tape.watch(vec({2.0}));
    tape.backward(ad::sum(a * ad::detach(a)));
    CHECK(tape.grad(a)[0] == 2.0);
  }
}

TEST_CASE("forward values do not depend on gradient recording") {
  SeededRng rng(9);
  const auto x = testing::random_tensor({2, 32}, rng);
  const auto w = testing::random_tensor({3, 2, 16}, rng);
  const auto b = testing::random_tensor({3}, rng);
  auto chain = [](const Tensor& x, const Tensor& w, const Tensor& b) {
    return ad::tanh(ad::leaky_relu(ad::conv1d(x, w, b, 2, 7), 0.2));
  };
  const auto plain = chain(x, w, b);
  ad::Tape tape;
  const auto tracked = chain(tape.watch(x), tape.watch(w), tape.watch(b));
  CHECK(plain.values() == tracked.values());
}

TEST_CASE("finite-difference agreement over random layer instances") {
  SeededRng rng(2024);
  const auto slope = 0.2;
  int instances = 0;
  double worst = 0.0;
  auto check = [&](const testing::ScalarFn& fn, const std::vector<Tensor>& in) {
    const double err = testing::gradient_check(fn, in);
    worst = std::max(worst, err);
    ++instances;
    CHECK(err < 1e-5);
  };

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(3);
    const std::size_t k = 1 + rng.below(6), s = 1 + rng.below(3), p = rng.below(k);
    const std::size_t len = k + rng.below(12);
    const auto seed = rng.next_u64();
    check(
        [=](const std::vector<Tensor>& v) {
          return project(ad::conv1d(v[0], v[1], v[2], s, p), seed);
        },
        {testing::random_tensor({cin, len}, rng), testing::random_tensor({cout, cin, k}, rng),
         testing::random_tensor({cout}, rng)});
    check(
        [=](const std::vector<Tensor>& v) {
          return project(ad::conv_transpose1d(v[0], v[1], v[2], s, p), seed);
        },
        {testing::random_tensor({cin, len}, rng), testing::random_tensor({cin, cout, k}, rng),
         testing::random_tensor({cout}, rng)});
  }

  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    const auto seed = rng.next_u64();
    const auto a = testing::random_tensor({n}, rng);
    // Keep the divisor away from zero.
    auto b = testing::random_tensor({n}, rng);
    for (auto& v : b.mutable_data()) v = v >= 0 ? v + 0.5 : v - 0.5;
    for (auto op : {ad::BinaryOp::add, ad::BinaryOp::sub, ad::BinaryOp::mul, ad::BinaryOp::div})
      check([=](const std::vector<Tensor>& v) { return project(ad::elementwise(op, v[0], v[1]), seed); },
            {a, b});
    check([=](const std::vector<Tensor>& v) { return project(ad::mul(v[0], v[1]), seed); },
          {a, Tensor::scalar(b[0])});
    for (auto kind : {ad::ActivationKind::relu, ad::ActivationKind::leaky_relu,
                      ad::ActivationKind::tanh, ad::ActivationKind::abs,
                      ad::ActivationKind::square})
      check(
          [=](const std::vector<Tensor>& v) {
            return project(ad::activation({kind, slope}, v[0]), seed);
          },
          {a});
    check([](const std::vector<Tensor>& v) { return ad::mean(ad::square(v[0])); }, {a});
  }

  for (int trial = 0; trial < 5; ++trial) {
    const auto seed = rng.next_u64();
    check(
        [=](const std::vector<Tensor>& v) {
          const auto c = ad::concat_channels(v[0], v[1]);
          return project(ad::slice_channels(c, 1, 2), seed);
        },
        {testing::random_tensor({2, 5}, rng), testing::random_tensor({1, 5}, rng)});
  }

  CHECK(instances >= 100);
  MESSAGE("instances: " << instances << ", worst relative error: " << worst);
}
