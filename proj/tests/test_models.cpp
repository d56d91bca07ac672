#include <doctest.h>

#include <cmath>
#include <vector>

#include "sig2sig/error.hpp"
#include "sig2sig/models.hpp"
#include "support.hpp"

using namespace sig2sig;
using ad::Tensor;

namespace {

models::GeneratorArch toy_generator() {
  models::GeneratorArch a;
  a.length = 32;
  a.base_channels = 4;
  return a;
}

models::DiscriminatorArch toy_discriminator() {
  models::DiscriminatorArch a;
  a.length = 32;
  a.base_channels = 4;
  return a;
}

}  // namespace

TEST_CASE("generator level lengths") {
  SeededRng rng(0);
  const auto gen = models::build_generator({}, rng);
  std::vector<std::size_t> down{128}, up;
  for (const auto& block : gen.down) {
    std::size_t len = down.back();
    for (const auto& l : block) len = l.out_len(len);
    down.push_back(len);
  }
  CHECK(down == std::vector<std::size_t>{128, 64, 32, 16});
  std::size_t len = 16;
  up.push_back(len);
  for (std::size_t i = models::kLevels; i-- > 0;) {
    for (const auto& l : gen.up[i]) len = l.out_len(len);
    up.push_back(len);
  }
  CHECK(up == std::vector<std::size_t>{16, 32, 64, 128});
}

TEST_CASE("generator preserves length and stays in (-1, 1)") {
  for (std::size_t len : {16, 32, 64, 128, 256}) {
    models::GeneratorArch arch;
    arch.length = len;
    arch.base_channels = 4;
    SeededRng rng(len);
    const auto gen = models::build_generator(arch, rng);
    const auto x = testing::random_tensor({1, len}, rng);
    const auto y = models::generate(gen, x);
    CHECK(y.shape() == ad::Shape{1, len});
    for (double v : y.data()) {
      REQUIRE(v > -1.0);
      REQUIRE(v < 1.0);
    }
  }
}

TEST_CASE("generator is deterministic") {
  SeededRng a(7), b(7);
  const auto g1 = models::build_generator({}, a);
  const auto g2 = models::build_generator({}, b);
  SeededRng rng(1);
  const auto x = testing::random_tensor({1, 128}, rng);
  const auto y1 = models::generate(g1, x);
  CHECK(y1.values() == models::generate(g1, x).values());
  CHECK(y1.values() == models::generate(g2, x).values());
  double mean = 0.0;
  for (double v : y1.data()) mean += v / 128.0;
  CHECK(std::fabs(mean) < 0.5);
  CHECK_THROWS_AS(models::generate(g1, testing::random_tensor({1, 64}, rng)), ShapeError);
}

TEST_CASE("architecture validation") {
  models::GeneratorArch g;
  g.kernel = 25;
  g.stride = 4;  // k - stride odd
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.kernel = 24;
  CHECK_NOTHROW(g.validate());
  g.length = 100;  // not divisible by 4^3
  CHECK_THROWS_AS(g.validate(), ConfigError);

  models::DiscriminatorArch d;
  d.length = 8;
  d.kernel = 4;  // patch map of length 1
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("discriminator geometry") {
  const models::DiscriminatorArch arch;
  CHECK(arch.patch_count() == 16);
  // Receptive field recursion, independent of the library's own formula.
  std::size_t rf = 1, jump = 1;
  for (int i = 0; i < 3; ++i) {
    rf += (arch.kernel - 1) * jump;
    jump *= arch.stride;
  }
  rf += (arch.head_kernel - 1) * jump;
  CHECK(arch.receptive_field() == rf);
  CHECK(rf == 122);
  CHECK(rf < arch.length);

  SeededRng rng(0);
  const auto d = models::build_discriminator(arch, rng);
  const auto x = testing::random_tensor({1, 128}, rng);
  CHECK(d.forward(nn::BoundParams(d.params, nullptr), x).shape() == ad::Shape{1, 16});

  auto wide = arch;
  wide.base_channels = 64;
  SeededRng rng2(0);
  const auto d2 = models::build_discriminator(wide, rng2);
  CHECK(d2.forward(nn::BoundParams(d2.params, nullptr), x).shape() == ad::Shape{1, 16});
}

TEST_CASE("zero weights give bias-valued patch scores") {
  SeededRng rng(0);
  auto d = models::build_discriminator({}, rng);
  for (std::size_t i = 0; i < d.params.size(); ++i) {
    if (d.params.entry(i).role == nn::ParamRole::conv_weight) {
      for (auto& v : d.params.mutable_values(i)) v = 0.0;
    }
  }
  d.params.assign(d.params.index_of("head.conv.bias"), {0.375});
  const auto scores =
      d.forward(nn::BoundParams(d.params, nullptr), testing::random_tensor({1, 128}, rng));
  for (double v : scores.data()) CHECK(v == 0.375);
}

TEST_CASE("every parameter receives gradient") {
  SeededRng rng(21);
  auto gen = models::build_generator(toy_generator(), rng);
  auto disc = models::build_discriminator(toy_discriminator(), rng);
  const auto x = testing::random_tensor({1, 32}, rng);

  ad::Tape tape;
  const nn::BoundParams g(gen.params, &tape), d(disc.params, &tape);
  const auto loss = ad::mean(ad::square(disc.forward(d, gen.forward(g, x))));
  tape.backward(loss);
  for (const auto* bound : {&g, &d}) {
    const auto grads = bound->gradients();
    for (const auto& gr : grads) {
      double norm = 0.0;
      for (double v : gr) norm += v * v;
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("full networks match finite differences") {
  SeededRng rng(77);
  for (int trial = 0; trial < 2; ++trial) {
    auto gen = models::build_generator(toy_generator(), rng);
    const auto x = testing::random_tensor({1, 32}, rng);
    const auto proj = testing::random_tensor({1, 32}, rng);
    const double err = testing::store_gradient_check(gen.params, [&](const nn::BoundParams& b) {
      return ad::sum(ad::mul(gen.forward(b, x), proj));
    });
    CHECK(err < 1e-4);

    auto disc = models::build_discriminator(toy_discriminator(), rng);
    const auto dproj = testing::random_tensor({1, 4}, rng);
    const double derr = testing::store_gradient_check(disc.params, [&](const nn::BoundParams& b) {
      return ad::sum(ad::mul(disc.forward(b, x), dproj));
    });
    CHECK(derr < 1e-4);
    MESSAGE("generator " << err << ", discriminator " << derr);
  }
}
