#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "sig2sig/dataset.hpp"
#include "sig2sig/error.hpp"
#include "sig2sig/eval.hpp"
#include "support.hpp"

using namespace sig2sig;
using dataset::DatasetConfig;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sig2sig_test_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

std::vector<const std::vector<double>*> all_signals(const dataset::SignalDataset& ds) {
  std::vector<const std::vector<double>*> out;
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& p : *split) {
      out.push_back(&p.x);
      out.push_back(&p.y);
    }
  return out;
}

// Fraction of (two-sided) DFT energy at frequencies outside [lo, hi] cycles/window.
double out_of_band_fraction(const std::vector<double>& s, double lo, double hi) {
  const auto spec = testing::naive_dft(s);
  const std::size_t n = s.size();
  double total = 0.0, outside = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::norm(spec[k]);
    const double f = static_cast<double>(std::min(k, n - k));
    total += e;
    if (f < lo || f > hi) outside += e;
  }
  return outside / total;
}

double mean_paired_r(const DatasetConfig& cfg) {
  const auto ds = dataset::generate_dataset(cfg);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& p : *split) {
      sum += eval::pearson_r(p.x, p.y);
      ++n;
    }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("zero phase offset without tilt gives identical domains") {
  DatasetConfig cfg;
  cfg.max_phase = 0.0;
  cfg.tilt = false;
  cfg.seed = 42;
  const auto ds = dataset::generate_dataset(cfg);
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& p : *split) CHECK(p.x == p.y);
}

TEST_CASE("signals are peak-normalized exactly") {
  DatasetConfig cfg;
  cfg.seed = 3;
  const auto ds = dataset::generate_dataset(cfg);
  for (const auto* s : all_signals(ds)) {
    double peak = 0.0;
    for (double v : *s) peak = std::max(peak, std::fabs(v));
    CHECK(peak == 1.0);
  }
  CHECK(ds.train_x().size() == 16);
  CHECK(ds.train_y().size() == 16);
  CHECK(ds.test.size() == 4);
}

TEST_CASE("single component at f = 4 peaks at bin 4") {
  DatasetConfig cfg;
  cfg.n_components = 1;
  const auto pair = dataset::synthesize(cfg, {{4.0, 0.7, 1.1, 0.3}});
  const auto spec = testing::naive_dft(pair.x);
  std::size_t best = 0;
  for (std::size_t k = 1; k <= pair.x.size() / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  CHECK(best == 4);
}

TEST_CASE("integer-frequency signals are bandlimited") {
  // With zero jitter every component sits on a DFT bin, so nothing leaks
  // outside the band beyond float32 storage noise.
  auto check_cfg = [](DatasetConfig cfg) {
    const auto ds = dataset::generate_dataset(cfg);
    double worst = 0.0;
    for (const auto* s : all_signals(ds))
      worst = std::max(worst, out_of_band_fraction(*s, cfg.f_lo - cfg.freq_jitter,
                                                   cfg.f_hi + cfg.freq_jitter));
    CHECK(worst < 1e-9);
  };
  DatasetConfig defaults;
  defaults.freq_jitter = 0.0;
  check_cfg(defaults);

  SeededRng rng(99);
  for (int i = 0; i < 20; ++i) {
    DatasetConfig cfg;
    cfg.freq_jitter = 0.0;
    cfg.window_length = std::size_t{64} << rng.below(3);
    cfg.n_components = 1 + rng.below(6);
    cfg.f_lo = 1.0 + static_cast<double>(rng.below(4));
    cfg.f_hi = cfg.f_lo + 1.0 + static_cast<double>(rng.below(20));
    cfg.max_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    cfg.tilt = rng.below(2) == 1;
    cfg.seed = rng.next_u64();
    check_cfg(cfg);
  }
}

TEST_CASE("jittered frequencies leak outside the band") {
  // Off-grid frequencies are not periodic in the window; their energy spreads
  // over every bin. Pin the measured leakage so regressions show up.
  DatasetConfig cfg;
  cfg.seed = 42;
  const auto ds = dataset::generate_dataset(cfg);
  double worst = 0.0;
  for (const auto* s : all_signals(ds))
    worst = std::max(worst, out_of_band_fraction(*s, cfg.f_lo - cfg.freq_jitter,
                                                 cfg.f_hi + cfg.freq_jitter));
  MESSAGE("worst out-of-band fraction with jitter " << cfg.freq_jitter << ": " << worst);
  CHECK(worst > 1e-9);
  CHECK(worst < 0.15);
}

TEST_CASE("phase range controls paired correlation") {
  // For psi ~ U[0, a], E[cos psi] = sin(a) / a: 1 at a = 0, 2/pi at pi/2 and
  // 0 at both pi and 2 pi. The pi and 2 pi points are equal in expectation.
  auto r_at = [](std::uint64_t seed, double psi) {
    DatasetConfig cfg;
    cfg.seed = seed;
    cfg.max_phase = psi;
    return mean_paired_r(cfg);
  };
  const double pi = std::numbers::pi;
  for (std::uint64_t seed : {42ULL, 0ULL, 7ULL}) {
    const double r0 = r_at(seed, 0.0), r_half = r_at(seed, pi / 2), r_pi = r_at(seed, pi);
    const double r_2pi = r_at(seed, 2 * pi);
    MESSAGE("seed " << seed << ": " << r0 << " " << r_half << " " << r_pi << " " << r_2pi);
    CHECK(r0 > r_half);
    CHECK(r_half > r_pi);
    CHECK(r0 > r_2pi);
  }

  double sum_pi = 0.0, sum_2pi = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    sum_pi += r_at(1000 + s, pi);
    sum_2pi += r_at(1000 + s, 2 * pi);
  }
  MESSAGE("mean over seeds: pi " << sum_pi / seeds << ", 2 pi " << sum_2pi / seeds);
  CHECK(std::fabs(sum_pi / seeds) < 0.05);
  CHECK(std::fabs(sum_2pi / seeds) < 0.05);
}

TEST_CASE("latents regenerate stored signals") {
  DatasetConfig cfg;
  cfg.seed = 5;
  const auto ds = dataset::generate_dataset(cfg);
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& p : *split) {
      const auto again = dataset::synthesize(cfg, p.latents);
      CHECK(again.x == p.x);
      CHECK(again.y == p.y);
    }
}

TEST_CASE("latent draws respect the configuration") {
  DatasetConfig cfg;
  cfg.seed = 8;
  const auto ds = dataset::generate_dataset(cfg);
  for (const auto& p : ds.train) {
    REQUIRE(p.latents.size() == cfg.n_components);
    for (const auto& c : p.latents) {
      const double base = std::round(c.freq);
      CHECK(std::fabs(c.freq - base) <= cfg.freq_jitter);
      CHECK(base >= cfg.f_lo);
      CHECK(base <= cfg.f_hi);
      CHECK(c.amp >= cfg.amp_lo);
      CHECK(c.amp < cfg.amp_hi);
      CHECK(c.phase >= 0.0);
      CHECK(c.phase < 2.0 * std::numbers::pi);
      CHECK(c.phase_offset >= 0.0);
      CHECK(c.phase_offset < cfg.max_phase);
    }
  }
  // Test pairs are fresh draws.
  for (const auto& t : ds.test)
    for (const auto& p : ds.train) CHECK(t.x != p.x);
}

TEST_CASE("configuration validation") {
  auto invalid = [](auto mutate) {
    DatasetConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  invalid([](DatasetConfig& c) { c.window_length = 100; });
  invalid([](DatasetConfig& c) { c.f_hi = 64.0; });
  invalid([](DatasetConfig& c) { c.f_lo = 0.0; });
  invalid([](DatasetConfig& c) { c.f_lo = 5.0, c.f_hi = 4.0; });
  invalid([](DatasetConfig& c) { c.max_phase = 7.0; });
  invalid([](DatasetConfig& c) { c.amp_lo = 0.0; });
  invalid([](DatasetConfig& c) { c.n_components = 0; });
  CHECK_NOTHROW(DatasetConfig{}.validate());
}

TEST_CASE("dataset files") {
  DatasetConfig cfg;
  cfg.seed = 42;
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  dataset::save_dataset(dataset::generate_dataset(cfg), a);
  dataset::save_dataset(dataset::generate_dataset(cfg), b);
  dataset::save_dataset(dataset::load_dataset(a), c);
  for (const char* name : {"train_x.sig", "train_y.sig", "test_x.sig", "test_y.sig", "config.txt"}) {
    CHECK(slurp(a / name) == slurp(b / name));
    CHECK(slurp(a / name) == slurp(c / name));
  }

  const auto loaded = dataset::load_dataset(a);
  const auto fresh = dataset::generate_dataset(cfg);
  CHECK(loaded.test[2].y == fresh.test[2].y);
  CHECK(loaded.train_x() == fresh.train_x());

  SUBCASE("bad magic") {
    auto bytes = slurp(a / "train_x.sig");
    bytes[0] = 'X';
    spit(a / "train_x.sig", bytes);
    try {
      (void)dataset::read_signals(a / "train_x.sig");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind() == FormatError::Kind::bad_magic);
      CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
    }
  }
  SUBCASE("truncated") {
    auto bytes = slurp(a / "test_y.sig");
    bytes.resize(bytes.size() - 3);
    spit(a / "test_y.sig", bytes);
    try {
      (void)dataset::load_dataset(a);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind() == FormatError::Kind::truncated);
    }
  }
  SUBCASE("version") {
    auto bytes = slurp(a / "test_x.sig");
    bytes[4] = 9;
    spit(a / "test_x.sig", bytes);
    try {
      (void)dataset::read_signals(a / "test_x.sig");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.kind() == FormatError::Kind::bad_version);
    }
  }
  SUBCASE("unknown config key") {
    std::ofstream(a / "config.txt", std::ios::app) << "colour = blue\n";
    CHECK_THROWS(dataset::load_dataset(a));
  }
}

TEST_CASE("sig header") {
  const auto dir = scratch("hdr");
  dataset::write_signals(dir / "s.sig", std::vector<std::vector<double>>{{1, 2, 3}, {4, 5, 6}});
  const auto bytes = slurp(dir / "s.sig");
  CHECK(bytes.substr(0, 4) == "SIG1");
  CHECK(bytes.size() == 16 + 2 * 3 * 4);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);
  CHECK(dataset::read_signals(dir / "s.sig") ==
        std::vector<std::vector<double>>{{1, 2, 3}, {4, 5, 6}});
  CHECK_THROWS_AS(
      dataset::write_signals(dir / "r.sig", std::vector<std::vector<double>>{{1, 2}, {1}}),
      Error);
}
