#include "sig2sig/dataset.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "sig2sig/error.hpp"

namespace sig2sig::dataset {

namespace {

constexpr char kSigMagic[] = "SIG1";
constexpr std::uint32_t kSigVersion = 1;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double draw_between(SeededRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

void normalize_peak(std::vector<double>& s) {
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::fabs(v));
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw NumericError("generated signal is identically zero or non-finite");
  }
  for (double& v : s) v = static_cast<double>(static_cast<float>(v / peak));
}

}  // namespace

void DatasetConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("dataset config: " + msg); };
  if (window_length < 4 || !is_power_of_two(window_length)) {
    fail(fmt::format("window_length {} must be a power of two >= 4", window_length));
  }
  if (n_components < 1) fail("n_components must be >= 1");
  const double nyquist = static_cast<double>(window_length) / 2.0;
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < nyquist)) {
    fail(fmt::format("need 0 < f_lo < f_hi < N/2, got f_lo={} f_hi={} N/2={}", f_lo, f_hi,
                     nyquist));
  }
  if (!(freq_jitter >= 0.0) || !(f_lo - freq_jitter > 0.0) || !(f_hi + freq_jitter < nyquist)) {
    fail(fmt::format("freq_jitter {} must keep [f_lo - jitter, f_hi + jitter] inside (0, N/2)",
                     freq_jitter));
  }
  if (std::ceil(f_lo) > std::floor(f_hi)) {
    fail(fmt::format("no integer frequency in [{}, {}]", f_lo, f_hi));
  }
  if (!(max_phase >= 0.0 && max_phase <= 2.0 * std::numbers::pi)) {
    fail(fmt::format("max_phase {} must lie in [0, 2 pi]", max_phase));
  }
  if (!(amp_lo > 0.0 && amp_lo <= amp_hi && std::isfinite(amp_hi))) {
    fail(fmt::format("amplitude range [{}, {}] must satisfy 0 < lo <= hi", amp_lo, amp_hi));
  }
  if (n_train_pairs < 1) fail("n_train_pairs must be >= 1");
}

kv::Pairs DatasetConfig::to_pairs() const {
  return {
      {"window_length", std::to_string(window_length)},
      {"n_components", std::to_string(n_components)},
      {"f_lo", kv::from_double(f_lo)},
      {"f_hi", kv::from_double(f_hi)},
      {"max_phase", kv::from_double(max_phase)},
      {"amp_lo", kv::from_double(amp_lo)},
      {"amp_hi", kv::from_double(amp_hi)},
      {"freq_jitter", kv::from_double(freq_jitter)},
      {"tilt", tilt ? "true" : "false"},
      {"n_train_pairs", std::to_string(n_train_pairs)},
      {"n_test_pairs", std::to_string(n_test_pairs)},
      {"seed", std::to_string(seed)},
  };
}

bool DatasetConfig::set(const std::string& key, const std::string& value) {
  if (key == "window_length") window_length = kv::to_size(key, value);
  else if (key == "n_components") n_components = kv::to_size(key, value);
  else if (key == "f_lo") f_lo = kv::to_double(key, value);
  else if (key == "f_hi") f_hi = kv::to_double(key, value);
  else if (key == "max_phase") max_phase = kv::to_double(key, value);
  else if (key == "amp_lo") amp_lo = kv::to_double(key, value);
  else if (key == "amp_hi") amp_hi = kv::to_double(key, value);
  else if (key == "freq_jitter") freq_jitter = kv::to_double(key, value);
  else if (key == "tilt") tilt = kv::to_bool(key, value);
  else if (key == "n_train_pairs") n_train_pairs = kv::to_size(key, value);
  else if (key == "n_test_pairs") n_test_pairs = kv::to_size(key, value);
  else if (key == "seed") seed = kv::to_u64(key, value);
  else return false;
  return true;
}

std::vector<std::vector<double>> SignalDataset::train_x() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : train) out.push_back(p.x);
  return out;
}

std::vector<std::vector<double>> SignalDataset::train_y() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : train) out.push_back(p.y);
  return out;
}

double tilt_weight(const DatasetConfig& cfg, double freq) {
  return cfg.tilt ? 1.0 / (1.0 + freq / cfg.f_hi) : 1.0;
}

SignalPair synthesize(const DatasetConfig& cfg, std::vector<Component> latents) {
  const std::size_t n = cfg.window_length;
  const double len = static_cast<double>(n);
  SignalPair pair;
  pair.x.assign(n, 0.0);
  pair.y.assign(n, 0.0);
  for (const auto& c : latents) {
    const double w = tilt_weight(cfg, c.freq);
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = 2.0 * std::numbers::pi * c.freq * static_cast<double>(i) / len + c.phase;
      pair.x[i] += c.amp * std::sin(arg);
      pair.y[i] += (w * c.amp) * std::sin(arg + c.phase_offset);
    }
  }
  normalize_peak(pair.x);
  normalize_peak(pair.y);
  pair.latents = std::move(latents);
  return pair;
}

SignalPair generate_pair(const DatasetConfig& cfg, SeededRng& rng) {
  const auto grid_lo = static_cast<std::size_t>(std::ceil(cfg.f_lo));
  const auto grid_count = static_cast<std::size_t>(std::floor(cfg.f_hi)) - grid_lo + 1;
  std::vector<Component> latents(cfg.n_components);
  for (auto& c : latents) {
    const double base = static_cast<double>(grid_lo + rng.below(grid_count));
    const double jitter = draw_between(rng, -cfg.freq_jitter, cfg.freq_jitter);
    c.freq = base + jitter;
    c.amp = draw_between(rng, cfg.amp_lo, cfg.amp_hi);
    c.phase = draw_between(rng, 0.0, 2.0 * std::numbers::pi);
  }
  for (auto& c : latents) c.phase_offset = cfg.max_phase * rng.uniform();
  return synthesize(cfg, std::move(latents));
}

SignalDataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  SignalDataset ds;
  ds.config = cfg;
  SeededRng rng(cfg.seed);
  for (std::size_t i = 0; i < cfg.n_train_pairs; ++i) ds.train.push_back(generate_pair(cfg, rng));
  for (std::size_t i = 0; i < cfg.n_test_pairs; ++i) ds.test.push_back(generate_pair(cfg, rng));
  return ds;
}

void write_signals(const std::filesystem::path& file,
                   std::span<const std::vector<double>> signals) {
  const std::size_t len = signals.empty() ? 0 : signals.front().size();
  io::Bytes out;
  out.reserve(16 + 4 * signals.size() * len);
  io::put_bytes(out, kSigMagic);
  io::put_le<std::uint32_t>(out, kSigVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signals.size()));
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(len));
  for (const auto& s : signals) {
    if (s.size() != len) {
      throw ShapeError(fmt::format("{}: signals have unequal lengths ({} vs {})", file.string(),
                                   s.size(), len));
    }
    for (double v : s) io::put_f32(out, v);
  }
  io::write_file(file, out);
}

std::vector<std::vector<double>> read_signals(const std::filesystem::path& file) {
  const auto bytes = io::read_file(file);
  io::Reader in(bytes, file.string());
  if (bytes.size() < 4 || in.text(4) != kSigMagic) {
    throw FormatError(FormatError::Kind::bad_magic, file.string() + ": bad magic");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kSigVersion) {
    throw FormatError(FormatError::Kind::bad_version,
                      fmt::format("{}: unsupported version {}", file.string(), version));
  }
  const std::size_t count = in.le<std::uint32_t>();
  const std::size_t len = in.le<std::uint32_t>();
  if (in.remaining() != 4 * count * len) {
    throw FormatError(FormatError::Kind::truncated,
                      fmt::format("{}: truncated or inconsistent: header declares {}x{} float32 "
                                  "samples ({} bytes) but {} bytes follow",
                                  file.string(), count, len, 4 * count * len, in.remaining()));
  }
  std::vector<std::vector<double>> out(count, std::vector<double>(len));
  for (auto& s : out)
    for (auto& v : s) v = in.f32();
  return out;
}

void save_dataset(const SignalDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError(FormatError::Kind::io, "cannot create " + dir.string());
  std::vector<std::vector<double>> test_x, test_y;
  for (const auto& p : ds.test) {
    test_x.push_back(p.x);
    test_y.push_back(p.y);
  }
  write_signals(dir / "train_x.sig", ds.train_x());
  write_signals(dir / "train_y.sig", ds.train_y());
  write_signals(dir / "test_x.sig", test_x);
  write_signals(dir / "test_y.sig", test_y);
  const auto text = kv::format(ds.config.to_pairs());
  io::write_file(dir / "config.txt", io::Bytes(text.begin(), text.end()));
}

SignalDataset load_dataset(const std::filesystem::path& dir) {
  SignalDataset ds;
  for (const auto& [key, value] : kv::parse(io::read_text(dir / "config.txt"))) {
    if (!ds.config.set(key, value)) {
      throw FormatError(FormatError::Kind::malformed,
                        fmt::format("{}: unknown key '{}'", (dir / "config.txt").string(), key));
    }
  }
  ds.config.validate();
  const auto train_x = read_signals(dir / "train_x.sig");
  const auto train_y = read_signals(dir / "train_y.sig");
  const auto test_x = read_signals(dir / "test_x.sig");
  const auto test_y = read_signals(dir / "test_y.sig");
  const auto& cfg = ds.config;
  auto check = [&](const std::vector<std::vector<double>>& s, std::size_t count, const char* name) {
    if (s.size() != count || (!s.empty() && s.front().size() != cfg.window_length)) {
      throw FormatError(FormatError::Kind::malformed,
                        fmt::format("{}: expected {} signals of length {}", name, count,
                                    cfg.window_length));
    }
  };
  check(train_x, cfg.n_train_pairs, "train_x.sig");
  check(train_y, cfg.n_train_pairs, "train_y.sig");
  check(test_x, cfg.n_test_pairs, "test_x.sig");
  check(test_y, cfg.n_test_pairs, "test_y.sig");
  for (std::size_t i = 0; i < train_x.size(); ++i) ds.train.push_back({train_x[i], train_y[i], {}});
  for (std::size_t i = 0; i < test_x.size(); ++i) ds.test.push_back({test_x[i], test_y[i], {}});
  return ds;
}

}  // namespace sig2sig::dataset
