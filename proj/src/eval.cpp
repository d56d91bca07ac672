#include "sig2sig/eval.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sig2sig/error.hpp"
#include "sig2sig/fft.hpp"

namespace sig2sig::eval {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(fmt::format("{}: length mismatch {} vs {}", what, a.size(), b.size()));
  }
}

std::vector<double> unit_peak(std::vector<double> v) {
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) throw NumericError("cannot scale an all-zero spectrum to unit peak");
  for (auto& x : v) x /= peak;
  return v;
}

Aggregate aggregate(const std::vector<PairMetrics>& pairs, double PairMetrics::*field) {
  Aggregate a{pairs.front().*field, pairs.front().*field, 0.0};
  for (const auto& p : pairs) {
    a.min = std::min(a.min, p.*field);
    a.max = std::max(a.max, p.*field);
    a.mean += p.*field;
  }
  a.mean /= static_cast<double>(pairs.size());
  return a;
}

}  // namespace

double pearson_r(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "pearson_r");
  if (a.size() < 2) throw ShapeError("pearson_r needs at least 2 samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (!(va > 0.0) || !(vb > 0.0)) {
    throw NumericError("undefined correlation: an input has zero variance");
  }
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double mae(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "mae");
  if (a.empty()) throw ShapeError("mae of empty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

const char* to_string(Direction d) { return d == Direction::x2y ? "x2y" : "y2x"; }

Direction parse_direction(const std::string& s) {
  if (s == "x2y") return Direction::x2y;
  if (s == "y2x") return Direction::y2x;
  throw ConfigError(fmt::format("unknown direction '{}' (expected x2y or y2x)", s));
}

PairMetrics score(std::span<const double> translated, std::span<const double> truth) {
  require_same_length(translated, truth, "score");
  PairMetrics m;
  m.r_time = pearson_r(translated, truth);
  m.mae_time = mae(translated, truth);
  const auto st = fft::magnitude_spectrum(translated).magnitudes;
  const auto sg = fft::magnitude_spectrum(truth).magnitudes;
  m.r_freq = pearson_r(st, sg);
  m.mae_freq = mae(unit_peak(st), unit_peak(sg));
  return m;
}

MetricReport evaluate(const Translator& translate, std::span<const dataset::SignalPair> pairs,
                      Direction direction) {
  if (pairs.empty()) throw ConfigError("evaluate needs at least one test pair");
  MetricReport report;
  report.direction = direction;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& source = direction == Direction::x2y ? pairs[i].x : pairs[i].y;
    const auto& truth = direction == Direction::x2y ? pairs[i].y : pairs[i].x;
    auto m = score(translate(source, direction), truth);
    m.pair_id = i;
    report.pairs.push_back(m);
  }
  report.r_time = aggregate(report.pairs, &PairMetrics::r_time);
  report.mae_time = aggregate(report.pairs, &PairMetrics::mae_time);
  report.r_freq = aggregate(report.pairs, &PairMetrics::r_freq);
  report.mae_freq = aggregate(report.pairs, &PairMetrics::mae_freq);
  return report;
}

std::string to_csv(std::span<const MetricReport> reports) {
  std::string out = "pair_id,direction,r_time,mae_time,r_freq,mae_freq\n";
  for (const auto& rep : reports) {
    const char* dir = to_string(rep.direction);
    for (const auto& p : rep.pairs) {
      out += fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g}\n", p.pair_id, dir, p.r_time,
                         p.mae_time, p.r_freq, p.mae_freq);
    }
    out += fmt::format("min,{},{:.9g},{:.9g},{:.9g},{:.9g}\n", dir, rep.r_time.min,
                       rep.mae_time.min, rep.r_freq.min, rep.mae_freq.min);
    out += fmt::format("max,{},{:.9g},{:.9g},{:.9g},{:.9g}\n", dir, rep.r_time.max,
                       rep.mae_time.max, rep.r_freq.max, rep.mae_freq.max);
    out += fmt::format("mean,{},{:.9g},{:.9g},{:.9g},{:.9g}\n", dir, rep.r_time.mean,
                       rep.mae_time.mean, rep.r_freq.mean, rep.mae_freq.mean);
  }
  return out;
}

}  // namespace sig2sig::eval
