#pragma once

// Translation scoring: Pearson r and mean absolute error in the time domain
// and between one-sided magnitude spectra.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sig2sig/dataset.hpp"

namespace sig2sig::eval {

// Throws NumericError("undefined correlation") if either input has zero variance.
double pearson_r(std::span<const double> a, std::span<const double> b);
double mae(std::span<const double> a, std::span<const double> b);

enum class Direction { x2y, y2x };

const char* to_string(Direction d);
// Accepts "x2y" / "y2x"; throws ConfigError otherwise.
Direction parse_direction(const std::string& s);

// Maps a source-domain signal to the other domain.
using Translator = std::function<std::vector<double>(std::span<const double>, Direction)>;

struct PairMetrics {
  std::size_t pair_id = 0;
  double r_time = 0.0;
  double mae_time = 0.0;
  double r_freq = 0.0;
  double mae_freq = 0.0;
};

struct Aggregate {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct MetricReport {
  Direction direction = Direction::x2y;
  std::vector<PairMetrics> pairs;
  Aggregate r_time, mae_time, r_freq, mae_freq;
};

// Scores one translated signal against its paired ground truth. Spectra are
// scaled to unit peak before the frequency-domain MAE.
PairMetrics score(std::span<const double> translated, std::span<const double> truth);

// x2y translates each pair's x and compares with y; y2x the reverse.
MetricReport evaluate(const Translator& translate, std::span<const dataset::SignalPair> pairs,
                      Direction direction);

// CSV: header `pair_id,direction,r_time,mae_time,r_freq,mae_freq`, one row per
// pair, then `min`, `max`, `mean` aggregate rows for each report.
std::string to_csv(std::span<const MetricReport> reports);

}  // namespace sig2sig::eval
