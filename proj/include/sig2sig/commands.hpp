#pragma once

// Command-line surface: gen-data, train, translate, eval, plot.
//
// Exit codes: 0 success, 2 usage/config error, 3 data/format error,
// 4 numeric failure.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sig2sig/dataset.hpp"
#include "sig2sig/eval.hpp"

namespace sig2sig::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Scores the dataset's test pairs in both directions (x2y first).
std::vector<eval::MetricReport> evaluate_dataset(const eval::Translator& translate,
                                                 const dataset::SignalDataset& data);

}  // namespace sig2sig::cli
