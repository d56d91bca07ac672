#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sig2sig/cyclegan.hpp"
#include "sig2sig/dataset.hpp"
#include "sig2sig/keyvalue.hpp"

namespace sig2sig::config {

// Union of every dataset, model and training knob. `seed` sets both the
// dataset and the training seed.
struct RunConfig {
  dataset::DatasetConfig data;
  cyclegan::ModelConfig model;
  cyclegan::TrainConfig train;

  // Throws ConfigError naming the key when it is not recognized.
  void set(const std::string& key, const std::string& value);
  void apply(const kv::Pairs& pairs);
  // Reads a `key = value` file.
  void apply_file(const std::filesystem::path& file);
  // Applies "key=value" override strings.
  void apply_overrides(const std::vector<std::string>& overrides);
};

}  // namespace sig2sig::config
