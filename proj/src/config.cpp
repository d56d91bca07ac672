#include "sig2sig/config.hpp"

#include "binary_io.hpp"
#include "sig2sig/error.hpp"

namespace sig2sig::config {

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") {
    data.set(key, value);
    train.set(key, value);
    return;
  }
  if (data.set(key, value) || model.set(key, value) || train.set(key, value)) return;
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::apply(const kv::Pairs& pairs) {
  for (const auto& [k, v] : pairs) set(k, v);
}

void RunConfig::apply_file(const std::filesystem::path& file) {
  try {
    apply(kv::parse(io::read_text(file)));
  } catch (const FormatError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

void RunConfig::apply_overrides(const std::vector<std::string>& overrides) {
  kv::Pairs pairs;
  for (const auto& o : overrides) {
    if (o.find('=') == std::string::npos) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    auto parsed = kv::parse(o);
    pairs.insert(pairs.end(), parsed.begin(), parsed.end());
  }
  apply(pairs);
}

}  // namespace sig2sig::config
