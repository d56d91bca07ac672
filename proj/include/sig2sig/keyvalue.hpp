#pragma once

// `key = value` text files: one pair per line, '#' starts a comment, blank
// lines ignored. Used by config.txt, run configs and checkpoint echo blocks.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sig2sig::kv {

using Pairs = std::vector<std::pair<std::string, std::string>>;

// Throws FormatError(malformed) on lines without '=' or with an empty key.
Pairs parse(std::string_view text);
std::string format(const Pairs& pairs);

// Strict scalar parsing: the whole value must be consumed.
double to_double(const std::string& key, const std::string& value);
std::uint64_t to_u64(const std::string& key, const std::string& value);
std::size_t to_size(const std::string& key, const std::string& value);
bool to_bool(const std::string& key, const std::string& value);

// Shortest text that parses back to the same double.
std::string from_double(double v);

}  // namespace sig2sig::kv
