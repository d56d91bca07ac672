#pragma once

// Little-endian byte encoding shared by the .sig and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "sig2sig/error.hpp"

namespace sig2sig::io {

using Bytes = std::vector<unsigned char>;

template <typename U>
void put_le(Bytes& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f32(Bytes& out, double v) {
  put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline void put_bytes(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

// Sequential reader; running past the end raises FormatError(truncated).
class Reader {
 public:
  Reader(const Bytes& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  double f32() { return static_cast<double>(std::bit_cast<float>(le<std::uint32_t>())); }

  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  const std::string& source() const noexcept { return source_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(FormatError::Kind::truncated,
                        fmt::format("{}: truncated (needed {} more bytes at offset {}, file has {})",
                                    source_, n, pos_, bytes_.size()));
    }
  }

 private:
  const Bytes& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline Bytes read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + file.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& file, const Bytes& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::io, "cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::io, "write failed: " + file.string());
}

inline std::string read_text(const std::filesystem::path& file) {
  const auto bytes = read_file(file);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace sig2sig::io
