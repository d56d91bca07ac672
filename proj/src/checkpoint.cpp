#include "sig2sig/checkpoint.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "sig2sig/error.hpp"

namespace sig2sig::checkpoint {

namespace {

constexpr char kMagic[] = "CKPT";
constexpr std::uint32_t kVersion = 1;

}  // namespace

Checkpoint snapshot(const cyclegan::CycleGanModel& model, const cyclegan::TrainConfig& train) {
  Checkpoint ckpt{model.config, train, {}};
  for (const auto& [prefix, store] : model.stores()) {
    for (const auto& e : *store) ckpt.tensors.push_back({prefix + e.name, e.value});
  }
  std::sort(ckpt.tensors.begin(), ckpt.tensors.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return ckpt;
}

cyclegan::CycleGanModel restore(const Checkpoint& ckpt) {
  auto model = cyclegan::CycleGanModel::create(ckpt.model, ckpt.train.adam(), 0);
  std::map<std::string, const ad::Tensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name.emplace(t.name, &t.value);

  std::size_t expected = 0;
  for (auto& [prefix, store] : model.stores()) {
    for (std::size_t i = 0; i < store->size(); ++i) {
      const auto name = prefix + store->entry(i).name;
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw FormatError(FormatError::Kind::malformed, "checkpoint lacks parameter " + name);
      }
      if (it->second->shape() != store->entry(i).value.shape()) {
        throw FormatError(FormatError::Kind::malformed,
                          fmt::format("checkpoint parameter {} has shape {}, model expects {}",
                                      name, ad::shape_string(it->second->shape()),
                                      ad::shape_string(store->entry(i).value.shape())));
      }
      store->assign(i, it->second->values());
      ++expected;
    }
  }
  if (expected != by_name.size()) {
    throw FormatError(FormatError::Kind::malformed,
                      fmt::format("checkpoint has {} tensors, model has {} parameters",
                                  by_name.size(), expected));
  }
  return model;
}

void write(const Checkpoint& ckpt, const std::filesystem::path& file) {
  io::Bytes out;
  io::put_bytes(out, kMagic);
  io::put_le<std::uint32_t>(out, kVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError(FormatError::Kind::malformed, "tensor name too long: " + t.name);
    }
    io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    io::put_bytes(out, t.name);
    io::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.value.rank()));
    for (auto d : t.value.shape()) io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.value.data()) io::put_f32(out, v);
  }
  kv::Pairs echo = ckpt.model.to_pairs();
  const auto train = ckpt.train.to_pairs();
  echo.insert(echo.end(), train.begin(), train.end());
  const auto text = kv::format(echo);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  io::put_bytes(out, text);
  io::write_file(file, out);
}

Checkpoint read(const std::filesystem::path& file) {
  const auto bytes = io::read_file(file);
  io::Reader in(bytes, file.string());
  if (bytes.size() < 4 || in.text(4) != kMagic) {
    throw FormatError(FormatError::Kind::bad_magic, file.string() + ": bad magic");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError(FormatError::Kind::bad_version,
                      fmt::format("{}: unsupported checkpoint version {}", file.string(), version));
  }
  Checkpoint ckpt;
  const std::size_t count = in.le<std::uint32_t>();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t name_len = in.le<std::uint16_t>();
    auto name = in.text(name_len);
    const std::size_t ndim = in.le<std::uint8_t>();
    ad::Shape shape(ndim);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = in.le<std::uint32_t>();
      n *= d;
    }
    if (n == 0) {
      throw FormatError(FormatError::Kind::malformed,
                        fmt::format("{}: tensor {} has a zero extent", file.string(), name));
    }
    in.need(4 * n);
    std::vector<double> data(n);
    for (auto& v : data) v = in.f32();
    ckpt.tensors.push_back({std::move(name), ad::Tensor(std::move(shape), std::move(data))});
  }
  const std::size_t echo_len = in.le<std::uint32_t>();
  const auto echo = in.text(echo_len);
  if (in.remaining() != 0) {
    throw FormatError(FormatError::Kind::malformed,
                      fmt::format("{}: {} unexpected trailing bytes", file.string(), in.remaining()));
  }
  for (const auto& [key, value] : kv::parse(echo)) {
    if (!ckpt.model.set(key, value) && !ckpt.train.set(key, value)) {
      throw FormatError(FormatError::Kind::malformed,
                        fmt::format("{}: unknown echo key '{}'", file.string(), key));
    }
  }
  return ckpt;
}

}  // namespace sig2sig::checkpoint
