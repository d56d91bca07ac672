#pragma once

// Checkpoint file layout (little-endian):
//   "CKPT" | u32 version = 1 | u32 tensor count
//   per tensor, ordered by name: u16 name length | UTF-8 name | u8 ndim |
//                                u32 dims[ndim] | float32 data
//   u32 echo length | `key = value` text of the model and training configs

#include <filesystem>
#include <string>
#include <vector>

#include "sig2sig/autodiff.hpp"
#include "sig2sig/cyclegan.hpp"

namespace sig2sig::checkpoint {

struct NamedTensor {
  std::string name;
  ad::Tensor value;
};

struct Checkpoint {
  cyclegan::ModelConfig model;
  cyclegan::TrainConfig train;
  std::vector<NamedTensor> tensors;  // sorted by name
};

Checkpoint snapshot(const cyclegan::CycleGanModel& model, const cyclegan::TrainConfig& train);

// Rebuilds the four networks (fresh optimizer state). Throws FormatError when
// the tensor names or shapes differ from the architecture in the echo block.
cyclegan::CycleGanModel restore(const Checkpoint& ckpt);

void write(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint read(const std::filesystem::path& file);

}  // namespace sig2sig::checkpoint
