// Binary checkpoint of one parameter vector. Layout, all little-endian:
//
//   offset  size      field
//   0       8         magic "VGANCKPT"
//   8       4         u32 format version (1)
//   12      4         u32 number of widths W (0 for categorical logits)
//   16      8*W       u64 widths
//   ..      8         u64 seed
//   ..      8         u64 parameter count P
//   ..      8*P       f64 parameters (IEEE-754 bit patterns)

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vgan/models/mlp.hpp"

namespace vgan::models {

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace vgan::models
