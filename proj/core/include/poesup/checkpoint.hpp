#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poesup/numerics.hpp"

namespace poesup {

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::int64_t optimizer_step = 0;
};

/// Writes `<stem>.bin` (one float64 MCEB record per tensor, back to back) and
/// `<stem>.json` (index: name, rows, cols, byte offset of each record).
void write_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt);

Checkpoint read_checkpoint(const std::filesystem::path& stem);

}  // namespace poesup
