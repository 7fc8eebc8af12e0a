#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "poesup/numerics.hpp"

namespace poesup {

// Embedding container layout, all integers little-endian:
//
//   offset 0   "MCEB"            magic
//   offset 4   u8 version        0x01 = float32 payload, 0x02 = float64 payload
//   offset 5   u32 row_count
//   offset 9   u32 dim
//   offset 13  row_count * dim   IEEE-754 values, row-major
//
// Embedding files are always version 0x01. Version 0x02 is used only for
// checkpoint records, where parameters must survive bit-exactly in 64-bit.

inline constexpr char kContainerMagic[4] = {'M', 'C', 'E', 'B'};
inline constexpr std::uint8_t kContainerVersionF32 = 0x01;
inline constexpr std::uint8_t kContainerVersionF64 = 0x02;
inline constexpr std::size_t kContainerHeaderBytes = 13;

struct ContainerHeader {
  std::uint8_t version = kContainerVersionF32;
  std::uint32_t rows = 0;
  std::uint32_t dim = 0;
};

void write_container(std::ostream& out, const MatrixF& m);
void write_container(std::ostream& out, const Matrix& m);
void write_container_file(const std::filesystem::path& path, const MatrixF& m);

/// `source` names the stream in error messages.
ContainerHeader read_container_header(std::istream& in, const std::string& source);
MatrixF read_container_f32(std::istream& in, const ContainerHeader& header, const std::string& source);
Matrix read_container_f64(std::istream& in, const ContainerHeader& header, const std::string& source);

/// Reads a version 0x01 file and rejects NaN/Inf, citing the row.
MatrixF read_container_file(const std::filesystem::path& path);

}  // namespace poesup
