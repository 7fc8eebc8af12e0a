#include "poesup/container.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                     static_cast<char>((v >> 16) & 0xff),
                                     static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes.data(), bytes.size());
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t checked_u32(Index n, const char* what) {
  if (n < 0 || static_cast<std::uint64_t>(n) > UINT32_MAX) {
    throw IoError(std::string("container ") + what + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(n);
}

void write_header(std::ostream& out, std::uint8_t version, Index rows, Index cols) {
  out.write(kContainerMagic, 4);
  out.put(static_cast<char>(version));
  put_u32(out, checked_u32(rows, "row count"));
  put_u32(out, checked_u32(cols, "dim"));
}

void read_payload(std::istream& in, std::vector<unsigned char>& buf, std::size_t bytes,
                  const std::string& source) {
  buf.resize(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw IoError(source + ": truncated container payload (expected " + std::to_string(bytes) +
                  " bytes, got " + std::to_string(in.gcount()) + ")");
  }
}

}  // namespace

void write_container(std::ostream& out, const MatrixF& m) {
  write_header(out, kContainerVersionF32, m.rows(), m.cols());
  for (Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(m.data()[i]));
}

void write_container(std::ostream& out, const Matrix& m) {
  write_header(out, kContainerVersionF64, m.rows(), m.cols());
  for (Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
}

void write_container_file(const std::filesystem::path& path, const MatrixF& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_container(out, m);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

ContainerHeader read_container_header(std::istream& in, const std::string& source) {
  std::array<unsigned char, kContainerHeaderBytes> raw{};
  in.read(reinterpret_cast<char*>(raw.data()), raw.size());
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError(source + ": truncated container header");
  }
  if (std::memcmp(raw.data(), kContainerMagic, 4) != 0) {
    throw InputError(source + ": bad magic, not an MCEB container");
  }
  ContainerHeader header;
  header.version = raw[4];
  if (header.version != kContainerVersionF32 && header.version != kContainerVersionF64) {
    throw InputError(source + ": unsupported container version " + std::to_string(header.version));
  }
  header.rows = get_u32(raw.data() + 5);
  header.dim = get_u32(raw.data() + 9);
  return header;
}

MatrixF read_container_f32(std::istream& in, const ContainerHeader& header, const std::string& source) {
  if (header.version != kContainerVersionF32) {
    throw InputError(source + ": expected a float32 container (version 1), found version " +
                     std::to_string(header.version));
  }
  MatrixF m(header.rows, header.dim);
  std::vector<unsigned char> buf;
  read_payload(in, buf, static_cast<std::size_t>(m.size()) * 4, source);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<float>(get_u32(buf.data() + 4 * i));
  return m;
}

Matrix read_container_f64(std::istream& in, const ContainerHeader& header, const std::string& source) {
  if (header.version != kContainerVersionF64) {
    throw InputError(source + ": expected a float64 container (version 2), found version " +
                     std::to_string(header.version));
  }
  Matrix m(header.rows, header.dim);
  std::vector<unsigned char> buf;
  read_payload(in, buf, static_cast<std::size_t>(m.size()) * 8, source);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_u64(buf.data() + 8 * i));
  return m;
}

MatrixF read_container_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("container file not found: " + path.string());
  const std::string source = path.string();
  const ContainerHeader header = read_container_header(in, source);
  MatrixF m = read_container_f32(in, header, source);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw InputError(source + ": non-finite value at row " + std::to_string(r) + ", column " +
                         std::to_string(c));
      }
    }
  }
  return m;
}

}  // namespace poesup
