#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "lrmt/error.hpp"

// Little-endian primitives for the toolkit's binary file formats.
namespace lrmt::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with native little-endian layout");

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}
inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void write_f64s(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw DataError("unexpected end of binary file");
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v;
  read_exact(in, reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v;
  read_exact(in, reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }
inline std::string read_string(std::istream& in, std::size_t max_len = 1u << 20) {
  auto n = read_u32(in);
  if (n > max_len) throw DataError("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  read_exact(in, s.data(), n);
  return s;
}
inline void read_f64s(std::istream& in, std::span<double> values) {
  read_exact(in, reinterpret_cast<char*>(values.data()), values.size_bytes());
}

}  // namespace lrmt::binary
