#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace beo::detail {

// Little-endian scalar IO. This code only targets little-endian hosts (the
// byte-swap path is compiled in for completeness but untested on BE).

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error(std::string("truncated input while reading ") + what);
}

inline void write_u32le(std::ostream& os, std::uint32_t v) { write_bytes(os, &v, 4); }
inline void write_f32le(std::ostream& os, float v) { write_bytes(os, &v, 4); }
inline void write_f64le(std::ostream& os, double v) { write_bytes(os, &v, 8); }
inline void write_u8(std::ostream& os, std::uint8_t v) { write_bytes(os, &v, 1); }

inline std::uint32_t read_u32le(std::istream& is, const char* what = "u32") {
  std::uint32_t v;
  read_bytes(is, &v, 4, what);
  return v;
}
inline float read_f32le(std::istream& is, const char* what = "f32") {
  float v;
  read_bytes(is, &v, 4, what);
  return v;
}
inline double read_f64le(std::istream& is, const char* what = "f64") {
  double v;
  read_bytes(is, &v, 8, what);
  return v;
}
inline std::uint8_t read_u8(std::istream& is, const char* what = "u8") {
  std::uint8_t v;
  read_bytes(is, &v, 1, what);
  return v;
}

inline void write_magic(std::ostream& os, const char magic[4]) { write_bytes(os, magic, 4); }

inline void expect_magic(std::istream& is, const char magic[4], const std::string& path) {
  char got[4];
  read_bytes(is, got, 4, "magic");
  if (std::memcmp(got, magic, 4) != 0) {
    throw std::runtime_error(path + ": bad magic, expected '" + std::string(magic, 4) + "'");
  }
}

}  // namespace beo::detail
