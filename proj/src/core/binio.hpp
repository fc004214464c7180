#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace rockid::binio {

// Explicit little-endian encoding so dataset/checkpoint files are
// byte-identical regardless of host conventions.

inline void put_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void put_u64(std::ostream& os, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_f64_array(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double d : v) put_f64(os, d);
}

inline uint8_t get_u8(std::istream& is) {
  int c = is.get();
  if (c == EOF) fail(Status::ParseError, "unexpected end of file");
  return static_cast<uint8_t>(c);
}

inline uint32_t get_u32(std::istream& is) {
  char b[4];
  if (!is.read(b, 4)) fail(Status::ParseError, "unexpected end of file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline uint64_t get_u64(std::istream& is) {
  char b[8];
  if (!is.read(b, 8)) fail(Status::ParseError, "unexpected end of file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string get_string(std::istream& is) {
  uint32_t n = get_u32(is);
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) fail(Status::ParseError, "unexpected end of file");
  return s;
}

inline std::vector<double> get_f64_array(std::istream& is) {
  uint64_t n = get_u64(is);
  std::vector<double> v(n);
  for (uint64_t i = 0; i < n; ++i) v[i] = get_f64(is);
  return v;
}

}  // namespace rockid::binio
