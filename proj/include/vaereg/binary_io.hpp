// vaereg/binary_io.hpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives shared by all binary containers.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "vaereg/error.hpp"

namespace vaereg::io {

inline void write_u32(std::ostream &os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), b.size());
}

inline void write_u8(std::ostream &os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_f64(std::ostream &os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(b.data(), b.size());
}

inline void write_magic(std::ostream &os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void write_string(std::ostream &os, std::string_view s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream &is, char *dst, std::size_t n) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    fail(Errc::kParseError, "unexpected end of binary stream");
}

inline std::uint32_t read_u32(std::istream &is) {
  std::array<unsigned char, 4> b;
  read_exact(is, reinterpret_cast<char *>(b.data()), b.size());
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint8_t read_u8(std::istream &is) {
  char c;
  read_exact(is, &c, 1);
  return static_cast<std::uint8_t>(c);
}

inline double read_f64(std::istream &is) {
  std::array<unsigned char, 8> b;
  read_exact(is, reinterpret_cast<char *>(b.data()), b.size());
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void expect_magic(std::istream &is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  read_exact(is, got.data(), got.size());
  if (got != magic)
    fail(Errc::kParseError, "bad magic: expected '" + std::string(magic) +
                                "', got '" + got + "'");
}

inline std::string read_string(std::istream &is) {
  std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (n > 0) read_exact(is, s.data(), n);
  return s;
}

inline std::ofstream open_out(const std::string &path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc
                                : std::ios::trunc);
  if (!os) fail(Errc::kIoError, "cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string &path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) fail(Errc::kIoError, "cannot open '" + path + "'");
  return is;
}

}  // namespace vaereg::io
