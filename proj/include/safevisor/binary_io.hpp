// Copyright 2026 The safevisor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SAFEVISOR_BINARY_IO_HPP_
#define SAFEVISOR_BINARY_IO_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "safevisor/error.hpp"

namespace safevisor::binary {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_arithmetic_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  os.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& what) {
  static_assert(std::is_arithmetic_v<T>);
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), sizeof(T))) {
    throw FormatError("truncated file while reading " + what);
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char got[4] = {};
  if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace safevisor::binary

#endif  // SAFEVISOR_BINARY_IO_HPP_
