// Copyright 2026 The MA-FQI Authors.
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

#ifndef MAFQI_SRC_BINARY_IO_H_
#define MAFQI_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace mafqi::binary {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace mafqi::binary

#endif  // MAFQI_SRC_BINARY_IO_H_
