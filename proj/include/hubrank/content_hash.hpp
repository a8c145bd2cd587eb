// Copyright 2026 The hubrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "hubrank/features.hpp"

namespace hubrank {

namespace detail {

inline void put_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

inline std::string sha256_hex(const unsigned char* data, std::size_t size) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xf]);
  }
  return hex;
}

}  // namespace detail

/// SHA-256 (hex) of the matrix shape followed by its row-major float64 little-endian values.
/// Identical for a matrix loaded from a float32 file and its float64 re-encoding.
inline std::string content_hash(const MatrixXd& m) {
  std::vector<unsigned char> bytes;
  bytes.reserve(16 + 8 * static_cast<std::size_t>(m.size()));
  detail::put_le(bytes, static_cast<std::uint64_t>(m.rows()), 8);
  detail::put_le(bytes, static_cast<std::uint64_t>(m.cols()), 8);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) detail::put_le(bytes, std::bit_cast<std::uint64_t>(m(i, j)), 8);
  return detail::sha256_hex(bytes.data(), bytes.size());
}

inline std::string content_hash(const FeatureMatrix& f) { return content_hash(f.data()); }

}  // namespace hubrank
