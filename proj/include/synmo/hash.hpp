// Copyright 2026 The synmo Authors
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

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "synmo/core.hpp"

namespace synmo {

// XXH64 (xxHash, 64-bit variant). Used for record checksums, config hashes
// and seed derivation; output matches the reference implementation.
namespace detail {

inline constexpr std::uint64_t kXxPrime1 = 11400714785074694791ULL;
inline constexpr std::uint64_t kXxPrime2 = 14029467366897019727ULL;
inline constexpr std::uint64_t kXxPrime3 = 1609587929392839161ULL;
inline constexpr std::uint64_t kXxPrime4 = 9650029242287828579ULL;
inline constexpr std::uint64_t kXxPrime5 = 2870177450012600261ULL;

inline std::uint64_t xx_round(std::uint64_t acc, std::uint64_t input) {
  acc += input * kXxPrime2;
  acc = std::rotl(acc, 31);
  return acc * kXxPrime1;
}

inline std::uint64_t xx_merge(std::uint64_t acc, std::uint64_t val) {
  acc ^= xx_round(0, val);
  return acc * kXxPrime1 + kXxPrime4;
}

}  // namespace detail

inline std::uint64_t xxh64_bytes(const void* data, std::size_t len, std::uint64_t seed) {
  using namespace detail;
  const auto* p = static_cast<const unsigned char*>(data);
  const unsigned char* const end = p + len;
  std::uint64_t h;

  if (len >= 32) {
    std::uint64_t v1 = seed + kXxPrime1 + kXxPrime2;
    std::uint64_t v2 = seed + kXxPrime2;
    std::uint64_t v3 = seed;
    std::uint64_t v4 = seed - kXxPrime1;
    const unsigned char* const limit = end - 32;
    do {
      v1 = xx_round(v1, le::get_u64(p));
      v2 = xx_round(v2, le::get_u64(p + 8));
      v3 = xx_round(v3, le::get_u64(p + 16));
      v4 = xx_round(v4, le::get_u64(p + 24));
      p += 32;
    } while (p <= limit);
    h = std::rotl(v1, 1) + std::rotl(v2, 7) + std::rotl(v3, 12) + std::rotl(v4, 18);
    h = xx_merge(h, v1);
    h = xx_merge(h, v2);
    h = xx_merge(h, v3);
    h = xx_merge(h, v4);
  } else {
    h = seed + kXxPrime5;
  }

  h += static_cast<std::uint64_t>(len);

  while (p + 8 <= end) {
    h ^= xx_round(0, le::get_u64(p));
    h = std::rotl(h, 27) * kXxPrime1 + kXxPrime4;
    p += 8;
  }
  if (p + 4 <= end) {
    h ^= static_cast<std::uint64_t>(le::get_u32(p)) * kXxPrime1;
    h = std::rotl(h, 23) * kXxPrime2 + kXxPrime3;
    p += 4;
  }
  while (p < end) {
    h ^= static_cast<std::uint64_t>(*p) * kXxPrime5;
    h = std::rotl(h, 11) * kXxPrime1;
    ++p;
  }

  h ^= h >> 33;
  h *= kXxPrime2;
  h ^= h >> 29;
  h *= kXxPrime3;
  h ^= h >> 32;
  return h;
}

inline std::uint64_t xxh64(std::string_view bytes, std::uint64_t seed = 0) {
  return xxh64_bytes(bytes.data(), bytes.size(), seed);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Per-sample seed: XXH64 (seed 0) over the little-endian encoding
///   u64 global_seed | u32 len(video_id) | video_id | u64 sample_index | u64 epoch.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view video_id,
                                 std::uint64_t sample_index, std::uint64_t epoch) {
  std::string buf;
  buf.reserve(28 + video_id.size());
  le::put_u64(buf, global_seed);
  le::put_u32(buf, static_cast<std::uint32_t>(video_id.size()));
  buf.append(video_id);
  le::put_u64(buf, sample_index);
  le::put_u64(buf, epoch);
  return xxh64(buf);
}

/// Independent sub-stream of a sample seed, keyed by a short tag.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag) {
  std::string buf;
  le::put_u64(buf, seed);
  buf.append(tag);
  return xxh64(buf);
}

}  // namespace synmo
