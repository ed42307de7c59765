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
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace synmo {

// ---------------------------------------------------------------------------
// Errors. The CLI maps each family onto a stable exit code.
// ---------------------------------------------------------------------------
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on a function argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing, malformed or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Stored data failed validation (bad magic, checksum, shape or version).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, std::string_view what) {
  if (!cond) throw ArgumentError(std::string(what));
}

/// floor(x + 0.5); used for every "fraction of a count" target.
inline std::size_t round_half_up(double x) {
  if (!(x >= 0.0)) throw ArgumentError("round_half_up: negative or NaN");
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

// ---------------------------------------------------------------------------
// Rng: mt19937_64 engine with hand-rolled distributions. The standard
// distribution objects are implementation-defined, so they are not used
// anywhere a result is persisted.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    double v = lo + (hi - lo) * uniform01();
    return v > hi ? hi : v;
  }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::below: empty range");
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v < threshold);
    return v % n;
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ArgumentError("Rng::uniform_int: lo > hi");
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Moves a uniform random k-subset (in random order) to the front of xs.
  template <typename T>
  void partial_shuffle(std::span<T> xs, std::size_t k) {
    if (k > xs.size()) throw ArgumentError("Rng::partial_shuffle: k > size");
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(xs.size() - i));
      std::swap(xs[i], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Little-endian byte encoding.
// ---------------------------------------------------------------------------
namespace le {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint64_t get_u64(const unsigned char* p) {
  return static_cast<std::uint64_t>(get_u32(p)) |
         (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}
inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

inline void put_f32_array(std::string& out, std::span<const float> xs) {
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(xs.data()), xs.size_bytes());
  } else {
    for (float x : xs) put_f32(out, x);
  }
}
inline void get_f32_array(const unsigned char* p, std::span<float> xs) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(xs.data(), p, xs.size_bytes());
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = get_f32(p + 4 * i);
  }
}

}  // namespace le

}  // namespace synmo
