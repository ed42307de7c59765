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

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "synmo/compositor.hpp"
#include "synmo/core.hpp"
#include "synmo/tokenizer.hpp"

namespace synmo {

enum class Provenance : std::uint8_t { kNone = 0, kTube = 1, kTrajectory = 2 };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kNone: return "none";
    case Provenance::kTube: return "tube";
    case Provenance::kTrajectory: return "trajectory";
  }
  return "unknown";
}

struct MaskConfig {
  double ratio{0.8};
  bool use_trajectory{true};
  std::uint64_t seed{0};

  void validate() const {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("mask ratio must lie in (0, 1)");
  }
};

/// Partition of [0, N) into masked and unmasked token indices (both ascending)
/// plus the provenance of each masked token.
struct MaskSet {
  std::vector<std::uint32_t> masked;
  std::vector<std::uint32_t> unmasked;
  std::vector<Provenance> provenance;  // size N; kNone for unmasked tokens

  std::size_t token_count() const noexcept { return provenance.size(); }

  std::size_t count(Provenance p) const noexcept {
    return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), p));
  }

  bool is_masked(std::size_t i) const { return provenance.at(i) != Provenance::kNone; }

  static MaskSet from_provenance(std::vector<Provenance> prov) {
    MaskSet m;
    m.provenance = std::move(prov);
    for (std::size_t i = 0; i < m.provenance.size(); ++i)
      (m.provenance[i] == Provenance::kNone ? m.unmasked : m.masked)
          .push_back(static_cast<std::uint32_t>(i));
    return m;
  }

  friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

inline void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("mask ratio must lie in (0, 1)");
}

/// Number of tubes for tube masking: round_half_up(m * S).
inline std::size_t tube_count(const TokenGeometry& g, double ratio) {
  return round_half_up(ratio * static_cast<double>(g.spatial_size()));
}

/// Selects round_half_up(m * S) spatial positions without replacement and masks
/// every temporal slice at each of them.
inline MaskSet tube_mask(const TokenGeometry& g, double ratio, Rng& rng) {
  check_ratio(ratio);
  const std::size_t s = g.spatial_size();
  std::vector<std::uint32_t> positions(s);
  std::iota(positions.begin(), positions.end(), 0u);
  const std::size_t tubes = tube_count(g, ratio);
  rng.partial_shuffle(std::span<std::uint32_t>(positions), tubes);

  std::vector<Provenance> prov(g.token_count(), Provenance::kNone);
  for (std::size_t k = 0; k < tubes; ++k)
    for (std::size_t tau = 0; tau < g.slices(); ++tau) prov[tau * s + positions[k]] = Provenance::kTube;
  return MaskSet::from_provenance(std::move(prov));
}

/// Tokens whose cube contains at least one footprint pixel. Ascending.
inline std::vector<std::uint32_t> object_token_set(const FootprintMask& fp, const TokenGeometry& g) {
  if (fp.frames != g.frames() || fp.height != g.height() || fp.width != g.width())
    throw ArgumentError("object_token_set: footprint does not match token geometry");
  if (fp.bits.size() != fp.frames * fp.height * fp.width)
    throw ArgumentError("object_token_set: footprint size mismatch");
  std::vector<std::uint8_t> hit(g.token_count(), 0);
  std::size_t i = 0;
  for (std::size_t t = 0; t < fp.frames; ++t)
    for (std::size_t h = 0; h < fp.height; ++h)
      for (std::size_t w = 0; w < fp.width; ++w, ++i)
        if (fp.bits[i]) hit[token_of_pixel(t, h, w, g)] = 1;
  std::vector<std::uint32_t> out;
  for (std::size_t k = 0; k < hit.size(); ++k)
    if (hit[k]) out.push_back(static_cast<std::uint32_t>(k));
  return out;
}

/// Trajectory-based masking at overall ratio m.
///
/// 1. Mask round_half_up(m * |object_tokens|) object tokens chosen uniformly
///    (trajectory provenance).
/// 2. Draw unselected spatial positions uniformly and mask their not yet
///    masked slices (tube provenance) until round_half_up(m * N) tokens are
///    masked. Any overshoot is removed from the last drawn tube, highest
///    slice first.
inline MaskSet trajectory_mask(const TokenGeometry& g, double ratio,
                               std::span<const std::uint32_t> object_tokens, Rng& rng) {
  check_ratio(ratio);
  const std::size_t n = g.token_count();
  const std::size_t s = g.spatial_size();

  std::vector<std::uint32_t> objects(object_tokens.begin(), object_tokens.end());
  std::sort(objects.begin(), objects.end());
  objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
  if (!objects.empty() && objects.back() >= n)
    throw ArgumentError("trajectory_mask: object token index out of range");

  std::vector<Provenance> prov(n, Provenance::kNone);
  const std::size_t on_trajectory = round_half_up(ratio * static_cast<double>(objects.size()));
  rng.partial_shuffle(std::span<std::uint32_t>(objects), on_trajectory);
  for (std::size_t k = 0; k < on_trajectory; ++k) prov[objects[k]] = Provenance::kTrajectory;

  const std::size_t target = round_half_up(ratio * static_cast<double>(n));
  std::size_t masked = on_trajectory;

  std::vector<std::uint32_t> positions(s);
  std::iota(positions.begin(), positions.end(), 0u);
  std::vector<std::uint32_t> last_tube;
  for (std::size_t drawn = 0; masked < target && drawn < s; ++drawn) {
    const std::size_t j = drawn + static_cast<std::size_t>(rng.below(s - drawn));
    std::swap(positions[drawn], positions[j]);
    last_tube.clear();
    for (std::size_t tau = 0; tau < g.slices(); ++tau) {
      const std::size_t idx = tau * s + positions[drawn];
      if (prov[idx] != Provenance::kNone) continue;
      prov[idx] = Provenance::kTube;
      last_tube.push_back(static_cast<std::uint32_t>(idx));
      ++masked;
    }
  }
  while (masked > target) {
    prov[last_tube.back()] = Provenance::kNone;
    last_tube.pop_back();
    --masked;
  }
  return MaskSet::from_provenance(std::move(prov));
}

struct MaskedTokens {
  VectorTable unmasked;                // rows in ascending token order
  std::vector<std::uint32_t> masked;  // ascending
};

inline MaskedTokens mask_apply(const VectorTable& tokens, const MaskSet& mask) {
  if (tokens.rows != mask.token_count())
    throw ArgumentError("mask_apply: token count does not match mask");
  MaskedTokens out{VectorTable::zeros(mask.unmasked.size(), tokens.dim), mask.masked};
  for (std::size_t k = 0; k < mask.unmasked.size(); ++k) {
    const auto src = tokens.row(mask.unmasked[k]);
    std::copy(src.begin(), src.end(), out.unmasked.row(k).begin());
  }
  return out;
}

/// Rows of `table` at the given indices, in the given order.
inline VectorTable gather_rows(const VectorTable& table, std::span<const std::uint32_t> indices) {
  VectorTable out = VectorTable::zeros(indices.size(), table.dim);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= table.rows) throw ArgumentError("gather_rows: index out of range");
    const auto src = table.row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

}  // namespace synmo
