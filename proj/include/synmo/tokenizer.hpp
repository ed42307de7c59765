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
#include <span>
#include <string>
#include <vector>

#include "synmo/core.hpp"
#include "synmo/image.hpp"

namespace synmo {

/// Grid of non-overlapping temporal_patch x spatial_patch x spatial_patch
/// cubes. Flat order is row-major over (tau, row, col).
class TokenGeometry {
 public:
  TokenGeometry() : TokenGeometry(16, 224, 224, 2, 16) {}

  TokenGeometry(std::size_t frames, std::size_t height, std::size_t width,
                std::size_t temporal_patch = 2, std::size_t spatial_patch = 16)
      : frames_(frames), height_(height), width_(width), pt_(temporal_patch), ps_(spatial_patch) {
    if (pt_ == 0 || ps_ == 0) throw ArgumentError("token geometry: zero patch size");
    if (frames_ == 0 || height_ == 0 || width_ == 0)
      throw ArgumentError("token geometry: zero clip dimension");
    if (frames_ % pt_ != 0)
      throw ArgumentError("token geometry: temporal patch " + std::to_string(pt_) +
                          " does not divide frame count " + std::to_string(frames_));
    if (height_ % ps_ != 0 || width_ % ps_ != 0)
      throw ArgumentError("token geometry: spatial patch " + std::to_string(ps_) +
                          " does not divide " + std::to_string(height_) + "x" +
                          std::to_string(width_));
  }

  std::size_t frames() const noexcept { return frames_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t temporal_patch() const noexcept { return pt_; }
  std::size_t spatial_patch() const noexcept { return ps_; }

  std::size_t slices() const noexcept { return frames_ / pt_; }
  std::size_t grid_rows() const noexcept { return height_ / ps_; }
  std::size_t grid_cols() const noexcept { return width_ / ps_; }
  std::size_t spatial_size() const noexcept { return grid_rows() * grid_cols(); }
  std::size_t token_count() const noexcept { return slices() * spatial_size(); }
  /// Floats per token block: pt * ps * ps * 3.
  std::size_t block_size() const noexcept { return pt_ * ps_ * ps_ * Clip::kChannels; }

  bool matches(const Clip& clip) const noexcept {
    return clip.frames == frames_ && clip.height == height_ && clip.width == width_;
  }

  friend bool operator==(const TokenGeometry&, const TokenGeometry&) = default;

 private:
  std::size_t frames_, height_, width_, pt_, ps_;
};

struct TokenCoord {
  std::size_t tau{0};
  std::size_t row{0};
  std::size_t col{0};

  friend bool operator==(const TokenCoord&, const TokenCoord&) = default;
};

/// Half-open pixel ranges covered by one token.
struct PixelCube {
  std::size_t t0, t1, h0, h1, w0, w1;

  friend bool operator==(const PixelCube&, const PixelCube&) = default;
};

inline std::size_t flat_index(const TokenCoord& c, const TokenGeometry& g) {
  if (c.tau >= g.slices() || c.row >= g.grid_rows() || c.col >= g.grid_cols())
    throw ArgumentError("flat_index: token coordinate out of range");
  return (c.tau * g.grid_rows() + c.row) * g.grid_cols() + c.col;
}

inline TokenCoord token_coord(std::size_t index, const TokenGeometry& g) {
  if (index >= g.token_count()) throw ArgumentError("token_coord: index out of range");
  const std::size_t s = g.spatial_size();
  return {index / s, (index % s) / g.grid_cols(), index % g.grid_cols()};
}

/// Spatial position (row * grid_cols + col) of a flat token index.
inline std::size_t spatial_position(std::size_t index, const TokenGeometry& g) {
  return index % g.spatial_size();
}

inline std::size_t token_of_pixel(std::size_t t, std::size_t h, std::size_t w,
                                  const TokenGeometry& g) {
  if (t >= g.frames() || h >= g.height() || w >= g.width())
    throw ArgumentError("token_of_pixel: pixel out of range");
  return flat_index({t / g.temporal_patch(), h / g.spatial_patch(), w / g.spatial_patch()}, g);
}

inline PixelCube cube_of_token(std::size_t index, const TokenGeometry& g) {
  const TokenCoord c = token_coord(index, g);
  const std::size_t pt = g.temporal_patch(), ps = g.spatial_patch();
  return {c.tau * pt, (c.tau + 1) * pt, c.row * ps, (c.row + 1) * ps, c.col * ps, (c.col + 1) * ps};
}

/// Row-major table of equal-length float vectors (one row per token).
struct VectorTable {
  std::size_t rows{0};
  std::size_t dim{0};
  std::vector<float> values;

  static VectorTable zeros(std::size_t r, std::size_t d) {
    return {r, d, std::vector<float>(r * d, 0.0f)};
  }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
  std::span<float> row(std::size_t i) { return std::span<float>(values).subspan(i * dim, dim); }

  friend bool operator==(const VectorTable&, const VectorTable&) = default;
};

/// Copies each token cube into one row, laid out (dt, dh, dw, channel).
inline VectorTable tokenize(const Clip& clip, const TokenGeometry& g) {
  if (!g.matches(clip)) throw ArgumentError("tokenize: clip does not match token geometry");
  VectorTable out = VectorTable::zeros(g.token_count(), g.block_size());
  const std::size_t pt = g.temporal_patch(), ps = g.spatial_patch();
  const std::size_t run = ps * Clip::kChannels;
  for (std::size_t i = 0; i < g.token_count(); ++i) {
    const PixelCube cube = cube_of_token(i, g);
    float* dst = out.row(i).data();
    for (std::size_t dt = 0; dt < pt; ++dt)
      for (std::size_t dh = 0; dh < ps; ++dh) {
        const float* src = clip.pixels.data() + clip.offset(cube.t0 + dt, cube.h0 + dh, cube.w0);
        dst = std::copy(src, src + run, dst);
      }
  }
  return out;
}

inline Clip untokenize(const VectorTable& tokens, const TokenGeometry& g, std::string source_id = {}) {
  if (tokens.rows != g.token_count() || tokens.dim != g.block_size())
    throw ArgumentError("untokenize: token table does not match geometry");
  Clip clip = Clip::zeros(g.frames(), g.height(), g.width(), std::move(source_id));
  const std::size_t pt = g.temporal_patch(), ps = g.spatial_patch();
  const std::size_t run = ps * Clip::kChannels;
  for (std::size_t i = 0; i < g.token_count(); ++i) {
    const PixelCube cube = cube_of_token(i, g);
    const float* src = tokens.row(i).data();
    for (std::size_t dt = 0; dt < pt; ++dt)
      for (std::size_t dh = 0; dh < ps; ++dh) {
        std::copy(src, src + run, clip.pixels.data() + clip.offset(cube.t0 + dt, cube.h0 + dh, cube.w0));
        src += run;
      }
  }
  return clip;
}

}  // namespace synmo
