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
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synmo/core.hpp"

namespace synmo {

/// T x H x W x 3 volume of normalized reals, channel-interleaved, row-major.
struct Clip {
  std::size_t frames{0};
  std::size_t height{0};
  std::size_t width{0};
  std::vector<float> pixels;
  std::string source_id;

  static constexpr std::size_t kChannels = 3;

  static Clip zeros(std::size_t t, std::size_t h, std::size_t w, std::string id = {}) {
    Clip c;
    c.frames = t;
    c.height = h;
    c.width = w;
    c.pixels.assign(t * h * w * kChannels, 0.0f);
    c.source_id = std::move(id);
    return c;
  }

  std::size_t frame_size() const noexcept { return height * width * kChannels; }

  std::size_t offset(std::size_t t, std::size_t h, std::size_t w) const noexcept {
    return ((t * height + h) * width + w) * kChannels;
  }

  float& at(std::size_t t, std::size_t h, std::size_t w, std::size_t c) noexcept {
    return pixels[offset(t, h, w) + c];
  }
  float at(std::size_t t, std::size_t h, std::size_t w, std::size_t c) const noexcept {
    return pixels[offset(t, h, w) + c];
  }

  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(pixels).subspan(t * frame_size(), frame_size());
  }
  std::span<float> frame(std::size_t t) {
    return std::span<float>(pixels).subspan(t * frame_size(), frame_size());
  }

  void validate() const {
    if (frames == 0 || height == 0 || width == 0) throw ArgumentError("clip: empty dimensions");
    if (pixels.size() != frames * frame_size()) throw ArgumentError("clip: pixel count mismatch");
    for (float v : pixels)
      if (!(v >= 0.0f && v <= 1.0f)) throw ArgumentError("clip: pixel outside [0,1]");
  }

  friend bool operator==(const Clip&, const Clip&) = default;
};

/// rows x cols x 4 (RGBA) image; alpha is the segmentation.
struct RgbaImage {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<float> data;

  static constexpr std::size_t kChannels = 4;

  static RgbaImage transparent(std::size_t r, std::size_t c) {
    return {r, c, std::vector<float>(r * c * kChannels, 0.0f)};
  }

  float& at(std::size_t r, std::size_t c, std::size_t ch) noexcept {
    return data[(r * cols + c) * kChannels + ch];
  }
  float at(std::size_t r, std::size_t c, std::size_t ch) const noexcept {
    return data[(r * cols + c) * kChannels + ch];
  }

  friend bool operator==(const RgbaImage&, const RgbaImage&) = default;
};

struct SegmentedObject {
  RgbaImage rgba;
  std::string object_id;

  void validate() const {
    if (rgba.rows == 0 || rgba.cols == 0) throw ArgumentError("object: empty sprite");
    if (rgba.data.size() != rgba.rows * rgba.cols * RgbaImage::kChannels)
      throw ArgumentError("object: data size mismatch");
    bool any_alpha = false;
    for (std::size_t i = 0; i < rgba.data.size(); ++i) {
      const float v = rgba.data[i];
      if (!(v >= 0.0f && v <= 1.0f)) throw ArgumentError("object: channel outside [0,1]");
      if (i % 4 == 3 && v > 0.0f) any_alpha = true;
    }
    if (!any_alpha) throw ArgumentError("object '" + object_id + "': no opaque pixel");
  }
};

}  // namespace synmo
