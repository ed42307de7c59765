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
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synmo/core.hpp"
#include "synmo/geometry.hpp"
#include "synmo/image.hpp"

namespace synmo {

struct MotionPlan {
  Trajectory trajectory;
  TransformTrack transforms;
  std::size_t base_rows{0};  // P
  std::size_t base_cols{0};  // Q
  std::string object_ref;
};

/// Per-frame H x W map of pixels that received non-zero alpha.
struct FootprintMask {
  std::size_t frames{0};
  std::size_t height{0};
  std::size_t width{0};
  std::vector<std::uint8_t> bits;

  static FootprintMask empty(std::size_t t, std::size_t h, std::size_t w) {
    return {t, h, w, std::vector<std::uint8_t>(t * h * w, 0)};
  }

  bool at(std::size_t t, std::size_t h, std::size_t w) const noexcept {
    return bits[(t * height + h) * width + w] != 0;
  }
  void set(std::size_t t, std::size_t h, std::size_t w) noexcept {
    bits[(t * height + h) * width + w] = 1;
  }
  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }

  void merge(const FootprintMask& other) {
    if (other.bits.size() != bits.size()) throw ArgumentError("footprint: size mismatch");
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= other.bits[i];
  }

  friend bool operator==(const FootprintMask&, const FootprintMask&) = default;
};

/// Transformed sprite patch with its top-left corner in frame pixels.
struct PositionedSprite {
  RgbaImage patch;
  std::int64_t top{0};
  std::int64_t left{0};
};

namespace detail {

/// Bilinear sample at index coordinates (r, c), clamped to the image, using
/// premultiplied alpha. Returns straight (unpremultiplied) RGBA.
inline std::array<double, 4> sample_premultiplied(const RgbaImage& img, double r, double c) {
  r = std::clamp(r, 0.0, static_cast<double>(img.rows - 1));
  c = std::clamp(c, 0.0, static_cast<double>(img.cols - 1));
  const auto r0 = static_cast<std::size_t>(std::floor(r));
  const auto c0 = static_cast<std::size_t>(std::floor(c));
  const std::size_t r1 = std::min(r0 + 1, img.rows - 1);
  const std::size_t c1 = std::min(c0 + 1, img.cols - 1);
  const double fr = r - static_cast<double>(r0);
  const double fc = c - static_cast<double>(c0);
  const std::array<std::pair<std::size_t, std::size_t>, 4> taps{
      {{r0, c0}, {r0, c1}, {r1, c0}, {r1, c1}}};
  const std::array<double, 4> weights{(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};

  std::array<double, 4> acc{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (weights[k] == 0.0) continue;
    const auto [rr, cc] = taps[k];
    const double a = img.at(rr, cc, 3);
    for (std::size_t ch = 0; ch < 3; ++ch) acc[ch] += weights[k] * (img.at(rr, cc, ch) * a);
    acc[3] += weights[k] * a;
  }
  if (acc[3] > 0.0) {
    for (std::size_t ch = 0; ch < 3; ++ch) acc[ch] = std::clamp(acc[ch] / acc[3], 0.0, 1.0);
    acc[3] = std::min(acc[3], 1.0);
  } else {
    acc = {0.0, 0.0, 0.0, 0.0};
  }
  return acc;
}

inline void store_rgba(RgbaImage& img, std::size_t r, std::size_t c,
                       const std::array<double, 4>& v) {
  for (std::size_t ch = 0; ch < 4; ++ch) img.at(r, c, ch) = static_cast<float>(v[ch]);
}

}  // namespace detail

/// Bilinear resampling of all four channels (half-pixel centers, edge clamp).
inline SegmentedObject resize_object(const SegmentedObject& obj, std::size_t rows,
                                     std::size_t cols) {
  if (rows == 0 || cols == 0) throw ArgumentError("resize_object: zero target dimension");
  if (obj.rgba.rows == 0 || obj.rgba.cols == 0) throw ArgumentError("resize_object: empty source");
  if (rows == obj.rgba.rows && cols == obj.rgba.cols) return obj;
  SegmentedObject out{RgbaImage::transparent(rows, cols), obj.object_id};
  const double sr = static_cast<double>(obj.rgba.rows) / static_cast<double>(rows);
  const double sc = static_cast<double>(obj.rgba.cols) / static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double src_r = (static_cast<double>(r) + 0.5) * sr - 0.5;
    for (std::size_t c = 0; c < cols; ++c) {
      const double src_c = (static_cast<double>(c) + 0.5) * sc - 0.5;
      detail::store_rgba(out.rgba, r, c, detail::sample_premultiplied(obj.rgba, src_r, src_c));
    }
  }
  return out;
}

/// Output patch extent (rows, cols) of a sprite under a placement.
inline std::pair<std::size_t, std::size_t> transformed_extent(std::size_t rows, std::size_t cols,
                                                              const AffinePlacement& placement) {
  const double cs = std::abs(placement.rotation.a);
  const double sn = std::abs(placement.rotation.c);
  const double s = placement.scale_factor;
  const double ext_r = s * (static_cast<double>(cols) * sn + static_cast<double>(rows) * cs);
  const double ext_c = s * (static_cast<double>(cols) * cs + static_cast<double>(rows) * sn);
  auto to_size = [](double e) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(e - 1e-6)));
  };
  return {to_size(ext_r), to_size(ext_c)};
}

/// Inverse-mapped bilinear warp about the sprite center. The placement matrix
/// acts on image-plane vectors (column offset, row offset); samples outside
/// the source rectangle are transparent. The patch is snapped to the pixel grid
/// so that its center lies at the placement center (rounded half up).
inline PositionedSprite transform_sprite(const SegmentedObject& obj,
                                         const AffinePlacement& placement) {
  const RgbaImage& src = obj.rgba;
  if (src.rows == 0 || src.cols == 0) throw ArgumentError("transform_sprite: empty sprite");
  if (!(placement.scale_factor > 0.0)) throw ArgumentError("transform_sprite: scale must be > 0");

  const auto [out_rows, out_cols] = transformed_extent(src.rows, src.cols, placement);
  PositionedSprite out{RgbaImage::transparent(out_rows, out_cols), 0, 0};

  // inverse of (R * S) is S^-1 * R^T
  const Mat2 rt = placement.rotation.transposed();
  const double inv_s = 1.0 / placement.scale_factor;
  const double half_out_r = static_cast<double>(out_rows) / 2.0;
  const double half_out_c = static_cast<double>(out_cols) / 2.0;
  const double half_src_r = static_cast<double>(src.rows) / 2.0;
  const double half_src_c = static_cast<double>(src.cols) / 2.0;

  for (std::size_t u = 0; u < out_rows; ++u) {
    const double dr = static_cast<double>(u) + 0.5 - half_out_r;
    for (std::size_t v = 0; v < out_cols; ++v) {
      const double dc = static_cast<double>(v) + 0.5 - half_out_c;
      const double sc = (rt.a * dc + rt.b * dr) * inv_s + half_src_c;
      const double sr = (rt.c * dc + rt.d * dr) * inv_s + half_src_r;
      if (sr < 0.0 || sc < 0.0 || sr > static_cast<double>(src.rows) ||
          sc > static_cast<double>(src.cols))
        continue;
      detail::store_rgba(out.patch, u, v, detail::sample_premultiplied(src, sr - 0.5, sc - 0.5));
    }
  }
  out.top = static_cast<std::int64_t>(std::floor(placement.center.x - half_out_r + 0.5));
  out.left = static_cast<std::int64_t>(std::floor(placement.center.y - half_out_c + 0.5));
  return out;
}

/// Alpha-blends one positioned sprite into frame t of `clip` in place and
/// marks the footprint. Pixels with zero alpha are left untouched.
inline void blend_into(Clip& clip, FootprintMask& footprint, std::size_t t,
                       const PositionedSprite& sprite) {
  const auto h = static_cast<std::int64_t>(clip.height);
  const auto w = static_cast<std::int64_t>(clip.width);
  const auto pr = static_cast<std::int64_t>(sprite.patch.rows);
  const auto pc = static_cast<std::int64_t>(sprite.patch.cols);
  const std::int64_t r_begin = std::max<std::int64_t>(0, -sprite.top);
  const std::int64_t r_end = std::min<std::int64_t>(pr, h - sprite.top);
  const std::int64_t c_begin = std::max<std::int64_t>(0, -sprite.left);
  const std::int64_t c_end = std::min<std::int64_t>(pc, w - sprite.left);
  for (std::int64_t u = r_begin; u < r_end; ++u) {
    const auto fr = static_cast<std::size_t>(sprite.top + u);
    for (std::int64_t v = c_begin; v < c_end; ++v) {
      const auto fc = static_cast<std::size_t>(sprite.left + v);
      const double a = sprite.patch.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v), 3);
      if (!(a > 0.0)) continue;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double s = sprite.patch.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v), ch);
        float& dst = clip.at(t, fr, fc, ch);
        dst = static_cast<float>(std::clamp(a * s + (1.0 - a) * static_cast<double>(dst), 0.0, 1.0));
      }
      footprint.set(t, fr, fc);
    }
  }
}

namespace detail {

inline void composite_in_place(Clip& out, FootprintMask& footprint, const MotionPlan& plan,
                               const SegmentedObject& obj) {
  if (plan.trajectory.size() != out.frames || plan.transforms.size() != out.frames)
    throw ArgumentError("composite: motion plan length does not match clip frame count");
  const bool needs_resize = plan.base_rows != 0 && plan.base_cols != 0 &&
                            (plan.base_rows != obj.rgba.rows || plan.base_cols != obj.rgba.cols);
  const SegmentedObject sized =
      needs_resize ? resize_object(obj, plan.base_rows, plan.base_cols) : obj;
  for (std::size_t t = 0; t < out.frames; ++t) {
    const auto placement = placement_at(plan.trajectory, plan.transforms, t);
    blend_into(out, footprint, t, transform_sprite(sized, placement));
  }
}

}  // namespace detail

struct CompositeResult {
  Clip clip;
  FootprintMask footprint;
};

/// out = a * sprite + (1 - a) * background per frame along the plan.
inline CompositeResult composite(const Clip& clip, const MotionPlan& plan,
                                 const SegmentedObject& obj) {
  CompositeResult res{clip, FootprintMask::empty(clip.frames, clip.height, clip.width)};
  detail::composite_in_place(res.clip, res.footprint, plan, obj);
  return res;
}

struct PlacedObject {
  MotionPlan plan;
  SegmentedObject object;
};

/// Sequential compositing in list order; later objects occlude earlier ones.
inline CompositeResult composite_many(const Clip& clip, std::span<const PlacedObject> objects) {
  CompositeResult res{clip, FootprintMask::empty(clip.frames, clip.height, clip.width)};
  for (const auto& o : objects) detail::composite_in_place(res.clip, res.footprint, o.plan, o.object);
  return res;
}

// ---------------------------------------------------------------------------
// Backgrounds
// ---------------------------------------------------------------------------

enum class BackgroundKind { kNaturalClip, kRepeatedFrame, kStillImage, kBlack, kNoise };

inline std::string_view to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::kNaturalClip: return "natural-clip";
    case BackgroundKind::kRepeatedFrame: return "repeated-frame";
    case BackgroundKind::kStillImage: return "still-image";
    case BackgroundKind::kBlack: return "black";
    case BackgroundKind::kNoise: return "noise";
  }
  return "unknown";
}

inline BackgroundKind parse_background_kind(std::string_view s) {
  for (auto k : {BackgroundKind::kNaturalClip, BackgroundKind::kRepeatedFrame,
                 BackgroundKind::kStillImage, BackgroundKind::kBlack, BackgroundKind::kNoise})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown background kind '" + std::string(s) + "'");
}

inline bool background_needs_source(BackgroundKind k) {
  return k == BackgroundKind::kNaturalClip || k == BackgroundKind::kRepeatedFrame ||
         k == BackgroundKind::kStillImage;
}

namespace detail {

inline Clip repeat_frame(const Clip& src, std::size_t frame, std::size_t frames) {
  Clip out = Clip::zeros(frames, src.height, src.width, src.source_id);
  const auto f = src.frame(frame);
  for (std::size_t t = 0; t < frames; ++t) std::copy(f.begin(), f.end(), out.frame(t).begin());
  return out;
}

}  // namespace detail

/// Builds the clip an object is composited onto. Every kind except
/// natural-clip yields a static clip (all frames identical).
inline Clip make_background(BackgroundKind kind, const Clip* source, std::size_t frames,
                            std::size_t height, std::size_t width, Rng& rng) {
  const bool needs = background_needs_source(kind);
  if (needs && source == nullptr)
    throw ArgumentError("make_background: '" + std::string(to_string(kind)) + "' requires a source");
  if (!needs && source != nullptr)
    throw ArgumentError("make_background: '" + std::string(to_string(kind)) + "' takes no source");
  if (source != nullptr && (source->height != height || source->width != width))
    throw ArgumentError("make_background: source frame size mismatch");

  switch (kind) {
    case BackgroundKind::kNaturalClip:
      if (source->frames != frames) throw ArgumentError("make_background: source frame count mismatch");
      return *source;
    case BackgroundKind::kRepeatedFrame:
      return detail::repeat_frame(*source, static_cast<std::size_t>(rng.below(source->frames)), frames);
    case BackgroundKind::kStillImage:
      return detail::repeat_frame(*source, 0, frames);
    case BackgroundKind::kBlack:
      return Clip::zeros(frames, height, width, "black");
    case BackgroundKind::kNoise: {
      Clip one = Clip::zeros(1, height, width, "noise");
      for (auto& v : one.pixels) v = static_cast<float>(rng.uniform01());
      return detail::repeat_frame(one, 0, frames);
    }
  }
  throw ArgumentError("make_background: unknown kind");
}

}  // namespace synmo
