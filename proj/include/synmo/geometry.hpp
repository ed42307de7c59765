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
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "synmo/core.hpp"

namespace synmo {

/// Continuous frame coordinate. x runs along rows (0..H), y along columns (0..W).
struct Point {
  double x{0};
  double y{0};

  friend bool operator==(const Point&, const Point&) = default;
};

struct TrajectoryConfig {
  std::size_t frame_count{16};
  double frame_height{224};
  double frame_width{224};
  std::size_t raw_point_count{160};
  double smoothing{8.0};  // kappa, in raw-sample units
  std::uint64_t seed{0};

  void validate() const {
    if (frame_count < 2) throw ArgumentError("trajectory: frame_count must be >= 2");
    if (raw_point_count <= frame_count)
      throw ArgumentError("trajectory: raw_point_count must exceed frame_count");
    if (!(smoothing > 0.0)) throw ArgumentError("trajectory: smoothing must be > 0");
    if (!(frame_height > 0.0) || !(frame_width > 0.0))
      throw ArgumentError("trajectory: frame extent must be positive");
  }
};

struct Trajectory {
  std::vector<Point> centers;

  std::size_t size() const noexcept { return centers.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Keyframe {
  std::size_t frame{0};
  double angle_deg{0};
  double scale{1};

  friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

/// Per-frame rotation (degrees) and isotropic scale, piecewise linear between
/// three keyframes at the first, a middle and the last frame.
struct TransformTrack {
  std::vector<double> angles;
  std::vector<double> scales;
  std::array<Keyframe, 3> keyframes{};

  std::size_t size() const noexcept { return angles.size(); }
  friend bool operator==(const TransformTrack&, const TransformTrack&) = default;
};

/// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a{1}, b{0}, c{0}, d{1};

  double det() const noexcept { return a * d - b * c; }
  Mat2 operator*(const Mat2& o) const noexcept {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mat2 transposed() const noexcept { return {a, c, b, d}; }
};

struct AffinePlacement {
  Mat2 rotation;
  Mat2 scale;
  Point center;
  double angle_deg{0};
  double scale_factor{1};

  /// Scale then rotate. Isotropic scaling commutes with rotation.
  Mat2 matrix() const noexcept { return rotation * scale; }
};

inline Mat2 rotation_matrix(double angle_deg) {
  const double rad = angle_deg * (std::numbers::pi / 180.0);
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  return {c, -s, s, c};
}

// ---------------------------------------------------------------------------
// Trajectory generation
// ---------------------------------------------------------------------------

/// M points drawn uniformly from [0,H] x [0,W]; x then y per point.
inline std::vector<Point> generate_raw_path(const TrajectoryConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Point> path(cfg.raw_point_count);
  for (auto& p : path) {
    p.x = rng.uniform(0.0, cfg.frame_height);
    p.y = rng.uniform(0.0, cfg.frame_width);
  }
  return path;
}

/// Radius of the truncated kernel: ceil(4 kappa).
inline std::size_t gaussian_radius(double kappa) {
  return static_cast<std::size_t>(std::ceil(4.0 * kappa));
}

/// h(z) = exp(-z^2 / 2 kappa^2) / (sqrt(2 pi) kappa) sampled at z = -R..R and
/// renormalized to unit sum.
inline std::vector<double> gaussian_kernel(double kappa) {
  if (!(kappa > 0.0)) throw ArgumentError("gaussian_kernel: kappa must be > 0");
  const std::size_t radius = gaussian_radius(kappa);
  std::vector<double> k(2 * radius + 1);
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * kappa);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double z = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = norm * std::exp(-(z * z) / (2.0 * kappa * kappa));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a), periodic
/// with period 2n so any offset is valid.
inline std::size_t reflect_index(std::int64_t i, std::size_t n) {
  const auto period = static_cast<std::int64_t>(2 * n);
  std::int64_t j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<std::int64_t>(n)) j = period - 1 - j;
  return static_cast<std::size_t>(j);
}

inline std::vector<double> gaussian_smooth(std::span<const double> signal, double kappa) {
  if (signal.empty()) throw ArgumentError("gaussian_smooth: empty signal");
  const auto kernel = gaussian_kernel(kappa);
  const auto radius = static_cast<std::int64_t>(gaussian_radius(kappa));
  const std::size_t n = signal.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::int64_t z = -radius; z <= radius; ++z) {
      acc += kernel[static_cast<std::size_t>(z + radius)] *
             signal[reflect_index(static_cast<std::int64_t>(i) - z, n)];
    }
    out[i] = acc;
  }
  return out;
}

/// Smooths the x and y axes independently.
inline std::vector<Point> gaussian_smooth(std::span<const Point> path, double kappa) {
  if (path.empty()) throw ArgumentError("gaussian_smooth: empty path");
  std::vector<double> xs(path.size()), ys(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    xs[i] = path[i].x;
    ys[i] = path[i].y;
  }
  const auto sx = gaussian_smooth(std::span<const double>(xs), kappa);
  const auto sy = gaussian_smooth(std::span<const double>(ys), kappa);
  std::vector<Point> out(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) out[i] = {sx[i], sy[i]};
  return out;
}

/// Raw index used for output frame t: round(t (M-1) / (T-1)), half up.
inline std::size_t downsample_index(std::size_t t, std::size_t m, std::size_t frames) {
  return (2 * t * (m - 1) + (frames - 1)) / (2 * (frames - 1));
}

inline Trajectory downsample_path(std::span<const Point> path, std::size_t frames) {
  if (frames < 2) throw ArgumentError("downsample_path: need at least 2 frames");
  if (path.size() < frames) throw ArgumentError("downsample_path: fewer points than frames");
  Trajectory traj;
  traj.centers.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t)
    traj.centers.push_back(path[downsample_index(t, path.size(), frames)]);
  return traj;
}

/// Raw path -> smooth -> clamp to the frame -> downsample to T centers.
inline Trajectory generate_trajectory(const TrajectoryConfig& cfg, Rng& rng) {
  auto raw = generate_raw_path(cfg, rng);
  auto smooth = gaussian_smooth(std::span<const Point>(raw), cfg.smoothing);
  for (auto& p : smooth) {
    p.x = std::clamp(p.x, 0.0, cfg.frame_height);
    p.y = std::clamp(p.y, 0.0, cfg.frame_width);
  }
  return downsample_path(smooth, cfg.frame_count);
}

// ---------------------------------------------------------------------------
// Keyframe transforms
// ---------------------------------------------------------------------------

struct ValueKey {
  std::size_t frame;
  double value;
};

/// Piecewise-linear interpolation through sorted keys; the first key must sit
/// at frame 0 and the last at frames-1. Key frames reproduce key values exactly.
inline std::vector<double> interpolate_keys(std::span<const ValueKey> keys, std::size_t frames) {
  if (keys.size() < 2) throw ArgumentError("interpolate_keys: need at least 2 keys");
  if (keys.front().frame != 0 || keys.back().frame + 1 != frames)
    throw ArgumentError("interpolate_keys: keys must span [0, frames)");
  std::vector<double> out(frames);
  for (std::size_t s = 0; s + 1 < keys.size(); ++s) {
    const auto& lo = keys[s];
    const auto& hi = keys[s + 1];
    if (hi.frame <= lo.frame) throw ArgumentError("interpolate_keys: keys not increasing");
    const double span = static_cast<double>(hi.frame - lo.frame);
    const double vmin = std::min(lo.value, hi.value);
    const double vmax = std::max(lo.value, hi.value);
    for (std::size_t t = lo.frame; t < hi.frame; ++t) {
      const double v = lo.value + ((hi.value - lo.value) * static_cast<double>(t - lo.frame)) / span;
      out[t] = std::clamp(v, vmin, vmax);
    }
  }
  for (const auto& k : keys) out[k.frame] = k.value;
  return out;
}

struct Range {
  double lo{0};
  double hi{0};

  void validate(const char* what) const {
    if (!(lo <= hi)) throw ArgumentError(std::string(what) + ": range lo > hi");
  }
};

inline constexpr Range kDefaultAngleRange{-90.0, 90.0};
inline constexpr Range kDefaultScaleRange{0.5, 1.5};

/// Keyframes at 0, k ~ U{1..T-2}, T-1; angle then scale drawn per keyframe.
inline TransformTrack sample_keyframe_transforms(Rng& rng, Range angle_range, Range scale_range,
                                                 std::size_t frames) {
  if (frames < 3) throw ArgumentError("sample_keyframe_transforms: need at least 3 frames");
  angle_range.validate("angle");
  scale_range.validate("scale");
  const auto middle =
      static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(frames) - 2));
  TransformTrack track;
  track.keyframes = {Keyframe{0}, Keyframe{middle}, Keyframe{frames - 1}};
  for (auto& k : track.keyframes) {
    k.angle_deg = rng.uniform(angle_range.lo, angle_range.hi);
    k.scale = rng.uniform(scale_range.lo, scale_range.hi);
  }
  std::array<ValueKey, 3> angle_keys, scale_keys;
  for (std::size_t i = 0; i < 3; ++i) {
    angle_keys[i] = {track.keyframes[i].frame, track.keyframes[i].angle_deg};
    scale_keys[i] = {track.keyframes[i].frame, track.keyframes[i].scale};
  }
  track.angles = interpolate_keys(angle_keys, frames);
  track.scales = interpolate_keys(scale_keys, frames);
  return track;
}

inline AffinePlacement placement_at(const Trajectory& traj, const TransformTrack& track,
                                    std::size_t t) {
  if (t >= traj.size() || t >= track.size())
    throw ArgumentError("placement_at: frame index out of range");
  AffinePlacement p;
  p.angle_deg = track.angles[t];
  p.scale_factor = track.scales[t];
  p.rotation = rotation_matrix(p.angle_deg);
  p.scale = {p.scale_factor, 0.0, 0.0, p.scale_factor};
  p.center = traj.centers[t];
  return p;
}

}  // namespace synmo
