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


#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "synmo/geometry.hpp"

namespace {

using synmo::Point;
using synmo::Rng;
using synmo::TrajectoryConfig;

TrajectoryConfig default_cfg() { return TrajectoryConfig{}; }

TEST(TrajectoryConfig, Validation) {
  auto c = default_cfg();
  EXPECT_NO_THROW(c.validate());
  c.raw_point_count = 8;
  EXPECT_THROW(c.validate(), synmo::ArgumentError);
  c = default_cfg();
  c.raw_point_count = 16;  // M == T is not M > T
  EXPECT_THROW(c.validate(), synmo::ArgumentError);
  c = default_cfg();
  c.smoothing = 0.0;
  EXPECT_THROW(c.validate(), synmo::ArgumentError);
  c = default_cfg();
  c.frame_count = 1;
  EXPECT_THROW(c.validate(), synmo::ArgumentError);
}

TEST(RawPath, CountRangeAndDeterminism) {
  const auto cfg = default_cfg();
  Rng a(5), b(5);
  const auto p = synmo::generate_raw_path(cfg, a);
  ASSERT_EQ(p.size(), 160u);
  for (const auto& q : p) {
    EXPECT_GE(q.x, 0.0);
    EXPECT_LE(q.x, 224.0);
    EXPECT_GE(q.y, 0.0);
    EXPECT_LE(q.y, 224.0);
  }
  EXPECT_EQ(p, synmo::generate_raw_path(cfg, b));
  auto bad = cfg;
  bad.raw_point_count = 8;
  EXPECT_THROW(synmo::generate_raw_path(bad, a), synmo::ArgumentError);
}

TEST(GaussianKernel, RadiusAndNormalization) {
  EXPECT_EQ(synmo::gaussian_radius(1.0), 4u);
  EXPECT_EQ(synmo::gaussian_radius(8.0), 32u);
  EXPECT_EQ(synmo::gaussian_radius(0.6), 3u);  // ceil(2.4)
  const auto k = synmo::gaussian_kernel(2.5);
  ASSERT_EQ(k.size(), 2 * 10 + 1);
  double sum = 0.0;
  for (double v : k) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
}

TEST(ReflectIndex, HalfSampleSymmetric) {
  // n = 4: ... 1 0 | 0 1 2 3 | 3 2 1 0 | 0 ...
  const std::vector<std::int64_t> in{-5, -4, -1, 0, 3, 4, 5, 7, 8, 11};
  const std::vector<std::size_t> want{3, 3, 0, 0, 3, 3, 2, 0, 0, 3};
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(synmo::reflect_index(in[i], 4), want[i]) << in[i];
  EXPECT_EQ(synmo::reflect_index(-3, 1), 0u);
}

// Values from scipy.ndimage.gaussian_filter1d(x, sigma, mode="reflect", truncate=4.0).
TEST(GaussianSmooth, ImpulseMatchesScipy) {
  const std::vector<double> impulse{0, 0, 1, 0, 0};
  const std::vector<double> k1{0.05842298904073567, 0.24210527628121548, 0.39894346935609776,
                               0.24210527628121548, 0.05842298904073567};
  const std::vector<double> k2{0.1862506916801559, 0.20524768002468574, 0.21700325659031675,
                               0.20524768002468574, 0.1862506916801559};
  const auto s1 = synmo::gaussian_smooth(std::span<const double>(impulse), 1.0);
  const auto s2 = synmo::gaussian_smooth(std::span<const double>(impulse), 2.0);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(s1[i], k1[i], 1e-12);
    EXPECT_NEAR(s2[i], k2[i], 1e-12);
  }
  const auto direct = oracle::direct_gaussian(impulse, 1.0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s1[i], direct[i], 1e-12);
}

TEST(GaussianSmooth, ConstantPathUnchanged) {
  const std::vector<Point> path(50, Point{5.0, 7.0});
  for (double kappa : {0.5, 3.0, 8.0, 40.0}) {
    const auto s = synmo::gaussian_smooth(std::span<const Point>(path), kappa);
    for (const auto& p : s) {
      EXPECT_NEAR(p.x, 5.0, 1e-12);
      EXPECT_NEAR(p.y, 7.0, 1e-12);
    }
  }
}

TEST(GaussianSmooth, RampInteriorUnchanged) {
  std::vector<double> ramp(100);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const double kappa = 3.0;
  const auto s = synmo::gaussian_smooth(std::span<const double>(ramp), kappa);
  const std::size_t r = synmo::gaussian_radius(kappa);
  for (std::size_t i = r; i + r < ramp.size(); ++i) EXPECT_NEAR(s[i], ramp[i], 1e-9);
}

TEST(GaussianSmooth, MatchesDirectConvolution) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> len(3, 200);
  std::uniform_real_distribution<double> kap(0.5, 20.0), val(-100.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(len(gen)));
    for (auto& v : x) v = val(gen);
    const double kappa = kap(gen);
    const auto got = synmo::gaussian_smooth(std::span<const double>(x), kappa);
    const auto want = oracle::direct_gaussian(x, kappa);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9) << trial;
  }
  EXPECT_THROW(synmo::gaussian_smooth(std::span<const double>(), 1.0), synmo::ArgumentError);
}

TEST(Downsample, IndexFormula) {
  std::vector<Point> five;
  for (int i = 0; i < 5; ++i) five.push_back({static_cast<double>(i), 0.0});
  const auto t = synmo::downsample_path(five, 3);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.centers[0].x, 0.0);
  EXPECT_EQ(t.centers[1].x, 2.0);
  EXPECT_EQ(t.centers[2].x, 4.0);
  EXPECT_EQ(synmo::downsample_path(five, 5).centers, five);
  EXPECT_THROW(synmo::downsample_path(five, 6), synmo::ArgumentError);
  // Ties round up: t=1, M=4, T=3 -> 1.5 -> 2.
  EXPECT_EQ(synmo::downsample_index(1, 4, 3), 2u);
  for (std::size_t i = 0; i < 16; ++i)
    EXPECT_EQ(synmo::downsample_index(i, 160, 16), oracle::rhu(static_cast<double>(i) * 159.0 / 15.0));
}

TEST(Trajectory, EndpointsInRangeAndDeterministic) {
  auto cfg = default_cfg();
  Rng a(21), b(21);
  const auto t = synmo::generate_trajectory(cfg, a);
  ASSERT_EQ(t.size(), 16u);
  for (const auto& p : t.centers) {
    EXPECT_TRUE(std::isfinite(p.x) && std::isfinite(p.y));
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, 224.0);
    EXPECT_GE(p.y, 0.0);
    EXPECT_LE(p.y, 224.0);
  }
  EXPECT_EQ(t, synmo::generate_trajectory(cfg, b));
}

TEST(Trajectory, SmoothThenClampThenDownsample) {
  auto cfg = default_cfg();
  cfg.frame_height = 100;
  cfg.frame_width = 60;
  Rng a(8), b(8);
  const auto got = synmo::generate_trajectory(cfg, a);
  auto raw = synmo::generate_raw_path(cfg, b);
  auto smooth = synmo::gaussian_smooth(std::span<const Point>(raw), cfg.smoothing);
  for (auto& p : smooth) {
    p.x = std::clamp(p.x, 0.0, 100.0);
    p.y = std::clamp(p.y, 0.0, 60.0);
  }
  EXPECT_EQ(got, synmo::downsample_path(smooth, 16));
  EXPECT_EQ(got.centers.front(), smooth.front());
  EXPECT_EQ(got.centers.back(), smooth.back());
}

TEST(Keyframes, DegenerateRanges) {
  Rng r(1);
  const auto tr = synmo::sample_keyframe_transforms(r, {0, 0}, {1, 1}, 16);
  for (std::size_t t = 0; t < 16; ++t) {
    EXPECT_EQ(tr.angles[t], 0.0);
    EXPECT_EQ(tr.scales[t], 1.0);
  }
  EXPECT_THROW(synmo::sample_keyframe_transforms(r, {0, 0}, {1, 1}, 2), synmo::ArgumentError);
  EXPECT_THROW(synmo::sample_keyframe_transforms(r, {1, 0}, {1, 1}, 16), synmo::ArgumentError);
}

TEST(Keyframes, LinearInterpolationHandCase) {
  const std::vector<synmo::ValueKey> keys{{0, 0.0}, {7, 70.0}, {15, 70.0}};
  const auto v = synmo::interpolate_keys(keys, 16);
  EXPECT_NEAR(v[3], 30.0, 1e-12);
  EXPECT_EQ(v[7], 70.0);
  EXPECT_EQ(v[11], 70.0);
  const std::vector<synmo::ValueKey> bad{{1, 0.0}, {15, 1.0}};
  EXPECT_THROW(synmo::interpolate_keys(bad, 16), synmo::ArgumentError);
}

TEST(Keyframes, ExactPiecewiseLinearAndContained) {
  Rng r(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto tr = synmo::sample_keyframe_transforms(r, synmo::kDefaultAngleRange,
                                                      synmo::kDefaultScaleRange, 16);
    ASSERT_EQ(tr.size(), 16u);
    const auto& k = tr.keyframes;
    EXPECT_EQ(k[0].frame, 0u);
    EXPECT_EQ(k[2].frame, 15u);
    EXPECT_GE(k[1].frame, 1u);
    EXPECT_LE(k[1].frame, 14u);
    for (const auto& kf : k) {
      EXPECT_EQ(tr.angles[kf.frame], kf.angle_deg);
      EXPECT_EQ(tr.scales[kf.frame], kf.scale);
    }
    for (std::size_t seg = 0; seg < 2; ++seg)
      for (std::size_t t = k[seg].frame; t + 2 <= k[seg + 1].frame; ++t) {
        EXPECT_LE(std::abs(tr.angles[t] - 2 * tr.angles[t + 1] + tr.angles[t + 2]), 1e-9);
        EXPECT_LE(std::abs(tr.scales[t] - 2 * tr.scales[t + 1] + tr.scales[t + 2]), 1e-9);
      }
    for (std::size_t t = 0; t < 16; ++t) {
      EXPECT_GE(tr.angles[t], -90.0);
      EXPECT_LE(tr.angles[t], 90.0);
      EXPECT_GE(tr.scales[t], 0.5);
      EXPECT_LE(tr.scales[t], 1.5);
    }
  }
}

TEST(Keyframes, MiddleFrameCoversInterior) {
  Rng r(4);
  std::vector<int> seen(16, 0);
  for (int i = 0; i < 2000; ++i) ++seen[synmo::sample_keyframe_transforms(r, {0, 1}, {1, 2}, 16).keyframes[1].frame];
  EXPECT_EQ(seen[0], 0);
  EXPECT_EQ(seen[15], 0);
  for (int t = 1; t <= 14; ++t) EXPECT_GT(seen[static_cast<std::size_t>(t)], 0);
}

TEST(Placement, Matrices) {
  synmo::Trajectory traj{{{10, 20}, {30, 40}}};
  synmo::TransformTrack track;
  track.angles = {0.0, 90.0};
  track.scales = {1.0, 1.0};
  const auto p0 = synmo::placement_at(traj, track, 0);
  const auto m0 = p0.matrix();
  EXPECT_EQ(m0.a, 1.0);
  EXPECT_EQ(m0.b, 0.0);
  EXPECT_EQ(m0.c, 0.0);
  EXPECT_EQ(m0.d, 1.0);
  const auto m1 = synmo::placement_at(traj, track, 1).matrix();
  EXPECT_NEAR(m1.a, 0.0, 1e-12);
  EXPECT_NEAR(m1.b, -1.0, 1e-12);
  EXPECT_NEAR(m1.c, 1.0, 1e-12);
  EXPECT_NEAR(m1.d, 0.0, 1e-12);
  EXPECT_EQ(synmo::placement_at(traj, track, 1).center, (Point{30, 40}));
  track.angles[0] = 0.0;
  track.scales[0] = 2.0;
  const auto m2 = synmo::placement_at(traj, track, 0).matrix();
  EXPECT_EQ(m2.a, 2.0);
  EXPECT_EQ(m2.d, 2.0);
  EXPECT_EQ(m2.b, 0.0);
  EXPECT_THROW(synmo::placement_at(traj, track, 2), synmo::ArgumentError);
}

TEST(Placement, RotationOrthogonal) {
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const auto m = synmo::rotation_matrix(r.uniform(-360.0, 360.0));
    const auto id = m.transposed() * m;
    EXPECT_NEAR(id.a, 1.0, 1e-9);
    EXPECT_NEAR(id.b, 0.0, 1e-9);
    EXPECT_NEAR(id.c, 0.0, 1e-9);
    EXPECT_NEAR(id.d, 1.0, 1e-9);
    EXPECT_NEAR(m.det(), 1.0, 1e-9);
  }
}

}  // namespace
