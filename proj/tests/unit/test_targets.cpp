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
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "synmo/masking.hpp"
#include "synmo/targets.hpp"

namespace {

using synmo::FeatureGrid;
using synmo::MaskSet;
using synmo::Predictions;
using synmo::Provenance;
using synmo::TokenGeometry;
using synmo::VectorTable;

MaskSet mask_of(std::size_t n, const std::vector<std::uint32_t>& masked) {
  std::vector<Provenance> prov(n, Provenance::kNone);
  for (auto i : masked) prov[i] = Provenance::kTube;
  return MaskSet::from_provenance(std::move(prov));
}

FeatureGrid random_grid(std::size_t t, std::size_t r, std::size_t c, std::size_t d, std::mt19937_64& gen) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  auto g = FeatureGrid::zeros(t, r, c, d);
  for (auto& v : g.values) v = n(gen);
  return g;
}

TEST(AlignFeatures, DefaultGeometryCount) {
  const TokenGeometry g;
  const auto ft = synmo::align_features(FeatureGrid::zeros(16, 14, 14, 768), g);
  EXPECT_EQ(ft.table.rows, 1568u);
  EXPECT_EQ(ft.table.dim, 768u);
}

TEST(AlignFeatures, FirstSliceRuleOnConstantFrames) {
  const TokenGeometry g;
  auto grid = FeatureGrid::zeros(16, 14, 14, 4);
  for (std::size_t f = 0; f < 16; ++f)
    for (std::size_t r = 0; r < 14; ++r)
      for (std::size_t c = 0; c < 14; ++c)
        for (float& v : grid.at(f, r, c)) v = static_cast<float>(f);
  const auto ft = synmo::align_features(grid, g);
  for (std::size_t i = 0; i < 1568; ++i)
    for (float v : ft.table.row(i)) ASSERT_EQ(v, static_cast<float>((i / 196) * 2));
}

TEST(AlignFeatures, LaterFramesNeverInfluence) {
  const TokenGeometry g(6, 8, 8, 3, 4);
  std::mt19937_64 gen(1);
  auto grid = random_grid(6, 2, 2, 5, gen);
  const auto before = synmo::align_features(grid, g);
  for (std::size_t f : {1u, 2u, 4u, 5u})
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c)
        for (float& v : grid.at(f, r, c)) v = 1e6f;
  EXPECT_EQ(synmo::align_features(grid, g).table, before.table);
}

TEST(AlignFeatures, SingleSliceUsesFrameZero) {
  const TokenGeometry g(2, 8, 8, 2, 4);
  std::mt19937_64 gen(2);
  const auto grid = random_grid(2, 2, 2, 3, gen);
  const auto ft = synmo::align_features(grid, g);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto want = grid.at(0, i / 2, i % 2);
    EXPECT_TRUE(std::equal(want.begin(), want.end(), ft.table.row(i).begin()));
  }
}

TEST(AlignFeatures, RejectsGridMismatch) {
  const TokenGeometry g;
  EXPECT_THROW(synmo::align_features(FeatureGrid::zeros(16, 7, 7, 8), g), synmo::ArgumentError);
  EXPECT_THROW(synmo::align_features(FeatureGrid::zeros(8, 14, 14, 8), g), synmo::ArgumentError);
}

TEST(Loss, HandCaseFeatures) {
  synmo::FeatureTargets t{VectorTable::zeros(4, 2)};
  t.table.row(1)[0] = 1.0f;
  t.table.row(3)[1] = 1.0f;
  const Predictions p{{1, 3}, VectorTable::zeros(2, 2)};
  EXPECT_EQ(synmo::feature_loss(t, p, mask_of(4, {1, 3})), 1.0);
}

TEST(Loss, HandCasePixels) {
  const TokenGeometry g;
  synmo::Clip half = synmo::Clip::zeros(16, 224, 224);
  std::fill(half.pixels.begin(), half.pixels.end(), 0.5f);
  const auto t = synmo::pixel_targets(half, g);
  const Predictions p{{42}, VectorTable::zeros(1, 1536)};
  EXPECT_EQ(synmo::pixel_loss(t, p, mask_of(1568, {42})), 384.0);
}

TEST(Loss, ZeroIffEqualAndHomogeneous) {
  std::mt19937_64 gen(3);
  std::normal_distribution<float> n(0.0f, 1.0f);
  synmo::FeatureTargets t{VectorTable::zeros(10, 6)};
  for (auto& v : t.table.values) v = n(gen);
  const std::vector<std::uint32_t> idx{2, 5, 7};
  Predictions same{idx, synmo::gather_rows(t.table, idx)};
  const auto mask = mask_of(10, idx);
  EXPECT_EQ(synmo::feature_loss(t, same, mask), 0.0);

  Predictions off = same;
  for (auto& v : off.values.values) v += 0.25f;
  const double base = synmo::feature_loss(t, off, mask);
  EXPECT_GT(base, 0.0);
  // Residuals doubled (0.5 offsets) -> loss times four.
  Predictions off2 = same;
  for (auto& v : off2.values.values) v += 0.5f;
  EXPECT_NEAR(synmo::feature_loss(t, off2, mask), 4.0 * base, 1e-5 * base);
}

TEST(Loss, InvariantUnderReordering) {
  std::mt19937_64 gen(4);
  std::normal_distribution<float> n(0.0f, 1.0f);
  synmo::FeatureTargets t{VectorTable::zeros(20, 8)};
  for (auto& v : t.table.values) v = n(gen);
  Predictions p{{1, 4, 9, 13, 17}, VectorTable::zeros(5, 8)};
  for (auto& v : p.values.values) v = n(gen);
  const auto mask = mask_of(20, {1, 4, 9, 13, 17});
  const double a = synmo::feature_loss(t, p, mask);
  Predictions q{{17, 9, 1, 13, 4}, VectorTable::zeros(5, 8)};
  const std::vector<std::size_t> from{4, 2, 0, 3, 1};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto src = p.values.row(from[k]);
    std::copy(src.begin(), src.end(), q.values.row(k).begin());
  }
  EXPECT_NEAR(synmo::feature_loss(t, q, mask), a, 1e-12 * a);
}

TEST(Loss, MatchesNaiveReference) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> rows(2, 60), dims(1, 40);
  std::normal_distribution<float> n(0.0f, 3.0f);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = rows(gen), D = dims(gen);
    synmo::FeatureTargets t{VectorTable::zeros(N, D)};
    for (auto& v : t.table.values) v = n(gen);
    std::vector<std::uint32_t> all(N);
    std::iota(all.begin(), all.end(), 0u);
    std::shuffle(all.begin(), all.end(), gen);
    all.resize(1 + gen() % N);
    Predictions p{all, VectorTable::zeros(all.size(), D)};
    for (auto& v : p.values.values) v = n(gen);
    std::vector<std::vector<double>> tt, yy;
    for (std::size_t k = 0; k < all.size(); ++k) {
      const auto tr = t.table.row(all[k]);
      const auto yr = p.values.row(k);
      tt.emplace_back(tr.begin(), tr.end());
      yy.emplace_back(yr.begin(), yr.end());
    }
    std::vector<std::uint32_t> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    const double got = synmo::feature_loss(t, p, mask_of(N, sorted));
    const double want = oracle::naive_loss(tt, yy);
    ASSERT_LE(std::abs(got - want), 1e-9 * std::abs(want)) << trial;
  }
}

TEST(Loss, Errors) {
  synmo::FeatureTargets t{VectorTable::zeros(4, 2)};
  const auto mask = mask_of(4, {1, 3});
  EXPECT_THROW(synmo::feature_loss(t, Predictions{{1}, VectorTable::zeros(1, 2)}, mask), synmo::ArgumentError);
  EXPECT_THROW(synmo::feature_loss(t, Predictions{{1, 2}, VectorTable::zeros(2, 2)}, mask), synmo::ArgumentError);
  EXPECT_THROW(synmo::feature_loss(t, Predictions{{1, 3}, VectorTable::zeros(2, 3)}, mask), synmo::ArgumentError);
  Predictions nan{{1, 3}, VectorTable::zeros(2, 2)};
  nan.values.values[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(synmo::feature_loss(t, nan, mask), synmo::ArgumentError);
}

TEST(MockTeacher, DeterministicLocalAndZeroPreserving) {
  const TokenGeometry g(4, 32, 32, 2, 16);
  std::mt19937_64 gen(6);
  const auto teacher = synmo::mock_teacher(11, 8);
  EXPECT_EQ(teacher->dim(), 8u);
  auto clip = oracle::random_clip(4, 32, 32, gen);
  const auto a = teacher->features(clip, g);
  EXPECT_EQ(a, teacher->features(clip, g));
  EXPECT_EQ(a, synmo::MockTeacher(11, 8).features(clip, g));

  clip.at(3, 20, 5, 1) = 1.0f - clip.at(3, 20, 5, 1);  // frame 3, patch (1, 0)
  const auto b = teacher->features(clip, g);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        const bool same = std::equal(a.at(t, r, c).begin(), a.at(t, r, c).end(), b.at(t, r, c).begin());
        EXPECT_EQ(same, !(t == 3 && r == 1 && c == 0));
      }

  const auto zero = teacher->features(synmo::Clip::zeros(4, 32, 32), g);
  for (float v : zero.values) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(synmo::mock_teacher(1, 0), synmo::ArgumentError);
  EXPECT_EQ(teacher->describe().at("kind"), "mock");
}

class FileTeacherTest : public ::testing::Test {
 protected:
  oracle::TempDir dir{"teacher"};
  TokenGeometry g{4, 32, 32, 2, 16};

  void write_index(const nlohmann::json& clips, std::size_t dim) {
    synmo::write_file_bytes(dir.path() / "index.json",
                            nlohmann::json{{"version", 1}, {"dim", dim}, {"clips", clips}}.dump());
  }
};

TEST_F(FileTeacherTest, RoundTrip) {
  std::mt19937_64 gen(7);
  const auto grid = random_grid(4, 2, 2, 6, gen);
  const auto bytes = synmo::encode_feature_archive(grid);
  EXPECT_EQ(bytes.size(), 22u + 4u * grid.values.size());
  EXPECT_EQ(bytes.substr(0, 4), "SMTF");
  synmo::write_file_bytes(dir.path() / "a.smtf", bytes);
  write_index({{"clip-a", "a.smtf"}}, 6);
  const auto teacher = synmo::file_teacher(dir.path() / "index.json");
  EXPECT_EQ(teacher->dim(), 6u);
  const auto clip = synmo::Clip::zeros(4, 32, 32, "clip-a");
  EXPECT_EQ(teacher->features(clip, g), grid);
}

TEST_F(FileTeacherTest, Errors) {
  std::mt19937_64 gen(8);
  synmo::write_file_bytes(dir.path() / "a.smtf", synmo::encode_feature_archive(random_grid(4, 2, 2, 6, gen)));
  synmo::write_file_bytes(dir.path() / "b.smtf", synmo::encode_feature_archive(random_grid(4, 3, 3, 6, gen)));
  std::string corrupt = synmo::encode_feature_archive(random_grid(4, 2, 2, 6, gen));
  corrupt[0] = 'X';
  synmo::write_file_bytes(dir.path() / "c.smtf", corrupt);
  std::string truncated = synmo::encode_feature_archive(random_grid(4, 2, 2, 6, gen));
  truncated.resize(truncated.size() - 3);
  synmo::write_file_bytes(dir.path() / "d.smtf", truncated);
  auto nan_grid = random_grid(4, 2, 2, 6, gen);
  nan_grid.values[5] = std::numeric_limits<float>::infinity();
  synmo::write_file_bytes(dir.path() / "e.smtf", synmo::encode_feature_archive(nan_grid));
  write_index({{"a", "a.smtf"}, {"b", "b.smtf"}, {"c", "c.smtf"}, {"d", "d.smtf"}, {"e", "e.smtf"}}, 6);

  const auto teacher = synmo::file_teacher(dir.path() / "index.json");
  EXPECT_NO_THROW(teacher->features(synmo::Clip::zeros(4, 32, 32, "a"), g));
  for (const char* id : {"missing", "b", "c", "d", "e"})
    EXPECT_THROW(teacher->features(synmo::Clip::zeros(4, 32, 32, id), g), synmo::IntegrityError) << id;
  EXPECT_THROW(teacher->features(synmo::Clip::zeros(2, 32, 32, "a"), g), synmo::IntegrityError);

  synmo::write_file_bytes(dir.path() / "bad.json", "{not json");
  EXPECT_THROW(synmo::file_teacher(dir.path() / "bad.json"), synmo::IntegrityError);
  EXPECT_THROW(synmo::file_teacher(dir.path() / "absent.json"), synmo::IoError);
}

}  // namespace
