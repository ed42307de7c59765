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

#include <random>
#include <vector>

#include "oracles.hpp"
#include "synmo/tokenizer.hpp"

namespace {

using synmo::TokenGeometry;

TEST(TokenGeometry, DefaultCounts) {
  const TokenGeometry g;
  EXPECT_EQ(g.slices(), 8u);
  EXPECT_EQ(g.grid_rows(), 14u);
  EXPECT_EQ(g.grid_cols(), 14u);
  EXPECT_EQ(g.spatial_size(), 196u);
  EXPECT_EQ(g.token_count(), 1568u);
  EXPECT_EQ(g.block_size(), 1536u);
}

TEST(TokenGeometry, RejectsNonDivisible) {
  EXPECT_THROW(TokenGeometry(15, 224, 224, 2, 16), synmo::ArgumentError);
  EXPECT_THROW(TokenGeometry(16, 220, 224, 2, 16), synmo::ArgumentError);
  EXPECT_THROW(TokenGeometry(16, 224, 230, 2, 16), synmo::ArgumentError);
  EXPECT_THROW(TokenGeometry(16, 224, 224, 0, 16), synmo::ArgumentError);
  EXPECT_NO_THROW(TokenGeometry(4, 32, 48, 2, 8));
}

TEST(TokenIndex, HandCases) {
  const TokenGeometry g;
  EXPECT_EQ(synmo::token_of_pixel(0, 0, 0, g), 0u);
  EXPECT_EQ(synmo::token_of_pixel(2, 16, 16, g), 211u);
  const auto c = synmo::token_coord(211, g);
  EXPECT_EQ(c.tau, 1u);
  EXPECT_EQ(c.row, 1u);
  EXPECT_EQ(c.col, 1u);
  const auto last = synmo::cube_of_token(1567, g);
  EXPECT_EQ(last.t0, 14u);
  EXPECT_EQ(last.t1, 16u);
  EXPECT_EQ(last.h0, 208u);
  EXPECT_EQ(last.h1, 224u);
  EXPECT_EQ(last.w0, 208u);
  EXPECT_EQ(last.w1, 224u);
  EXPECT_THROW(synmo::token_of_pixel(16, 0, 0, g), synmo::ArgumentError);
  EXPECT_THROW(synmo::cube_of_token(1568, g), synmo::ArgumentError);
}

TEST(TokenIndex, FlatGridBijectionAtDefaultGeometry) {
  const TokenGeometry g;
  for (std::size_t i = 0; i < g.token_count(); ++i) {
    const auto c = synmo::token_coord(i, g);
    ASSERT_EQ(synmo::flat_index(c, g), i);
    ASSERT_EQ(i, c.tau * 196 + c.row * 14 + c.col);
    const auto cube = synmo::cube_of_token(i, g);
    ASSERT_EQ(synmo::token_of_pixel(cube.t0, cube.h0, cube.w0, g), i);
    ASSERT_EQ(synmo::token_of_pixel(cube.t1 - 1, cube.h1 - 1, cube.w1 - 1, g), i);
  }
}

TEST(TokenIndex, CubesPartitionSmallGeometry) {
  const TokenGeometry g(4, 32, 32, 2, 16);
  std::vector<int> cover(4 * 32 * 32, 0);
  for (std::size_t i = 0; i < g.token_count(); ++i) {
    const auto c = synmo::cube_of_token(i, g);
    for (std::size_t t = c.t0; t < c.t1; ++t)
      for (std::size_t h = c.h0; h < c.h1; ++h)
        for (std::size_t w = c.w0; w < c.w1; ++w) {
          ++cover[(t * 32 + h) * 32 + w];
          EXPECT_EQ(synmo::token_of_pixel(t, h, w, g), i);
          EXPECT_EQ(oracle::token_index(t, h, w, 2, 16, 32, 32), i);
        }
  }
  for (int c : cover) EXPECT_EQ(c, 1);
}

TEST(Tokenize, RoundTripAndBlockContents) {
  std::mt19937_64 gen(1);
  const TokenGeometry g(4, 32, 48, 2, 8);
  const auto clip = oracle::random_clip(4, 32, 48, gen, "rt");
  const auto tokens = synmo::tokenize(clip, g);
  ASSERT_EQ(tokens.rows, g.token_count());
  ASSERT_EQ(tokens.dim, g.block_size());
  EXPECT_EQ(synmo::untokenize(tokens, g, "rt"), clip);
  // Block layout is (dt, dh, dw, channel).
  for (std::size_t i = 0; i < g.token_count(); i += 7) {
    const auto c = synmo::cube_of_token(i, g);
    const auto row = tokens.row(i);
    std::size_t k = 0;
    for (std::size_t t = c.t0; t < c.t1; ++t)
      for (std::size_t h = c.h0; h < c.h1; ++h)
        for (std::size_t w = c.w0; w < c.w1; ++w)
          for (std::size_t ch = 0; ch < 3; ++ch) ASSERT_EQ(row[k++], clip.at(t, h, w, ch));
  }
  EXPECT_THROW(synmo::tokenize(oracle::random_clip(2, 32, 48, gen), g), synmo::ArgumentError);
}

TEST(Tokenize, DefaultGeometryTokenCount) {
  const TokenGeometry g;
  const auto tokens = synmo::tokenize(synmo::Clip::zeros(16, 224, 224), g);
  EXPECT_EQ(tokens.rows, 1568u);
  EXPECT_EQ(tokens.dim, 2u * 16 * 16 * 3);
}

}  // namespace
