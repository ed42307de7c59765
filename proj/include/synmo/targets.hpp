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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "synmo/core.hpp"
#include "synmo/image.hpp"
#include "synmo/masking.hpp"
#include "synmo/tokenizer.hpp"

namespace synmo {

/// frames x rows x cols x dim teacher features, row-major.
struct FeatureGrid {
  std::size_t frames{0};
  std::size_t rows{0};
  std::size_t cols{0};
  std::size_t dim{0};
  std::vector<float> values;

  static FeatureGrid zeros(std::size_t t, std::size_t r, std::size_t c, std::size_t d) {
    return {t, r, c, d, std::vector<float>(t * r * c * d, 0.0f)};
  }

  std::span<const float> at(std::size_t t, std::size_t r, std::size_t c) const {
    return std::span<const float>(values).subspan(((t * rows + r) * cols + c) * dim, dim);
  }
  std::span<float> at(std::size_t t, std::size_t r, std::size_t c) {
    return std::span<float>(values).subspan(((t * rows + r) * cols + c) * dim, dim);
  }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;
};

/// Source of per-frame patch-grid features (the frozen image teacher).
/// Implementations must be safe for concurrent const calls.
class TeacherFeatureProvider {
 public:
  virtual ~TeacherFeatureProvider() = default;
  virtual std::size_t dim() const = 0;
  /// Features on the token spatial grid of `g` for every frame of `clip`.
  virtual FeatureGrid features(const Clip& clip, const TokenGeometry& g) const = 0;
  virtual nlohmann::json describe() const = 0;
};

struct FeatureTargets {
  VectorTable table;  // N x D
};

struct PixelTargets {
  VectorTable table;  // N x block_size
};

/// Target for token (tau, r, c) is the teacher feature of frame tau * pt at (r, c).
inline FeatureTargets align_features(const FeatureGrid& grid, const TokenGeometry& g) {
  if (grid.frames != g.frames() || grid.rows != g.grid_rows() || grid.cols != g.grid_cols())
    throw ArgumentError("align_features: teacher grid " + std::to_string(grid.frames) + "x" +
                        std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                        " does not match token geometry");
  if (grid.values.size() != grid.frames * grid.rows * grid.cols * grid.dim)
    throw ArgumentError("align_features: feature grid size mismatch");
  FeatureTargets out{VectorTable::zeros(g.token_count(), grid.dim)};
  for (std::size_t i = 0; i < g.token_count(); ++i) {
    const TokenCoord c = token_coord(i, g);
    const auto src = grid.at(c.tau * g.temporal_patch(), c.row, c.col);
    std::copy(src.begin(), src.end(), out.table.row(i).begin());
  }
  return out;
}

inline PixelTargets pixel_targets(const Clip& clip, const TokenGeometry& g) {
  return {tokenize(clip, g)};
}

/// Decoder outputs for a set of masked tokens; row k predicts token indices[k].
struct Predictions {
  std::vector<std::uint32_t> indices;
  VectorTable values;
};

namespace detail {

inline double masked_squared_error(const VectorTable& targets, const Predictions& pred,
                                   const MaskSet& mask) {
  if (mask.masked.empty()) throw ArgumentError("loss: mask has no masked tokens");
  if (targets.rows != mask.token_count())
    throw ArgumentError("loss: target count does not match mask");
  if (pred.values.rows != pred.indices.size() || pred.values.dim != targets.dim ||
      pred.values.values.size() != pred.values.rows * pred.values.dim)
    throw ArgumentError("loss: prediction table shape mismatch");
  std::vector<std::uint32_t> sorted = pred.indices;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != mask.masked) throw ArgumentError("loss: predictions do not cover the masked set");

  double total = 0.0;
  for (std::size_t k = 0; k < pred.indices.size(); ++k) {
    const auto t = targets.row(pred.indices[k]);
    const auto y = pred.values.row(k);
    double sq = 0.0;
    for (std::size_t d = 0; d < t.size(); ++d) {
      if (!std::isfinite(t[d]) || !std::isfinite(y[d])) throw ArgumentError("loss: non-finite input");
      const double r = static_cast<double>(t[d]) - static_cast<double>(y[d]);
      sq += r * r;
    }
    total += sq;
  }
  return total / static_cast<double>(mask.masked.size());
}

}  // namespace detail

/// Mean over masked tokens of the squared L2 distance to the teacher feature.
/// No normalization by feature dimension.
inline double feature_loss(const FeatureTargets& targets, const Predictions& pred,
                           const MaskSet& mask) {
  return detail::masked_squared_error(targets.table, pred, mask);
}

/// Mean over masked tokens of the squared L2 distance to the token pixels.
inline double pixel_loss(const PixelTargets& targets, const Predictions& pred, const MaskSet& mask) {
  return detail::masked_squared_error(targets.table, pred, mask);
}

// ---------------------------------------------------------------------------
// Mock teacher: fixed random linear projection of the mean RGB of each patch.
// ---------------------------------------------------------------------------
class MockTeacher final : public TeacherFeatureProvider {
 public:
  MockTeacher(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim == 0) throw ArgumentError("mock teacher: dim must be >= 1");
    Rng rng(seed);
    weights_.resize(dim * Clip::kChannels);
    for (auto& w : weights_) w = rng.uniform(-1.0, 1.0);
  }

  std::size_t dim() const override { return dim_; }

  FeatureGrid features(const Clip& clip, const TokenGeometry& g) const override {
    if (!g.matches(clip)) throw ArgumentError("mock teacher: clip does not match geometry");
    const std::size_t ps = g.spatial_patch();
    FeatureGrid grid = FeatureGrid::zeros(clip.frames, g.grid_rows(), g.grid_cols(), dim_);
    const double inv_area = 1.0 / static_cast<double>(ps * ps);
    for (std::size_t t = 0; t < clip.frames; ++t)
      for (std::size_t r = 0; r < g.grid_rows(); ++r)
        for (std::size_t c = 0; c < g.grid_cols(); ++c) {
          double mean[3] = {0.0, 0.0, 0.0};
          for (std::size_t h = r * ps; h < (r + 1) * ps; ++h) {
            const float* px = clip.pixels.data() + clip.offset(t, h, c * ps);
            for (std::size_t w = 0; w < ps; ++w, px += 3) {
              mean[0] += px[0];
              mean[1] += px[1];
              mean[2] += px[2];
            }
          }
          for (double& m : mean) m *= inv_area;
          auto out = grid.at(t, r, c);
          for (std::size_t d = 0; d < dim_; ++d) {
            const double* w = weights_.data() + d * 3;
            out[d] = static_cast<float>(w[0] * mean[0] + w[1] * mean[1] + w[2] * mean[2]);
          }
        }
    return grid;
  }

  nlohmann::json describe() const override {
    return {{"kind", "mock"}, {"seed", seed_}, {"dim", dim_}};
  }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::vector<double> weights_;  // dim x 3
};

inline std::unique_ptr<TeacherFeatureProvider> mock_teacher(std::uint64_t seed, std::size_t dim) {
  return std::make_unique<MockTeacher>(seed, dim);
}

// ---------------------------------------------------------------------------
// Feature archive ("SMTF"): per-clip binary file
//   "SMTF" | u16 version | u32 T | u32 rows | u32 cols | u32 D | f32[T*rows*cols*D]
// all little-endian, plus a JSON index {"version":1,"dim":D,"clips":{id: path}}.
// ---------------------------------------------------------------------------
inline constexpr char kFeatureMagic[4] = {'S', 'M', 'T', 'F'};
inline constexpr std::uint16_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 22;

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string encode_feature_archive(const FeatureGrid& grid) {
  if (grid.values.size() != grid.frames * grid.rows * grid.cols * grid.dim)
    throw ArgumentError("feature archive: grid size mismatch");
  std::string out(kFeatureMagic, 4);
  le::put_u16(out, kFeatureVersion);
  for (std::size_t v : {grid.frames, grid.rows, grid.cols, grid.dim})
    le::put_u32(out, static_cast<std::uint32_t>(v));
  le::put_f32_array(out, grid.values);
  return out;
}

inline FeatureGrid decode_feature_archive(std::string_view bytes, std::string_view name = "archive") {
  auto fail = [&](const std::string& why) {
    return IntegrityError("feature archive '" + std::string(name) + "': " + why);
  };
  if (bytes.size() < kFeatureHeaderBytes) throw fail("truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (!std::equal(kFeatureMagic, kFeatureMagic + 4, bytes.begin())) throw fail("bad magic");
  if (le::get_u16(p + 4) != kFeatureVersion)
    throw fail("unsupported version " + std::to_string(le::get_u16(p + 4)));
  FeatureGrid g;
  g.frames = le::get_u32(p + 6);
  g.rows = le::get_u32(p + 10);
  g.cols = le::get_u32(p + 14);
  g.dim = le::get_u32(p + 18);
  const std::size_t count = g.frames * g.rows * g.cols * g.dim;
  if (bytes.size() != kFeatureHeaderBytes + 4 * count)
    throw fail("payload size " + std::to_string(bytes.size() - kFeatureHeaderBytes) +
               " does not match declared shape");
  g.values.resize(count);
  le::get_f32_array(p + kFeatureHeaderBytes, g.values);
  for (float v : g.values)
    if (!std::isfinite(v)) throw fail("non-finite feature value");
  return g;
}

/// Serves precomputed features keyed by Clip::source_id.
class FileTeacher final : public TeacherFeatureProvider {
 public:
  explicit FileTeacher(const std::filesystem::path& index_path) : index_path_(index_path) {
    nlohmann::json idx;
    try {
      idx = nlohmann::json::parse(read_file_bytes(index_path));
      dim_ = idx.at("dim").get<std::size_t>();
      for (const auto& [id, file] : idx.at("clips").items()) {
        std::filesystem::path p = file.get<std::string>();
        files_.emplace(id, p.is_absolute() ? p : index_path.parent_path() / p);
      }
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError("feature index '" + index_path.string() + "': " + e.what());
    }
    if (dim_ == 0) throw IntegrityError("feature index: dim must be >= 1");
  }

  std::size_t dim() const override { return dim_; }

  FeatureGrid features(const Clip& clip, const TokenGeometry& g) const override {
    const auto it = files_.find(clip.source_id);
    if (it == files_.end())
      throw IntegrityError("feature index has no entry for source '" + clip.source_id + "'");
    FeatureGrid grid = decode_feature_archive(read_file_bytes(it->second), it->second.string());
    if (grid.frames != clip.frames || grid.rows != g.grid_rows() || grid.cols != g.grid_cols() ||
        grid.dim != dim_)
      throw IntegrityError("feature archive for '" + clip.source_id +
                           "' has shape incompatible with clip/geometry");
    return grid;
  }

  nlohmann::json describe() const override {
    return {{"kind", "file"}, {"index", index_path_.string()}, {"dim", dim_}};
  }

 private:
  std::filesystem::path index_path_;
  std::size_t dim_{0};
  std::unordered_map<std::string, std::filesystem::path> files_;
};

inline std::unique_ptr<TeacherFeatureProvider> file_teacher(const std::filesystem::path& index) {
  return std::make_unique<FileTeacher>(index);
}

}  // namespace synmo
