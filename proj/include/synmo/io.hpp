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

// File-backed inputs: PNG images, clip manifests and object libraries.
// Requires linking libpng.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "synmo/core.hpp"
#include "synmo/image.hpp"
#include "synmo/pipeline.hpp"
#include "synmo/targets.hpp"
#include "synmo/tokenizer.hpp"

namespace synmo {

/// Decoded 8-bit image with `channels` interleaved components per pixel.
struct PngImage {
  std::size_t rows{0};
  std::size_t cols{0};
  std::size_t channels{0};
  std::vector<std::uint8_t> data;
};

inline PngImage read_png(const std::filesystem::path& path, bool with_alpha) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw IoError("cannot read PNG '" + path.string() + "': " + img.message);
  img.format = with_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  PngImage out{img.height, img.width, with_alpha ? 4u : 3u, {}};
  out.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  return out;
}

/// Writes 8-bit RGB or RGBA data.
inline void write_png(const std::filesystem::path& path, const PngImage& image) {
  if (image.channels != 3 && image.channels != 4) throw ArgumentError("write_png: 3 or 4 channels");
  if (image.data.size() != image.rows * image.cols * image.channels)
    throw ArgumentError("write_png: buffer size mismatch");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.cols);
  img.height = static_cast<png_uint_32>(image.rows);
  img.format = image.channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.data.data(), 0, nullptr))
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
}

inline std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// Frame t of a clip as an 8-bit RGB image.
inline PngImage frame_image(const Clip& clip, std::size_t t) {
  PngImage img{clip.height, clip.width, 3, {}};
  const auto f = clip.frame(t);
  img.data.resize(f.size());
  std::transform(f.begin(), f.end(), img.data.begin(), to_u8);
  return img;
}

inline SegmentedObject read_object_png(const std::filesystem::path& path, std::string id) {
  const PngImage png = read_png(path, true);
  SegmentedObject obj{RgbaImage::transparent(png.rows, png.cols), std::move(id)};
  for (std::size_t i = 0; i < png.data.size(); ++i)
    obj.rgba.data[i] = static_cast<float>(png.data[i]) / 255.0f;
  obj.validate();
  return obj;
}

/// Object index: {"objects": [{"id": "...", "path": "sprite.png"}, ...]}.
/// Paths are relative to the index file.
inline std::vector<SegmentedObject> load_object_library(const std::filesystem::path& index) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(index));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("object index '" + index.string() + "' is not valid JSON: " + e.what());
  }
  std::vector<SegmentedObject> out;
  try {
    for (const auto& o : j.at("objects")) {
      const auto id = o.at("id").get<std::string>();
      out.push_back(read_object_png(index.parent_path() / o.at("path").get<std::string>(), id));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed object index '" + index.string() + "': " + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError("object in '" + index.string() + "': " + e.what());
  }
  if (out.empty()) throw ConfigError("object index '" + index.string() + "' lists no objects");
  return out;
}

/// Clip manifest:
///   {"clips": [
///     {"id": "a", "raw": "a.bin", "dtype": "u8" | "f32", "frames": T, "height": H, "width": W},
///     {"id": "b", "frames": ["b0.png", "b1.png", ...]},
///     {"id": "c", "image": "still.png"}
///   ]}
/// Raw files hold THWC RGB samples; u8 is scaled by 1/255, f32 must lie in [0, 1].
class ManifestClipSource final : public ClipSource {
 public:
  explicit ManifestClipSource(const std::filesystem::path& manifest) : root_(manifest.parent_path()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file_bytes(manifest));
      for (const auto& c : j.at("clips")) {
        c.at("id").get<std::string>();
        entries_.push_back(c);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed clip manifest '" + manifest.string() + "': " + e.what());
    }
  }

  std::size_t size() const override { return entries_.size(); }
  std::string id(std::size_t index) const override { return entries_.at(index).at("id").get<std::string>(); }

  Clip load(std::size_t index) const override {
    const auto& e = entries_.at(index);
    const std::string cid = id(index);
    try {
      if (e.contains("raw")) return load_raw(e, cid);
      if (e.contains("frames") && e.at("frames").is_array()) return load_frames(e, cid);
      if (e.contains("image")) {
        const PngImage png = read_png(root_ / e.at("image").get<std::string>(), false);
        return from_pngs(std::span(&png, 1), cid);
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("clip '" + cid + "': " + ex.what());
    }
    throw ConfigError("clip '" + cid + "' has no raw, frames or image entry");
  }

 private:
  Clip load_raw(const nlohmann::json& e, const std::string& cid) const {
    const auto t = e.at("frames").get<std::size_t>();
    const auto h = e.at("height").get<std::size_t>();
    const auto w = e.at("width").get<std::size_t>();
    const auto dtype = e.value("dtype", std::string("u8"));
    const std::string bytes = read_file_bytes(root_ / e.at("raw").get<std::string>());
    Clip clip = Clip::zeros(t, h, w, cid);
    const std::size_t n = clip.pixels.size();
    if (dtype == "u8") {
      if (bytes.size() != n) throw IntegrityError("clip '" + cid + "': raw u8 size mismatch");
      for (std::size_t i = 0; i < n; ++i)
        clip.pixels[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / 255.0f;
    } else if (dtype == "f32") {
      if (bytes.size() != n * 4) throw IntegrityError("clip '" + cid + "': raw f32 size mismatch");
      le::get_f32_array(reinterpret_cast<const unsigned char*>(bytes.data()), clip.pixels);
    } else {
      throw ConfigError("clip '" + cid + "': unknown dtype '" + dtype + "'");
    }
    try {
      clip.validate();
    } catch (const ArgumentError& ex) {
      throw IntegrityError("clip '" + cid + "': " + ex.what());
    }
    return clip;
  }

  Clip load_frames(const nlohmann::json& e, const std::string& cid) const {
    std::vector<PngImage> frames;
    for (const auto& f : e.at("frames")) frames.push_back(read_png(root_ / f.get<std::string>(), false));
    return from_pngs(frames, cid);
  }

  static Clip from_pngs(std::span<const PngImage> frames, const std::string& cid) {
    if (frames.empty()) throw ConfigError("clip '" + cid + "' has no frames");
    Clip clip = Clip::zeros(frames.size(), frames[0].rows, frames[0].cols, cid);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (frames[t].rows != clip.height || frames[t].cols != clip.width)
        throw IntegrityError("clip '" + cid + "': frame sizes differ");
      auto dst = clip.frame(t);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(frames[t].data[i]) / 255.0f;
    }
    return clip;
  }

  std::filesystem::path root_;
  std::vector<nlohmann::json> entries_;
};

/// Clip source, object library and teacher described by a config.
struct PipelineInputs {
  std::unique_ptr<ClipSource> clips;
  std::vector<SegmentedObject> objects;
  std::unique_ptr<TeacherFeatureProvider> teacher;
};

inline PipelineInputs open_inputs(const PipelineConfig& cfg) {
  PipelineInputs in;
  if (cfg.input.kind == "manifest")
    in.clips = std::make_unique<ManifestClipSource>(cfg.input.manifest);
  else
    in.clips = std::make_unique<SyntheticClipSource>(cfg.input.clips, cfg.geometry,
                                                     stream_seed(cfg.seed, "clips"));
  if (cfg.objects.count > 0)
    in.objects = cfg.objects.library.empty()
                     ? procedural_objects(cfg.objects.procedural_count, stream_seed(cfg.seed, "objects"))
                     : load_object_library(cfg.objects.library);
  in.teacher = make_teacher(cfg);
  return in;
}

}  // namespace synmo
