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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "synmo/compositor.hpp"
#include "synmo/core.hpp"
#include "synmo/geometry.hpp"
#include "synmo/hash.hpp"
#include "synmo/image.hpp"
#include "synmo/masking.hpp"
#include "synmo/shard.hpp"
#include "synmo/targets.hpp"
#include "synmo/tokenizer.hpp"

namespace synmo {

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------
enum class Schedule : std::uint8_t { kSingle, kMixed, kProgressive };

/// Which variants an epoch emits.
enum class Emission : std::uint8_t { kAugmentedOnly, kOriginalOnly, kBoth };

inline std::string_view to_string(Schedule s) {
  switch (s) {
    case Schedule::kSingle: return "single";
    case Schedule::kMixed: return "mixed";
    case Schedule::kProgressive: return "progressive";
  }
  return "unknown";
}

inline std::string_view to_string(Emission e) {
  switch (e) {
    case Emission::kAugmentedOnly: return "augmented-only";
    case Emission::kOriginalOnly: return "original-only";
    case Emission::kBoth: return "both";
  }
  return "unknown";
}

inline Schedule parse_schedule(std::string_view s) {
  for (auto k : {Schedule::kSingle, Schedule::kMixed, Schedule::kProgressive})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown schedule '" + std::string(s) + "'");
}

/// single: augmented every epoch. mixed: both every epoch. progressive:
/// augmented for epoch < first_stage, original afterwards.
inline Emission schedule_variant(Schedule schedule, std::uint64_t epoch, std::uint64_t first_stage) {
  switch (schedule) {
    case Schedule::kSingle: return Emission::kAugmentedOnly;
    case Schedule::kMixed: return Emission::kBoth;
    case Schedule::kProgressive:
      return epoch < first_stage ? Emission::kAugmentedOnly : Emission::kOriginalOnly;
  }
  throw ArgumentError("schedule_variant: unknown schedule");
}

/// epochs x samples drawn per video per epoch.
inline std::uint64_t effective_epochs(std::uint64_t epochs, std::uint64_t samples_per_video) {
  return epochs * samples_per_video;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------
struct ObjectsConfig {
  std::size_t count{2};
  std::size_t size_min{32};
  std::size_t size_max{128};
  Range angle{kDefaultAngleRange};
  Range scale{kDefaultScaleRange};
  std::size_t raw_points_per_frame{10};  // M = raw_points_per_frame * T
  double smoothing{8.0};
  std::string library;                  // object index JSON; empty = procedural sprites
  std::size_t procedural_count{64};
};

struct ScheduleConfig {
  Schedule kind{Schedule::kProgressive};
  std::size_t epochs{300};
  std::size_t first_stage{150};
  std::size_t second_stage{150};
};

struct TeacherConfig {
  std::string kind{"mock"};  // mock | file
  std::size_t dim{768};
  std::uint64_t seed{0};
  std::string index;
};

struct InputConfig {
  std::string kind{"synthetic"};  // synthetic | manifest
  std::size_t clips{100};
  std::string manifest;
};

struct PipelineConfig {
  TokenGeometry geometry;
  MaskConfig mask;
  ObjectsConfig objects;
  BackgroundKind background{BackgroundKind::kNaturalClip};
  ScheduleConfig schedule;
  std::size_t samples_per_video{2};
  std::uint64_t seed{0};
  TargetKind target{TargetKind::kFeatures};
  TeacherConfig teacher;
  InputConfig input;
  std::size_t shard_size{64};

  void validate() const {
    if (!(mask.ratio > 0.0 && mask.ratio < 1.0)) throw ConfigError("mask.ratio must lie in (0, 1)");
    if (objects.size_min == 0 || objects.size_min > objects.size_max)
      throw ConfigError("objects.size_min must be in [1, objects.size_max]");
    if (!(objects.angle.lo <= objects.angle.hi)) throw ConfigError("objects.angle_min > angle_max");
    if (!(objects.scale.lo > 0.0) || !(objects.scale.lo <= objects.scale.hi))
      throw ConfigError("objects.scale range must be positive and ordered");
    if (objects.raw_points_per_frame < 2) throw ConfigError("objects.raw_points_per_frame must be >= 2");
    if (!(objects.smoothing > 0.0)) throw ConfigError("objects.smoothing must be > 0");
    if (objects.count > 0 && geometry.frames() < 3)
      throw ConfigError("object motion needs at least 3 frames");
    if (objects.library.empty() && objects.procedural_count == 0 && objects.count > 0)
      throw ConfigError("objects.procedural_count must be >= 1");
    if (samples_per_video == 0) throw ConfigError("samples_per_video must be >= 1");
    if (schedule.kind == Schedule::kProgressive) {
      if (schedule.first_stage == 0 || schedule.second_stage == 0)
        throw ConfigError("progressive schedule needs two positive stage lengths");
      if (schedule.first_stage + schedule.second_stage != schedule.epochs)
        throw ConfigError("progressive stage lengths must sum to schedule.epochs");
    }
    if (teacher.kind != "mock" && teacher.kind != "file")
      throw ConfigError("teacher.kind must be 'mock' or 'file'");
    if (target == TargetKind::kFeatures && teacher.kind == "mock" && teacher.dim == 0)
      throw ConfigError("teacher.dim must be >= 1");
    if (target == TargetKind::kFeatures && teacher.kind == "file" && teacher.index.empty())
      throw ConfigError("teacher.index is required for a file teacher");
    if (input.kind != "synthetic" && input.kind != "manifest")
      throw ConfigError("input.kind must be 'synthetic' or 'manifest'");
    if (input.kind == "manifest" && input.manifest.empty())
      throw ConfigError("input.manifest is required for manifest input");
    if (shard_size == 0) throw ConfigError("shard_size must be >= 1");
  }

  nlohmann::json to_json() const {
    return {
        {"geometry", geometry_to_json(geometry)},
        {"mask", {{"ratio", mask.ratio}, {"use_trajectory", mask.use_trajectory}}},
        {"objects",
         {{"count", objects.count},
          {"size_min", objects.size_min},
          {"size_max", objects.size_max},
          {"angle_min", objects.angle.lo},
          {"angle_max", objects.angle.hi},
          {"scale_min", objects.scale.lo},
          {"scale_max", objects.scale.hi},
          {"raw_points_per_frame", objects.raw_points_per_frame},
          {"smoothing", objects.smoothing},
          {"library", objects.library},
          {"procedural_count", objects.procedural_count}}},
        {"background", to_string(background)},
        {"schedule",
         {{"kind", to_string(schedule.kind)},
          {"epochs", schedule.epochs},
          {"stage_split", {schedule.first_stage, schedule.second_stage}}}},
        {"samples_per_video", samples_per_video},
        {"seed", seed},
        {"target", to_string(target)},
        {"teacher",
         {{"kind", teacher.kind}, {"dim", teacher.dim}, {"seed", teacher.seed}, {"index", teacher.index}}},
        {"input", {{"kind", input.kind}, {"clips", input.clips}, {"manifest", input.manifest}}},
        {"shard_size", shard_size},
    };
  }

  static PipelineConfig from_json(const nlohmann::json& user);
};

namespace detail {

inline void merge_checked(nlohmann::json& base, const nlohmann::json& patch, const std::string& path) {
  using nlohmann::json;
  auto type_ok = [](const json& def, const json& v) {
    if (def.is_number_float()) return v.is_number();
    if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
  };
  for (const auto& [key, value] : patch.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    json& slot = base[key];
    if (!type_ok(slot, value))
      throw ConfigError("config key '" + here + "' expects " + std::string(slot.type_name()) +
                        ", got " + std::string(value.type_name()));
    if (slot.is_object()) {
      merge_checked(slot, value, here);
    } else if (slot.is_number_unsigned() && value.is_number_integer()) {
      slot = value.get<std::uint64_t>();
    } else {
      slot = value;
    }
  }
}

}  // namespace detail

/// Strict parse: every key must exist in the default config and carry a
/// value of the same JSON type; missing keys keep their defaults.
inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& user) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  nlohmann::json j = PipelineConfig{}.to_json();
  detail::merge_checked(j, user, "");
  PipelineConfig c;
  try {
    const auto& g = j.at("geometry");
    try {
      c.geometry = geometry_from_json(g);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    c.mask.ratio = j.at("mask").at("ratio").get<double>();
    c.mask.use_trajectory = j.at("mask").at("use_trajectory").get<bool>();
    const auto& o = j.at("objects");
    c.objects.count = o.at("count").get<std::size_t>();
    c.objects.size_min = o.at("size_min").get<std::size_t>();
    c.objects.size_max = o.at("size_max").get<std::size_t>();
    c.objects.angle = {o.at("angle_min").get<double>(), o.at("angle_max").get<double>()};
    c.objects.scale = {o.at("scale_min").get<double>(), o.at("scale_max").get<double>()};
    c.objects.raw_points_per_frame = o.at("raw_points_per_frame").get<std::size_t>();
    c.objects.smoothing = o.at("smoothing").get<double>();
    c.objects.library = o.at("library").get<std::string>();
    c.objects.procedural_count = o.at("procedural_count").get<std::size_t>();
    c.background = parse_background_kind(j.at("background").get<std::string>());
    const auto& s = j.at("schedule");
    c.schedule.kind = parse_schedule(s.at("kind").get<std::string>());
    c.schedule.epochs = s.at("epochs").get<std::size_t>();
    const auto split = s.at("stage_split").get<std::vector<std::size_t>>();
    if (split.size() != 2) throw ConfigError("schedule.stage_split must have two entries");
    c.schedule.first_stage = split[0];
    c.schedule.second_stage = split[1];
    c.samples_per_video = j.at("samples_per_video").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.target = parse_target_kind(j.at("target").get<std::string>());
    const auto& t = j.at("teacher");
    c.teacher = {t.at("kind").get<std::string>(), t.at("dim").get<std::size_t>(),
                 t.at("seed").get<std::uint64_t>(), t.at("index").get<std::string>()};
    const auto& in = j.at("input");
    c.input = {in.at("kind").get<std::string>(), in.at("clips").get<std::size_t>(),
               in.at("manifest").get<std::string>()};
    c.shard_size = j.at("shard_size").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Applies one "dotted.key=value" override. The value is parsed as JSON when
/// possible and otherwise taken as a string.
inline void apply_override(nlohmann::json& user, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  nlohmann::json patch = value;
  std::string_view rest = key;
  std::vector<std::string> parts;
  while (true) {
    const auto dot = rest.find('.');
    parts.emplace_back(rest.substr(0, dot));
    if (parts.back().empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    if (dot == std::string_view::npos) break;
    rest.remove_prefix(dot + 1);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = nlohmann::json{{*it, patch}};
  // Validate against the full schema before merging into the user document.
  nlohmann::json probe = PipelineConfig{}.to_json();
  detail::merge_checked(probe, patch, "");
  user.merge_patch(patch);
}

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// Indexed collection of input clips ("videos").
class ClipSource {
 public:
  virtual ~ClipSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::string id(std::size_t index) const = 0;
  virtual Clip load(std::size_t index) const = 0;
};

/// Deterministic procedural clips: a drifting color gradient with a few moving
/// rectangles, so every clip has genuine temporal change.
class SyntheticClipSource final : public ClipSource {
 public:
  SyntheticClipSource(std::size_t count, const TokenGeometry& g, std::uint64_t seed)
      : count_(count), frames_(g.frames()), height_(g.height()), width_(g.width()), seed_(seed) {}

  std::size_t size() const override { return count_; }

  std::string id(std::size_t index) const override {
    char buf[32];
    std::snprintf(buf, sizeof buf, "synthetic-%06zu", index);
    return buf;
  }

  Clip load(std::size_t index) const override {
    if (index >= count_) throw ArgumentError("synthetic clip index out of range");
    Rng rng(stream_seed(seed_, id(index)));
    Clip clip = Clip::zeros(frames_, height_, width_, id(index));
    double base[3], grad_r[3], grad_c[3], drift[3];
    for (int ch = 0; ch < 3; ++ch) {
      base[ch] = rng.uniform(0.2, 0.8);
      grad_r[ch] = rng.uniform(-0.2, 0.2);
      grad_c[ch] = rng.uniform(-0.2, 0.2);
      drift[ch] = rng.uniform(-0.01, 0.01);
    }
    struct Box { double r, c, vr, vc, h, w; float color[3]; };
    std::vector<Box> boxes(3);
    for (auto& b : boxes) {
      b.r = rng.uniform(0.0, static_cast<double>(height_));
      b.c = rng.uniform(0.0, static_cast<double>(width_));
      b.vr = rng.uniform(-3.0, 3.0);
      b.vc = rng.uniform(-3.0, 3.0);
      b.h = rng.uniform(0.1, 0.3) * static_cast<double>(height_);
      b.w = rng.uniform(0.1, 0.3) * static_cast<double>(width_);
      for (float& v : b.color) v = static_cast<float>(rng.uniform01());
    }
    const double inv_h = 1.0 / static_cast<double>(height_);
    const double inv_w = 1.0 / static_cast<double>(width_);
    for (std::size_t t = 0; t < frames_; ++t) {
      for (std::size_t h = 0; h < height_; ++h)
        for (std::size_t w = 0; w < width_; ++w)
          for (std::size_t ch = 0; ch < 3; ++ch) {
            const double v = base[ch] + grad_r[ch] * (static_cast<double>(h) * inv_h - 0.5) +
                             grad_c[ch] * (static_cast<double>(w) * inv_w - 0.5) +
                             drift[ch] * static_cast<double>(t);
            clip.at(t, h, w, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
      for (const auto& b : boxes) {
        const double r0 = b.r + b.vr * static_cast<double>(t);
        const double c0 = b.c + b.vc * static_cast<double>(t);
        const auto h0 = static_cast<std::int64_t>(std::floor(r0));
        const auto w0 = static_cast<std::int64_t>(std::floor(c0));
        const auto h1 = static_cast<std::int64_t>(std::floor(r0 + b.h));
        const auto w1 = static_cast<std::int64_t>(std::floor(c0 + b.w));
        for (std::int64_t h = std::max<std::int64_t>(h0, 0);
             h < std::min<std::int64_t>(h1, static_cast<std::int64_t>(height_)); ++h)
          for (std::int64_t w = std::max<std::int64_t>(w0, 0);
               w < std::min<std::int64_t>(w1, static_cast<std::int64_t>(width_)); ++w)
            for (std::size_t ch = 0; ch < 3; ++ch)
              clip.at(static_cast<std::size_t>(t), static_cast<std::size_t>(h),
                      static_cast<std::size_t>(w), ch) = b.color[ch];
      }
    }
    return clip;
  }

 private:
  std::size_t count_, frames_, height_, width_;
  std::uint64_t seed_;
};

/// Procedural sprites: soft-edged superellipses with a two-color gradient.
inline std::vector<SegmentedObject> procedural_objects(std::size_t count, std::uint64_t seed) {
  std::vector<SegmentedObject> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "procedural-%04zu", i);
    Rng rng(stream_seed(seed, name));
    const auto rows = static_cast<std::size_t>(rng.uniform_int(32, 128));
    const auto cols = static_cast<std::size_t>(rng.uniform_int(32, 128));
    const double exponent = rng.uniform(1.0, 4.0);
    double c0[3], c1[3];
    for (int ch = 0; ch < 3; ++ch) {
      c0[ch] = rng.uniform01();
      c1[ch] = rng.uniform01();
    }
    SegmentedObject obj{RgbaImage::transparent(rows, cols), name};
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double y = (static_cast<double>(r) + 0.5) / static_cast<double>(rows) * 2.0 - 1.0;
        const double x = (static_cast<double>(c) + 0.5) / static_cast<double>(cols) * 2.0 - 1.0;
        const double d = std::pow(std::abs(x), exponent) + std::pow(std::abs(y), exponent);
        const double alpha = std::clamp((1.0 - d) * 8.0, 0.0, 1.0);
        const double mix = (x + 1.0) / 2.0;
        for (std::size_t ch = 0; ch < 3; ++ch)
          obj.rgba.at(r, c, ch) = static_cast<float>(c0[ch] * (1.0 - mix) + c1[ch] * mix);
        obj.rgba.at(r, c, 3) = static_cast<float>(alpha);
      }
    out.push_back(std::move(obj));
  }
  return out;
}

/// Teacher for feature targets; null when the config asks for pixel targets.
inline std::unique_ptr<TeacherFeatureProvider> make_teacher(const PipelineConfig& cfg) {
  if (cfg.target == TargetKind::kPixels) return nullptr;
  if (cfg.teacher.kind == "file") return file_teacher(cfg.teacher.index);
  return mock_teacher(cfg.teacher.seed, cfg.teacher.dim);
}

// ---------------------------------------------------------------------------
// Sample construction
// ---------------------------------------------------------------------------

/// Everything needed to build one sample besides the clip.
struct PipelineContext {
  const PipelineConfig& config;
  std::span<const SegmentedObject> objects;
  const TeacherFeatureProvider* teacher{nullptr};  // required for feature targets
};

/// Intermediate products of one sample, kept for previews and audits.
struct SampleBuild {
  TrainingSample sample;
  Clip clip;  // V (original variant) or V' (augmented variant)
  FootprintMask footprint;
  MaskSet mask;
  std::vector<MotionPlan> plans;
};

/// Draws `count` object placements along smoothed random trajectories.
inline std::vector<PlacedObject> draw_motions(const PipelineConfig& cfg,
                                              std::span<const SegmentedObject> library, Rng& rng) {
  const auto& g = cfg.geometry;
  std::vector<PlacedObject> placed;
  if (cfg.objects.count == 0) return placed;
  if (library.empty()) throw ConfigError("object library is empty");
  placed.reserve(cfg.objects.count);
  for (std::size_t k = 0; k < cfg.objects.count; ++k) {
    const SegmentedObject& obj = library[static_cast<std::size_t>(rng.below(library.size()))];
    const auto side = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(cfg.objects.size_min), static_cast<std::int64_t>(cfg.objects.size_max)));
    TrajectoryConfig tc;
    tc.frame_count = g.frames();
    tc.frame_height = static_cast<double>(g.height());
    tc.frame_width = static_cast<double>(g.width());
    tc.raw_point_count = cfg.objects.raw_points_per_frame * g.frames();
    tc.smoothing = cfg.objects.smoothing;
    tc.seed = rng.next_u64();
    Rng motion(tc.seed);
    MotionPlan plan;
    plan.trajectory = generate_trajectory(tc, motion);
    plan.transforms = sample_keyframe_transforms(motion, cfg.objects.angle, cfg.objects.scale, g.frames());
    plan.base_rows = side;
    plan.base_cols = side;
    plan.object_ref = obj.object_id;
    placed.push_back({std::move(plan), resize_object(obj, side, side)});
  }
  return placed;
}

/// Builds one training sample. Pure given (config, clip, key): the per-sample
/// seed is derived from the global seed, video id, sample index and epoch.
inline SampleBuild build_sample_detailed(const Clip& source, const PipelineContext& ctx,
                                         const SampleKey& key) {
  const PipelineConfig& cfg = ctx.config;
  const TokenGeometry& g = cfg.geometry;
  if (cfg.background == BackgroundKind::kNaturalClip && !g.matches(source))
    throw ArgumentError("build_sample: clip '" + source.source_id + "' does not match geometry");

  const std::uint64_t seed = derive_seed(cfg.seed, source.source_id, key.sample_index, key.epoch);

  Rng bg_rng(stream_seed(seed, "background"));
  const Clip* bg_source = background_needs_source(cfg.background) ? &source : nullptr;
  Clip base = make_background(cfg.background, bg_source, g.frames(), g.height(), g.width(), bg_rng);
  base.source_id = source.source_id;

  SampleBuild out;
  const bool augmented = key.variant == Variant::kAugmented;
  if (augmented && cfg.objects.count > 0) {
    Rng motion_rng(stream_seed(seed, "motion"));
    const auto placed = draw_motions(cfg, ctx.objects, motion_rng);
    auto composed = composite_many(base, placed);
    out.clip = std::move(composed.clip);
    out.footprint = std::move(composed.footprint);
    for (const auto& p : placed) {
      out.plans.push_back(p.plan);
      out.sample.object_ids.push_back(p.object.object_id);
    }
    out.clip.source_id = source.source_id + "@" + key.id();
  } else {
    out.clip = std::move(base);
    out.footprint = FootprintMask::empty(g.frames(), g.height(), g.width());
  }

  Rng mask_rng(stream_seed(seed, "mask"));
  const bool trajectory = augmented && cfg.mask.use_trajectory;
  if (trajectory) {
    const auto object_tokens = object_token_set(out.footprint, g);
    out.mask = trajectory_mask(g, cfg.mask.ratio, object_tokens, mask_rng);
  } else {
    out.mask = tube_mask(g, cfg.mask.ratio, mask_rng);
  }

  const VectorTable tokens = tokenize(out.clip, g);
  auto applied = mask_apply(tokens, out.mask);

  TrainingSample& s = out.sample;
  s.key = key;
  s.video_id = source.source_id;
  s.geometry = g;
  s.target_kind = cfg.target;
  s.mask_mode = trajectory ? MaskMode::kTrajectory : MaskMode::kTube;
  s.background = std::string(to_string(cfg.background));
  s.seed = seed;
  s.unmasked = std::move(applied.unmasked);
  s.masked = std::move(applied.masked);
  for (std::uint32_t i : s.masked)
    if (out.mask.provenance[i] == Provenance::kTrajectory) s.trajectory_masked.push_back(i);

  if (cfg.target == TargetKind::kPixels) {
    s.targets = gather_rows(tokens, s.masked);
  } else {
    if (ctx.teacher == nullptr) throw ConfigError("feature targets need a teacher provider");
    const FeatureTargets ft = align_features(ctx.teacher->features(out.clip, g), g);
    s.targets = gather_rows(ft.table, s.masked);
  }
  return out;
}

inline TrainingSample build_sample(const Clip& source, const PipelineContext& ctx, const SampleKey& key) {
  return build_sample_detailed(source, ctx, key).sample;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// All sample keys in shard order. Mixed epochs emit the original and the
/// augmented variant of the same (video, sample) adjacently.
inline std::vector<SampleKey> plan_samples(const PipelineConfig& cfg, std::size_t videos) {
  std::vector<SampleKey> keys;
  for (std::uint64_t e = 0; e < cfg.schedule.epochs; ++e) {
    const Emission em = schedule_variant(cfg.schedule.kind, e, cfg.schedule.first_stage);
    for (std::uint64_t v = 0; v < videos; ++v)
      for (std::uint64_t s = 0; s < cfg.samples_per_video; ++s) {
        if (em != Emission::kAugmentedOnly) keys.push_back({e, v, s, Variant::kOriginal});
        if (em != Emission::kOriginalOnly) keys.push_back({e, v, s, Variant::kAugmented});
      }
  }
  return keys;
}

struct GenerationStats {
  std::size_t augmented{0};
  std::size_t original{0};
  std::size_t videos{0};
  std::uint64_t effective_epochs{0};

  nlohmann::json to_json() const {
    return {{"augmented", augmented},
            {"original", original},
            {"videos", videos},
            {"effective_epochs", effective_epochs}};
  }
};

/// Runs fn(i) for i in [0, n) on `workers` threads. Rethrows the first error.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Generates every planned sample and writes shards. Samples are produced in
/// batches of one shard; order is fixed by the plan, never by worker timing.
inline ShardManifest generate(const PipelineConfig& cfg, const ClipSource& clips,
                              std::span<const SegmentedObject> objects,
                              const TeacherFeatureProvider* teacher,
                              const std::filesystem::path& out_dir, std::size_t workers,
                              const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  cfg.validate();
  const auto keys = plan_samples(cfg, clips.size());
  PipelineContext ctx{cfg, objects, teacher};

  std::vector<std::string> ids(clips.size());
  for (std::size_t v = 0; v < clips.size(); ++v) ids[v] = clips.id(v);

  GenerationStats stats;
  stats.videos = clips.size();
  stats.effective_epochs = effective_epochs(cfg.schedule.epochs, cfg.samples_per_video);

  ShardWriter writer(out_dir, cfg.shard_size);
  std::vector<TrainingSample> batch;
  for (std::size_t begin = 0; begin < keys.size(); begin += cfg.shard_size) {
    const std::size_t end = std::min(keys.size(), begin + cfg.shard_size);
    batch.assign(end - begin, TrainingSample{});
    parallel_for(end - begin, workers, [&](std::size_t i) {
      const SampleKey& key = keys[begin + i];
      const Clip clip = clips.load(key.video_index);
      TrainingSample s = build_sample(clip, ctx, key);
      if (cfg.schedule.kind == Schedule::kMixed) {
        SampleKey partner = key;
        partner.variant = key.variant == Variant::kOriginal ? Variant::kAugmented : Variant::kOriginal;
        s.pair_id = partner.id();
      }
      batch[i] = std::move(s);
    });
    for (const auto& s : batch) {
      (s.key.variant == Variant::kAugmented ? stats.augmented : stats.original) += 1;
      writer.add(s);
    }
    if (progress) progress(end, keys.size());
  }
  return writer.finish(cfg.to_json(), stats.to_json());
}

}  // namespace synmo
