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

// synmo: generate, audit and preview motion-infused masked video samples.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage error,
// 3 I/O error, 4 data-integrity error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "synmo/io.hpp"
#include "synmo/pipeline.hpp"
#include "synmo/shard.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kIntegrity = 4 };

int g_verbosity = 1;  // 0 quiet, 1 info, 2 debug

void log_event(int level, const std::string& event, json fields = json::object()) {
  if (level > g_verbosity) return;
  fields["event"] = event;
  fields["level"] = level == 0 ? "error" : level == 1 ? "info" : "debug";
  std::cerr << fields.dump() << '\n';
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shard_size;
  std::optional<std::size_t> workers;
  std::string out;
};

void add_config_options(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "JSON config file");
  app->add_option("--set", o.overrides, "Override a config value: dotted.key=value (repeatable)");
  app->add_option("--seed", o.seed, "Global seed (overrides config)");
  app->add_option("--shard-size", o.shard_size, "Samples per shard file (overrides config)");
  app->add_option("--workers", o.workers, "Worker threads (default: $SYNMO_WORKERS or hardware)");
}

synmo::PipelineConfig load_config(const CommonOptions& o) {
  json user = json::object();
  if (!o.config_path.empty()) {
    const std::string text = synmo::read_file_bytes(o.config_path);
    user = json::parse(text, nullptr, false);
    if (user.is_discarded()) throw synmo::ConfigError("config '" + o.config_path + "' is not valid JSON");
  }
  for (const auto& s : o.overrides) synmo::apply_override(user, s);
  if (o.seed) user["seed"] = *o.seed;
  if (o.shard_size) user["shard_size"] = *o.shard_size;
  return synmo::PipelineConfig::from_json(user);
}

std::size_t worker_count(const CommonOptions& o) {
  if (o.workers) return std::max<std::size_t>(1, *o.workers);
  if (const char* env = std::getenv("SYNMO_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw synmo::ConfigError("SYNMO_WORKERS must be a positive integer");
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
int run_gen(const CommonOptions& o) {
  if (o.out.empty()) throw synmo::ConfigError("gen: --out is required");
  const auto cfg = load_config(o);
  const std::size_t workers = worker_count(o);
  const auto inputs = synmo::open_inputs(cfg);
  log_event(1, "gen.start", {{"out", o.out}, {"workers", workers}, {"videos", inputs.clips->size()},
                             {"config_hash", synmo::config_hash(cfg.to_json())}});
  const auto t0 = std::chrono::steady_clock::now();
  const auto manifest = synmo::generate(
      cfg, *inputs.clips, inputs.objects, inputs.teacher.get(), o.out, workers,
      [](std::size_t done, std::size_t total) {
        log_event(2, "gen.progress", {{"done", done}, {"total", total}});
      });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log_event(1, "gen.done", {{"samples", manifest.total_samples},
                            {"shards", manifest.shards.size()},
                            {"seconds", secs},
                            {"extra", manifest.extra}});
  return kOk;
}

// ---------------------------------------------------------------------------
struct SelectOptions {
  std::uint64_t epoch{0};
  std::uint64_t video{0};
  std::uint64_t sample{0};
  std::string variant{"augmented"};
  std::size_t limit{0};
};

synmo::SampleBuild build_one(const synmo::PipelineConfig& cfg, const synmo::PipelineInputs& in,
                             const synmo::SampleKey& key) {
  if (key.video_index >= in.clips->size()) throw synmo::ConfigError("video index out of range");
  const synmo::Clip clip = in.clips->load(key.video_index);
  synmo::PipelineContext ctx{cfg, in.objects, in.teacher.get()};
  return synmo::build_sample_detailed(clip, ctx, key);
}

/// Masks only: targets are irrelevant, so pixel targets avoid teacher work.
synmo::PipelineConfig mask_only(synmo::PipelineConfig cfg) {
  cfg.target = synmo::TargetKind::kPixels;
  return cfg;
}

json mask_json(const synmo::SampleBuild& b) {
  return {{"id", b.sample.id()},
          {"video_id", b.sample.video_id},
          {"variant", synmo::to_string(b.sample.key.variant)},
          {"mask_mode", synmo::to_string(b.sample.mask_mode)},
          {"token_count", b.mask.token_count()},
          {"masked", b.sample.masked},
          {"trajectory_masked", b.sample.trajectory_masked},
          {"object_ids", b.sample.object_ids}};
}

int run_mask(const CommonOptions& o, const SelectOptions& sel) {
  const auto cfg = mask_only(load_config(o));
  const auto in = synmo::open_inputs(cfg);
  std::vector<synmo::SampleKey> keys;
  if (sel.limit > 0) {
    keys = synmo::plan_samples(cfg, in.clips->size());
    keys.resize(std::min(keys.size(), sel.limit));
  } else {
    keys.push_back({sel.epoch, sel.video, sel.sample, synmo::parse_variant(sel.variant)});
  }
  std::vector<json> lines(keys.size());
  synmo::parallel_for(keys.size(), worker_count(o),
                      [&](std::size_t i) { lines[i] = mask_json(build_one(cfg, in, keys[i])); });
  std::FILE* sink = stdout;
  if (!o.out.empty()) {
    sink = std::fopen(o.out.c_str(), "wb");
    if (sink == nullptr) throw synmo::IoError("cannot open '" + o.out + "' for writing");
  }
  for (const auto& l : lines) {
    const std::string s = l.dump() + "\n";
    std::fwrite(s.data(), 1, s.size(), sink);
  }
  if (sink != stdout && std::fclose(sink) != 0) throw synmo::IoError("write failed for '" + o.out + "'");
  log_event(1, "mask.done", {{"samples", lines.size()}});
  return kOk;
}

// ---------------------------------------------------------------------------
/// Masked-token count the sample's mask mode guarantees.
std::size_t expected_masked(const synmo::TrainingSample& s, double ratio) {
  const auto& g = s.geometry;
  if (s.mask_mode == synmo::MaskMode::kTrajectory)
    return synmo::round_half_up(ratio * static_cast<double>(g.token_count()));
  return synmo::tube_count(g, ratio) * g.slices();
}

int run_stats(const std::string& dir) {
  const auto manifest = synmo::read_manifest(dir);
  double ratio = 0.0;
  try {
    ratio = manifest.config.at("mask").at("ratio").get<double>();
  } catch (const json::exception&) {
    throw synmo::IntegrityError("manifest config lacks mask.ratio");
  }
  if (synmo::config_hash(manifest.config) != manifest.config_hash)
    throw synmo::IntegrityError("manifest config hash does not match its config");
  json shards = json::array();
  std::map<std::string, std::size_t> backgrounds, variants, modes;
  std::size_t total = 0, violations = 0, traj_total = 0, tube_total = 0;
  const fs::path root = fs::is_directory(dir) ? fs::path(dir) : fs::path(dir).parent_path();
  for (const auto& info : manifest.shards) {
    std::size_t n = 0, masked = 0, tokens = 0, traj = 0;
    double rmin = 1.0, rmax = 0.0;
    synmo::for_each_record(root / info.file, info.samples, [&](std::size_t, synmo::TrainingSample&& s) {
      const std::size_t N = s.geometry.token_count();
      const double r = static_cast<double>(s.masked.size()) / static_cast<double>(N);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      if (s.masked.size() != expected_masked(s, ratio)) ++violations;
      ++n;
      masked += s.masked.size();
      tokens += N;
      traj += s.trajectory_masked.size();
      ++backgrounds[s.background];
      ++variants[std::string(synmo::to_string(s.key.variant))];
      ++modes[std::string(synmo::to_string(s.mask_mode))];
    });
    total += n;
    traj_total += traj;
    tube_total += masked - traj;
    shards.push_back({{"file", info.file},
                      {"samples", n},
                      {"masked_ratio", tokens ? static_cast<double>(masked) / static_cast<double>(tokens) : 0.0},
                      {"masked_ratio_min", n ? rmin : 0.0},
                      {"masked_ratio_max", n ? rmax : 0.0},
                      {"masked_tokens", masked},
                      {"trajectory_tokens", traj},
                      {"tube_tokens", masked - traj}});
  }
  if (total != manifest.total_samples) throw synmo::IntegrityError("manifest total does not match shards");
  const json out = {{"total_samples", total},
                    {"config_hash", manifest.config_hash},
                    {"mask_ratio", ratio},
                    {"ratio_audit", {{"checked", total}, {"violations", violations}}},
                    {"provenance", {{"trajectory", traj_total}, {"tube", tube_total}}},
                    {"background", backgrounds},
                    {"variants", variants},
                    {"mask_modes", modes},
                    {"extra", manifest.extra},
                    {"shards", shards}};
  std::cout << out.dump(2) << '\n';
  return violations == 0 ? kOk : kIntegrity;
}

// ---------------------------------------------------------------------------
/// Frame with masked tokens shaded: tube tokens red, trajectory tokens blue.
synmo::PngImage overlay_image(const synmo::SampleBuild& b, std::size_t t) {
  const auto& g = b.sample.geometry;
  synmo::PngImage img = synmo::frame_image(b.clip, t);
  for (std::size_t h = 0; h < img.rows; ++h)
    for (std::size_t w = 0; w < img.cols; ++w) {
      const auto p = b.mask.provenance[synmo::token_of_pixel(t, h, w, g)];
      if (p == synmo::Provenance::kNone) continue;
      const bool edge = h % g.spatial_patch() == 0 || w % g.spatial_patch() == 0;
      const std::uint8_t tint[3] = {
          static_cast<std::uint8_t>(p == synmo::Provenance::kTube ? 255 : 0), 0,
          static_cast<std::uint8_t>(p == synmo::Provenance::kTrajectory ? 255 : 0)};
      std::uint8_t* px = img.data.data() + (h * img.cols + w) * 3;
      const double a = edge ? 0.8 : 0.5;
      for (int ch = 0; ch < 3; ++ch)
        px[ch] = static_cast<std::uint8_t>(std::lround((1.0 - a) * px[ch] + a * tint[ch]));
    }
  return img;
}

int run_preview(const CommonOptions& o, const SelectOptions& sel) {
  if (o.out.empty()) throw synmo::ConfigError("preview: --out is required");
  const auto cfg = mask_only(load_config(o));
  const auto in = synmo::open_inputs(cfg);
  const synmo::SampleKey key{sel.epoch, sel.video, sel.sample, synmo::parse_variant(sel.variant)};
  const auto b = build_one(cfg, in, key);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw synmo::IoError("cannot create '" + o.out + "': " + ec.message());
  json files = json::array();
  for (std::size_t t = 0; t < b.clip.frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame-%03zu.png", t);
    synmo::write_png(fs::path(o.out) / name, synmo::frame_image(b.clip, t));
    files.push_back(name);
    std::snprintf(name, sizeof name, "mask-%03zu.png", t);
    synmo::write_png(fs::path(o.out) / name, overlay_image(b, t));
    files.push_back(name);
  }
  json summary = mask_json(b);
  summary.erase("masked");
  summary.erase("trajectory_masked");
  summary["masked_count"] = b.sample.masked.size();
  summary["trajectory_count"] = b.sample.trajectory_masked.size();
  summary["footprint_pixels"] = b.footprint.count();
  summary["files"] = files;
  synmo::write_file_bytes(fs::path(o.out) / "preview.json", summary.dump(2) + "\n");
  log_event(1, "preview.done", {{"out", o.out}, {"files", files.size()}});
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"synmo: motion-infused masked video sample generator"};
  app.require_subcommand(1);
  app.fallthrough();
  int verbose = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "More log output (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Suppress log output");

  CommonOptions gen_o, mask_o, preview_o;
  SelectOptions mask_sel, preview_sel;
  std::string stats_dir;

  auto* gen = app.add_subcommand("gen", "Generate training shards");
  add_config_options(gen, gen_o);
  gen->add_option("--out", gen_o.out, "Output directory")->required();

  auto add_select = [](CLI::App* a, SelectOptions& s) {
    a->add_option("--epoch", s.epoch, "Epoch of the selected sample");
    a->add_option("--video", s.video, "Video index of the selected sample");
    a->add_option("--sample", s.sample, "Sample index within the video");
    a->add_option("--variant", s.variant, "augmented | original")->check(CLI::IsMember({"augmented", "original"}));
  };

  auto* mask = app.add_subcommand("mask", "Emit mask sets as JSON lines");
  add_config_options(mask, mask_o);
  add_select(mask, mask_sel);
  mask->add_option("--limit", mask_sel.limit, "Emit the first N planned samples instead of one");
  mask->add_option("--out", mask_o.out, "Output file (default stdout)");

  auto* stats = app.add_subcommand("stats", "Audit a shard directory and print JSON");
  stats->add_option("dir", stats_dir, "Shard directory or manifest.json")->required();

  auto* preview = app.add_subcommand("preview", "Write composited frames and mask overlays as PNG");
  add_config_options(preview, preview_o);
  add_select(preview, preview_sel);
  preview->add_option("--out", preview_o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  g_verbosity = quiet ? 0 : 1 + verbose;

  if (gen->parsed()) return run_gen(gen_o);
  if (mask->parsed()) return run_mask(mask_o, mask_sel);
  if (stats->parsed()) return run_stats(stats_dir);
  return run_preview(preview_o, preview_sel);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const synmo::ConfigError& e) {
    log_event(0, "error", {{"kind", "config"}, {"message", e.what()}});
    return kConfig;
  } catch (const synmo::ArgumentError& e) {
    log_event(0, "error", {{"kind", "argument"}, {"message", e.what()}});
    return kConfig;
  } catch (const synmo::IoError& e) {
    log_event(0, "error", {{"kind", "io"}, {"message", e.what()}});
    return kIo;
  } catch (const synmo::IntegrityError& e) {
    log_event(0, "error", {{"kind", "integrity"}, {"message", e.what()}});
    return kIntegrity;
  } catch (const std::exception& e) {
    log_event(0, "error", {{"kind", "internal"}, {"message", e.what()}});
    return kFailure;
  }
}
