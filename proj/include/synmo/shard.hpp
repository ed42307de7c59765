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
#include <compare>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "synmo/core.hpp"
#include "synmo/hash.hpp"
#include "synmo/targets.hpp"
#include "synmo/tokenizer.hpp"

namespace synmo {

class ChecksumError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

class VersionError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

enum class Variant : std::uint8_t { kOriginal = 0, kAugmented = 1 };
enum class TargetKind : std::uint8_t { kPixels, kFeatures };
enum class MaskMode : std::uint8_t { kTube, kTrajectory };

inline std::string_view to_string(Variant v) {
  return v == Variant::kOriginal ? "original" : "augmented";
}
inline std::string_view to_string(TargetKind k) {
  return k == TargetKind::kPixels ? "pixels" : "features";
}
inline std::string_view to_string(MaskMode m) { return m == MaskMode::kTube ? "tube" : "trajectory"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "original") return Variant::kOriginal;
  if (s == "augmented") return Variant::kAugmented;
  throw IntegrityError("unknown variant '" + std::string(s) + "'");
}
inline TargetKind parse_target_kind(std::string_view s) {
  if (s == "pixels") return TargetKind::kPixels;
  if (s == "features") return TargetKind::kFeatures;
  throw ConfigError("unknown target kind '" + std::string(s) + "'");
}
inline MaskMode parse_mask_mode(std::string_view s) {
  if (s == "tube") return MaskMode::kTube;
  if (s == "trajectory") return MaskMode::kTrajectory;
  throw IntegrityError("unknown mask mode '" + std::string(s) + "'");
}

/// Identity and sort key of a sample; shards are ordered by this key.
struct SampleKey {
  std::uint64_t epoch{0};
  std::uint64_t video_index{0};
  std::uint64_t sample_index{0};
  Variant variant{Variant::kAugmented};

  auto operator<=>(const SampleKey&) const = default;

  std::string id() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "e%06llu-v%08llu-s%03llu-%s",
                  static_cast<unsigned long long>(epoch), static_cast<unsigned long long>(video_index),
                  static_cast<unsigned long long>(sample_index),
                  variant == Variant::kOriginal ? "orig" : "aug");
    return buf;
  }
};

struct TrainingSample {
  SampleKey key;
  std::string video_id;
  TokenGeometry geometry;
  TargetKind target_kind{TargetKind::kFeatures};
  MaskMode mask_mode{MaskMode::kTube};
  std::string background;
  std::vector<std::string> object_ids;
  std::uint64_t seed{0};
  std::string pair_id;  // partner sample in a mixed schedule, empty otherwise

  VectorTable unmasked;                           // |unmasked| x block_size, ascending token order
  std::vector<std::uint32_t> masked;              // ascending
  std::vector<std::uint32_t> trajectory_masked;   // ascending subset of `masked`
  VectorTable targets;                            // |masked| x target dim, aligned with `masked`

  std::string id() const { return key.id(); }

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

// ---------------------------------------------------------------------------
// Record layout (little-endian):
//   "SMLS" | u16 version | u32 header_len | header JSON
//   | f32 unmasked[|unmasked| * block] | u32 masked[|masked|]
//   | f32 targets[|masked| * dim] | u64 XXH64 of all preceding record bytes
// ---------------------------------------------------------------------------
inline constexpr char kShardMagic[4] = {'S', 'M', 'L', 'S'};
inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kFlatteningOrder = "tau-row-col";

inline nlohmann::json geometry_to_json(const TokenGeometry& g) {
  return {{"frames", g.frames()},
          {"height", g.height()},
          {"width", g.width()},
          {"temporal_patch", g.temporal_patch()},
          {"spatial_patch", g.spatial_patch()}};
}

inline TokenGeometry geometry_from_json(const nlohmann::json& j) {
  return TokenGeometry(j.at("frames").get<std::size_t>(), j.at("height").get<std::size_t>(),
                       j.at("width").get<std::size_t>(), j.at("temporal_patch").get<std::size_t>(),
                       j.at("spatial_patch").get<std::size_t>());
}

inline nlohmann::json record_header(const TrainingSample& s) {
  return {{"id", s.id()},
          {"video_id", s.video_id},
          {"epoch", s.key.epoch},
          {"video_index", s.key.video_index},
          {"sample_index", s.key.sample_index},
          {"variant", to_string(s.key.variant)},
          {"pair", s.pair_id},
          {"seed", s.seed},
          {"geometry", geometry_to_json(s.geometry)},
          {"token_count", s.geometry.token_count()},
          {"target", {{"kind", to_string(s.target_kind)}, {"dim", s.targets.dim}}},
          {"mask_mode", to_string(s.mask_mode)},
          {"background", s.background},
          {"objects", s.object_ids},
          {"counts",
           {{"unmasked", s.unmasked.rows},
            {"block", s.unmasked.dim},
            {"masked", s.masked.size()},
            {"trajectory", s.trajectory_masked.size()}}},
          {"trajectory_masked", s.trajectory_masked}};
}

inline void check_sample_shape(const TrainingSample& s) {
  const auto& g = s.geometry;
  if (s.unmasked.rows + s.masked.size() != g.token_count())
    throw ArgumentError("sample '" + s.id() + "': unmasked + masked != token count");
  if (s.unmasked.dim != g.block_size() || s.unmasked.values.size() != s.unmasked.rows * s.unmasked.dim)
    throw ArgumentError("sample '" + s.id() + "': unmasked block shape mismatch");
  if (s.targets.rows != s.masked.size() || s.targets.values.size() != s.targets.rows * s.targets.dim)
    throw ArgumentError("sample '" + s.id() + "': target count != masked count");
  if (!std::is_sorted(s.masked.begin(), s.masked.end()) ||
      std::adjacent_find(s.masked.begin(), s.masked.end()) != s.masked.end())
    throw ArgumentError("sample '" + s.id() + "': masked indices not strictly ascending");
  if (!s.masked.empty() && s.masked.back() >= g.token_count())
    throw ArgumentError("sample '" + s.id() + "': masked index out of range");
  if (!std::includes(s.masked.begin(), s.masked.end(), s.trajectory_masked.begin(),
                     s.trajectory_masked.end()))
    throw ArgumentError("sample '" + s.id() + "': trajectory tokens not a subset of masked");
}

inline std::string encode_record(const TrainingSample& s) {
  check_sample_shape(s);
  const std::string header = record_header(s).dump();
  std::string out;
  out.reserve(10 + header.size() + 4 * (s.unmasked.values.size() + s.masked.size() +
                                        s.targets.values.size()) + 8);
  out.append(kShardMagic, 4);
  le::put_u16(out, kShardVersion);
  le::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  le::put_f32_array(out, s.unmasked.values);
  for (std::uint32_t i : s.masked) le::put_u32(out, i);
  le::put_f32_array(out, s.targets.values);
  le::put_u64(out, xxh64(out));
  return out;
}

namespace detail {

inline nlohmann::json parse_record_header(std::string_view header, const std::string& where) {
  try {
    return nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(where + ": malformed header JSON (" + e.what() + ")");
  }
}

/// Payload bytes that follow the header, derived from header counts.
inline std::size_t payload_bytes(const nlohmann::json& h) {
  const auto& c = h.at("counts");
  const std::size_t unmasked = c.at("unmasked").get<std::size_t>();
  const std::size_t block = c.at("block").get<std::size_t>();
  const std::size_t masked = c.at("masked").get<std::size_t>();
  const std::size_t dim = h.at("target").at("dim").get<std::size_t>();
  return 4 * (unmasked * block + masked + masked * dim);
}

}  // namespace detail

/// Decodes one complete record (checksum included). `where` names the record
/// in error messages.
inline TrainingSample decode_record(std::string_view bytes, const std::string& where = "record") {
  if (bytes.size() < 10) throw ChecksumError(where + ": truncated record prefix");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (!std::equal(kShardMagic, kShardMagic + 4, bytes.begin()))
    throw IntegrityError(where + ": bad record magic");
  const std::uint16_t version = le::get_u16(p + 4);
  if (version != kShardVersion)
    throw VersionError(where + ": record version " + std::to_string(version) +
                       " does not match supported version " + std::to_string(kShardVersion));
  const std::size_t header_len = le::get_u32(p + 6);
  if (bytes.size() < 10 + header_len + 8) throw ChecksumError(where + ": truncated record");
  const std::uint64_t stored = le::get_u64(p + bytes.size() - 8);
  if (xxh64(bytes.substr(0, bytes.size() - 8)) != stored)
    throw ChecksumError(where + ": checksum mismatch");

  nlohmann::json h = detail::parse_record_header(bytes.substr(10, header_len), where);
  TrainingSample s;
  try {
    s.key.epoch = h.at("epoch").get<std::uint64_t>();
    s.key.video_index = h.at("video_index").get<std::uint64_t>();
    s.key.sample_index = h.at("sample_index").get<std::uint64_t>();
    s.key.variant = parse_variant(h.at("variant").get<std::string>());
    s.video_id = h.at("video_id").get<std::string>();
    s.pair_id = h.at("pair").get<std::string>();
    s.seed = h.at("seed").get<std::uint64_t>();
    s.geometry = geometry_from_json(h.at("geometry"));
    s.target_kind = parse_target_kind(h.at("target").at("kind").get<std::string>());
    s.mask_mode = parse_mask_mode(h.at("mask_mode").get<std::string>());
    s.background = h.at("background").get<std::string>();
    s.object_ids = h.at("objects").get<std::vector<std::string>>();
    s.trajectory_masked = h.at("trajectory_masked").get<std::vector<std::uint32_t>>();
    const auto& c = h.at("counts");
    s.unmasked = VectorTable::zeros(c.at("unmasked").get<std::size_t>(), c.at("block").get<std::size_t>());
    s.masked.resize(c.at("masked").get<std::size_t>());
    s.targets = VectorTable::zeros(s.masked.size(), h.at("target").at("dim").get<std::size_t>());
    if (10 + header_len + detail::payload_bytes(h) + 8 != bytes.size())
      throw IntegrityError(where + ": record length does not match header counts");
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(where + ": incomplete header (" + e.what() + ")");
  } catch (const ArgumentError& e) {
    throw IntegrityError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError(where + ": " + e.what());
  }

  const unsigned char* q = p + 10 + header_len;
  le::get_f32_array(q, s.unmasked.values);
  q += 4 * s.unmasked.values.size();
  for (auto& m : s.masked) {
    m = le::get_u32(q);
    q += 4;
  }
  le::get_f32_array(q, s.targets.values);
  try {
    check_sample_shape(s);
  } catch (const ArgumentError& e) {
    throw IntegrityError(where + ": " + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------
struct ShardInfo {
  std::string file;
  std::size_t samples{0};
  std::uint64_t bytes{0};
  std::vector<std::uint64_t> offsets;
};

struct ShardManifest {
  std::vector<ShardInfo> shards;
  std::size_t total_samples{0};
  nlohmann::json config = nlohmann::json::object();
  std::string config_hash;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json shards_json = nlohmann::json::array();
    for (const auto& s : shards)
      shards_json.push_back(
          {{"file", s.file}, {"samples", s.samples}, {"bytes", s.bytes}, {"offsets", s.offsets}});
    return {{"manifest_version", kManifestVersion},
            {"format", "SMLS"},
            {"format_version", kShardVersion},
            {"flattening_order", kFlatteningOrder},
            {"total_samples", total_samples},
            {"config_hash", config_hash},
            {"config", config},
            {"extra", extra},
            {"shards", shards_json}};
  }

  static ShardManifest from_json(const nlohmann::json& j) {
    ShardManifest m;
    try {
      if (j.at("manifest_version").get<int>() != kManifestVersion)
        throw VersionError("manifest version mismatch");
      if (j.at("format_version").get<int>() != kShardVersion)
        throw VersionError("manifest declares unsupported shard format version");
      if (j.at("flattening_order").get<std::string>() != kFlatteningOrder)
        throw IntegrityError("manifest declares unknown flattening order");
      m.total_samples = j.at("total_samples").get<std::size_t>();
      m.config_hash = j.at("config_hash").get<std::string>();
      m.config = j.at("config");
      m.extra = j.value("extra", nlohmann::json::object());
      for (const auto& s : j.at("shards"))
        m.shards.push_back({s.at("file").get<std::string>(), s.at("samples").get<std::size_t>(),
                            s.at("bytes").get<std::uint64_t>(),
                            s.at("offsets").get<std::vector<std::uint64_t>>()});
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

inline std::string config_hash(const nlohmann::json& config) { return hex64(xxh64(config.dump())); }

inline constexpr std::string_view kManifestName = "manifest.json";

/// Streams samples into numbered shard files of at most `shard_size` records.
class ShardWriter {
 public:
  ShardWriter(std::filesystem::path dir, std::size_t shard_size)
      : dir_(std::move(dir)), shard_size_(shard_size) {
    if (shard_size_ == 0) throw ArgumentError("shard writer: shard_size must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void add(const TrainingSample& s) {
    if (!out_.is_open() || manifest_.shards.back().samples == shard_size_) open_next();
    const std::string rec = encode_record(s);
    auto& info = manifest_.shards.back();
    info.offsets.push_back(info.bytes);
    out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    if (!out_) throw IoError("write failed for shard '" + info.file + "'");
    info.bytes += rec.size();
    ++info.samples;
    ++manifest_.total_samples;
  }

  /// Closes the last shard and writes manifest.json.
  ShardManifest finish(const nlohmann::json& config, nlohmann::json extra = nlohmann::json::object()) {
    close_current();
    manifest_.config = config;
    manifest_.config_hash = config_hash(config);
    manifest_.extra = std::move(extra);
    write_file_bytes(dir_ / kManifestName, manifest_.to_json().dump(2) + "\n");
    return manifest_;
  }

 private:
  void open_next() {
    close_current();
    char name[32];
    std::snprintf(name, sizeof name, "shard-%05zu.smls", manifest_.shards.size());
    manifest_.shards.push_back({name, 0, 0, {}});
    out_.open(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot create shard '" + (dir_ / name).string() + "'");
  }

  void close_current() {
    if (!out_.is_open()) return;
    out_.close();
    if (!out_) throw IoError("closing shard failed");
  }

  std::filesystem::path dir_;
  std::size_t shard_size_;
  std::ofstream out_;
  ShardManifest manifest_;
};

/// Writes samples sorted by key (the order never depends on production order).
inline ShardManifest write_shards(std::vector<TrainingSample> samples, const std::filesystem::path& dir,
                                  std::size_t shard_size,
                                  const nlohmann::json& config = nlohmann::json::object()) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const TrainingSample& a, const TrainingSample& b) { return a.key < b.key; });
  ShardWriter writer(dir, shard_size);
  for (const auto& s : samples) writer.add(s);
  return writer.finish(config);
}

inline ShardManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / kManifestName : dir;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return ShardManifest::from_json(j);
}

/// Visits every record of one shard in order; record indices are 0-based
/// within the shard.
inline void for_each_record(const std::filesystem::path& shard_path, std::size_t expected,
                            const std::function<void(std::size_t, TrainingSample&&)>& fn) {
  std::ifstream in(shard_path, std::ios::binary);
  if (!in) throw IoError("cannot open shard '" + shard_path.string() + "'");
  const std::string name = shard_path.filename().string();
  std::error_code ec;
  const auto file_size = static_cast<std::size_t>(std::filesystem::file_size(shard_path, ec));
  if (ec) throw IoError("cannot stat shard '" + shard_path.string() + "': " + ec.message());
  std::size_t consumed = 0;
  std::string buf;
  std::size_t index = 0;
  for (;; ++index) {
    const std::string where = "shard '" + name + "' record " + std::to_string(index);
    buf.assign(10, '\0');
    in.read(buf.data(), 10);
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    if (got < 10) throw ChecksumError(where + ": truncated record prefix");
    if (!std::equal(kShardMagic, kShardMagic + 4, buf.begin()))
      throw IntegrityError(where + ": bad record magic");
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    if (le::get_u16(p + 4) != kShardVersion)
      throw VersionError(where + ": unsupported record version " + std::to_string(le::get_u16(p + 4)));
    const std::size_t header_len = le::get_u32(p + 6);
    if (10 + header_len > file_size - consumed) throw ChecksumError(where + ": truncated record header");
    buf.resize(10 + header_len);
    in.read(buf.data() + 10, static_cast<std::streamsize>(header_len));
    if (static_cast<std::size_t>(in.gcount()) != header_len)
      throw ChecksumError(where + ": truncated record header");
    std::size_t payload = 0;
    try {
      payload = detail::payload_bytes(detail::parse_record_header(
          std::string_view(buf).substr(10, header_len), where));
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError(where + ": incomplete header (" + e.what() + ")");
    }
    if (10 + header_len + payload + 8 > file_size - consumed)
      throw ChecksumError(where + ": truncated record, checksum unavailable");
    buf.resize(10 + header_len + payload + 8);
    in.read(buf.data() + 10 + header_len, static_cast<std::streamsize>(payload + 8));
    if (static_cast<std::size_t>(in.gcount()) != payload + 8)
      throw ChecksumError(where + ": truncated record, checksum unavailable");
    consumed += buf.size();
    fn(index, decode_record(buf, where));
  }
  if (index != expected)
    throw IntegrityError("shard '" + name + "' holds " + std::to_string(index) +
                         " records, manifest declares " + std::to_string(expected));
}

/// Visits every sample listed by a manifest, shard by shard.
inline void for_each_sample(const ShardManifest& m, const std::filesystem::path& dir,
                            const std::function<void(const ShardInfo&, TrainingSample&&)>& fn) {
  if (config_hash(m.config) != m.config_hash)
    throw IntegrityError("manifest config hash does not match its config");
  std::size_t total = 0;
  for (const auto& shard : m.shards) {
    for_each_record(dir / shard.file, shard.samples,
                    [&](std::size_t, TrainingSample&& s) { fn(shard, std::move(s)); });
    total += shard.samples;
  }
  if (total != m.total_samples) throw IntegrityError("manifest sample total does not match shards");
}

inline std::vector<TrainingSample> read_shards(const ShardManifest& m, const std::filesystem::path& dir) {
  std::vector<TrainingSample> out;
  out.reserve(m.total_samples);
  for_each_sample(m, dir, [&](const ShardInfo&, TrainingSample&& s) { out.push_back(std::move(s)); });
  return out;
}

inline std::vector<TrainingSample> read_shards(const std::filesystem::path& dir) {
  return read_shards(read_manifest(dir), dir);
}

}  // namespace synmo
