// Copyright 2026 The seedtrack Authors
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seedtrack/image.h"

namespace seedtrack {

namespace fs = std::filesystem;

/// Where a seed point came from.
enum class SeedOrigin { kCaptureCenter, kCaptureExplicit, kReviewClick };

/// A single positive (foreground) point prompt on one frame.
struct SeedPrompt {
  std::int64_t frame_index = 0;
  int x = 0;
  int y = 0;
  SeedOrigin origin = SeedOrigin::kCaptureExplicit;

  bool operator==(const SeedPrompt&) const = default;
};

enum class CaptureSource { kNetwork, kReplay, kSynthetic, kImport };

std::string_view to_string(SeedOrigin origin);
std::string_view to_string(CaptureSource source);
SeedOrigin parse_seed_origin(std::string_view text);
CaptureSource parse_capture_source(std::string_view text);

struct FrameRecord {
  std::int64_t index = 0;
  std::int64_t timestamp_us = 0;  // relative to session start
  RgbImage pv;
  std::optional<DepthImage> depth;             // millimeters
  std::optional<Pose> pose;                    // camera-to-world, row-major, meters
  std::optional<std::vector<std::uint8_t>> point_cloud;  // opaque
};

struct SessionManifest {
  std::string session_id;
  Resolution resolution;
  std::int64_t frame_count = 0;
  std::vector<SeedPrompt> seed_prompts;
  std::string created_at;  // ISO-8601 UTC
  CaptureSource capture_source = CaptureSource::kSynthetic;
  bool finalized = false;
};

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kTimestampsFile = "timestamps.txt";

/// `%06d.<ext>` naming shared by every per-frame file.
std::string frame_file_name(std::int64_t index, std::string_view ext);

class Session;

/// Write handle for a session being recorded. Exactly one writer owns a
/// session directory; appends are sequential.
class SessionWriter {
 public:
  /// Creates `store_root/session_id` with an unfinalized manifest.
  static SessionWriter create(const fs::path& store_root, const std::string& session_id,
                              Resolution resolution, CaptureSource source);

  SessionWriter(SessionWriter&&) noexcept = default;
  SessionWriter& operator=(SessionWriter&&) noexcept = default;
  SessionWriter(const SessionWriter&) = delete;
  SessionWriter& operator=(const SessionWriter&) = delete;

  void append_frame(const FrameRecord& frame);

  /// Attach a depth image or pose to an already appended frame.
  void attach_depth(std::int64_t index, const DepthImage& depth);
  void attach_pose(std::int64_t index, const Pose& pose);

  void add_seed(const SeedPrompt& seed);

  /// Writes the final manifest and seals the directory.
  Session finalize();

  /// Removes the partially written directory.
  void abort();

  const fs::path& path() const { return dir_; }
  const SessionManifest& manifest() const { return manifest_; }
  std::int64_t frame_count() const { return manifest_.frame_count; }
  Resolution resolution() const { return manifest_.resolution; }
  bool finalized() const { return manifest_.finalized; }

 private:
  SessionWriter(fs::path dir, SessionManifest manifest)
      : dir_(std::move(dir)), manifest_(std::move(manifest)) {}
  void ensure_open() const;

  fs::path dir_;
  SessionManifest manifest_;
  std::int64_t last_timestamp_us_ = 0;
};

/// Read-only view of a finalized session. Frame content is read lazily.
class Session {
 public:
  /// Re-validates manifest/file consistency; throws CorruptSession.
  static Session load(const fs::path& dir);

  const SessionManifest& manifest() const { return manifest_; }
  const fs::path& path() const { return dir_; }
  const std::string& id() const { return manifest_.session_id; }
  Resolution resolution() const { return manifest_.resolution; }
  std::int64_t frame_count() const { return manifest_.frame_count; }
  const std::vector<SeedPrompt>& seeds() const { return manifest_.seed_prompts; }

  RgbImage pv(std::int64_t index) const;
  std::optional<DepthImage> depth(std::int64_t index) const;
  std::optional<Pose> pose(std::int64_t index) const;
  std::optional<std::vector<std::uint8_t>> point_cloud(std::int64_t index) const;
  std::int64_t timestamp_us(std::int64_t index) const { return timestamps_us_.at(index); }
  FrameRecord frame(std::int64_t index) const;

 private:
  Session(fs::path dir, SessionManifest manifest, std::vector<std::int64_t> ts)
      : dir_(std::move(dir)), manifest_(std::move(manifest)), timestamps_us_(std::move(ts)) {}
  void check_index(std::int64_t index) const;

  fs::path dir_;
  SessionManifest manifest_;
  std::vector<std::int64_t> timestamps_us_;

  friend class SessionWriter;
};

/// Lists every finalized session directly under `store_root`.
std::vector<SessionManifest> list_sessions(const fs::path& store_root);

// ---------------------------------------------------------------------------
// Annotation sets

enum class FrameFlag { kTracked, kEmpty, kReseeded };
std::string_view to_string(FrameFlag flag);
FrameFlag parse_frame_flag(std::string_view text);

struct BackendInfo {
  std::string segmenter;
  std::string tracker;
  std::string config_digest;

  bool operator==(const BackendInfo&) const = default;
};

/// Per-frame masks of the single tracked object.
struct AnnotationSet {
  static constexpr int kObjectId = 1;

  std::string session_id;
  int object_id = kObjectId;
  std::vector<Mask> masks;
  std::vector<FrameFlag> flags;
  BackendInfo backend;
  std::vector<SeedPrompt> seed_history;
  std::string parent_run;  // set for runs produced by reseeding

  std::int64_t frame_count() const { return static_cast<std::int64_t>(masks.size()); }
  bool operator==(const AnnotationSet&) const = default;
};

inline constexpr std::string_view kRunManifestFile = "run.json";
inline constexpr std::string_view kAnnotationDir = "ann";

/// Writes `%06d.png` masks plus the run manifest into `run_dir`.
void save_annotations(const fs::path& run_dir, const AnnotationSet& annotations);
AnnotationSet load_annotations(const fs::path& run_dir);
/// Checks the annotation-set invariants against a session.
void validate_annotations(const AnnotationSet& annotations, const Session& session);

/// Next free `run-NNNN` id under `session_dir/ann`.
std::string next_run_id(const fs::path& session_dir);
fs::path run_path(const fs::path& session_dir, const std::string& run_id);

/// Plain mask directories (`%06d.png`), used for ground truth and rater masks.
void save_mask_sequence(const fs::path& dir, const std::map<std::int64_t, Mask>& masks);
std::map<std::int64_t, Mask> load_mask_sequence(const fs::path& dir);

}  // namespace seedtrack
