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
#include <optional>
#include <string>
#include <vector>

#include "seedtrack/image.h"
#include "seedtrack/session_store.h"

namespace seedtrack::synth {

enum class Shape { kDisc, kRectangle, kTwoBlob };

struct SceneObject {
  Shape shape = Shape::kDisc;
  Rgb color{};
  int start_x = 0;  // center at appear_frame
  int start_y = 0;
  double velocity_x = 0.0;  // pixels per frame
  double velocity_y = 0.0;
  int radius = 10;       // disc and primary blob
  int half_width = 10;   // rectangle: |dx| <= half_width
  int half_height = 10;
  // two-blob: a second disc of its own color, drawn beneath the primary
  Rgb secondary_color{};
  int secondary_radius = 10;
  int secondary_offset_x = 0;
  int secondary_offset_y = 0;
  std::int64_t appear_frame = 0;
  std::optional<std::int64_t> disappear_frame;  // first frame without the object
};

struct SceneSpec {
  std::string session_id = "synthetic";
  Resolution resolution{640, 360};
  std::int64_t frame_count = 90;
  Rgb background{30, 200, 30};
  std::vector<SceneObject> objects;
  int noise_amplitude = 0;  // uniform, per pixel and channel
  std::uint64_t random_seed = 0;
  double fps = 30.0;        // drives timestamps
  bool with_depth = false;
  bool with_pose = false;
};

/// Colors must differ from the background by more than this (max channel
/// difference) when the scene has no noise: three times the widest default
/// flood tolerance.
inline constexpr int kMinSeparation = 3 * 48;

struct RenderedScene {
  std::vector<FrameRecord> frames;
  /// object_masks[i][k]: visible pixels of object i on frame k. Later objects
  /// are drawn over earlier ones, so masks are pairwise disjoint.
  std::vector<std::vector<Mask>> object_masks;
  SeedPrompt seed;
};

/// Throws SpecError on invalid specs.
void validate(const SceneSpec& spec);

/// Pure rendering; deterministic in (spec, spec.random_seed).
RenderedScene render(const SceneSpec& spec);

struct SyntheticScene {
  Session session;
  std::vector<std::vector<Mask>> ground_truth;
};

/// Renders and stores the scene under `store_root/spec.session_id`, with
/// ground truth of object i in `<session>/gt/obj<i>/%06d.png`.
SyntheticScene generate(const SceneSpec& spec, const std::filesystem::path& store_root);

std::filesystem::path ground_truth_dir(const std::filesystem::path& session_dir, std::size_t object);

/// Structured-text (JSON) scene description, as consumed by `synth --spec`.
SceneSpec parse_scene_spec(const std::string& text);
std::string dump_scene_spec(const SceneSpec& spec);

}  // namespace seedtrack::synth
