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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seedtrack/segmentation.h"
#include "seedtrack/session_store.h"

namespace seedtrack {

struct LabelRunConfig {
  BackendConfig backends;
  /// Defaults to the first seed's frame; must equal it when given.
  std::optional<std::int64_t> start_frame;
  /// Last frame to propagate to (inclusive); later frames are left empty.
  std::optional<std::int64_t> stop_frame;
};

/// Called after each frame with (frames_done, frame_count).
using ProgressFn = std::function<void(std::int64_t, std::int64_t)>;

struct LabelRun {
  AnnotationSet annotations;
  double wall_seconds = 0.0;
};

/// Seed -> three proposals -> best proposal initializes the tracker -> forward
/// propagation over every later frame. Frames before the seed frame get empty
/// masks. Throws InitializationFailure when the best proposal is empty.
LabelRun label_session(const Session& session, const LabelRunConfig& config,
                       const ProgressFn& progress = {});

/// Corrective re-seeding on one frame k: the mask at k becomes the union of the
/// existing mask and the best proposal of every extra seed, the tracker restarts
/// from that union and frames after k are re-propagated. Frames before k are
/// untouched. Throws ReseedFailure when every extra seed yields an empty mask.
LabelRun reseed(const Session& session, const AnnotationSet& annotations,
                const std::vector<SeedPrompt>& extra_seeds, const LabelRunConfig& config,
                const ProgressFn& progress = {});

struct RunSummary {
  std::int64_t frames = 0;
  std::int64_t tracked = 0;
  std::int64_t empty = 0;
  std::int64_t reseeded = 0;
  double wall_seconds = 0.0;
  double fps = 0.0;  // frames / wall_seconds

  bool operator==(const RunSummary&) const = default;
};

RunSummary run_report(const LabelRun& run);

/// Stable hex digest of the backend parameters and frame range.
std::string config_digest(const PromptableSegmenter& segmenter, const Tracker& tracker,
                          const LabelRunConfig& config);

/// The wall-clock summary lives next to, not inside, the run directory so that
/// identical runs produce identical directories.
std::filesystem::path summary_path(const std::filesystem::path& run_dir);
void save_run(const std::filesystem::path& run_dir, const LabelRun& run);
RunSummary load_run_summary(const std::filesystem::path& run_dir);

}  // namespace seedtrack
