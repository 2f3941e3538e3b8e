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

#include <any>
#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "seedtrack/image.h"
#include "seedtrack/session_store.h"

namespace seedtrack {

/// One candidate segmentation for a point prompt, with the backend's own
/// quality rating in [0,1]. An empty mask always carries score 0.
struct MaskProposal {
  Mask mask;
  double score = 0.0;
};

inline constexpr std::size_t kProposalsPerPrompt = 3;

/// Produces exactly three proposals for a single foreground point.
class PromptableSegmenter {
 public:
  virtual ~PromptableSegmenter() = default;
  virtual std::string name() const = 0;
  /// Canonical parameter string; feeds the run's configuration digest.
  virtual std::string describe() const = 0;
  virtual std::vector<MaskProposal> propose(const RgbImage& image, const SeedPrompt& prompt) = 0;
};

/// Highest score wins; ties go to the lowest index. Throws NoProposal on an
/// empty list. The winner may be empty: callers decide whether that is fatal.
std::size_t select_best_index(std::span<const MaskProposal> proposals);
const MaskProposal& select_best(std::span<const MaskProposal> proposals);

struct TrackerState {
  Mask last_mask;              // last nonempty object mask
  std::int64_t frame_cursor = 0;
  std::any backend_state;
};

/// Single-object mask propagation. Loss is an empty mask, never an error.
class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual std::string name() const = 0;
  virtual std::string describe() const = 0;
  /// Throws InitializationFailure for an empty mask, ResolutionMismatch when
  /// image and mask disagree.
  virtual TrackerState initialize(const RgbImage& image, const Mask& mask,
                                  std::int64_t frame_index) = 0;
  virtual Mask propagate(TrackerState& state, const RgbImage& image) = 0;
};

// ---------------------------------------------------------------------------
// Reference backends

/// Seeded flood fill in RGB space (4-connected). A pixel joins when every
/// channel is within the tolerance of the seed pixel's color, so masks grow
/// monotonically with the tolerance.
class ChromaFloodSegmenter final : public PromptableSegmenter {
 public:
  static constexpr std::array<int, kProposalsPerPrompt> kDefaultTolerances{8, 24, 48};
  /// Score of the widest proposal, which has no wider neighbour to compare to.
  static constexpr double kWidestScore = 0.99;

  explicit ChromaFloodSegmenter(std::array<int, kProposalsPerPrompt> tolerances = kDefaultTolerances);

  std::string name() const override { return "chroma_flood"; }
  std::string describe() const override;
  std::vector<MaskProposal> propose(const RgbImage& image, const SeedPrompt& prompt) override;

  const std::array<int, kProposalsPerPrompt>& tolerances() const { return tolerances_; }

 private:
  std::array<int, kProposalsPerPrompt> tolerances_;
};

/// Flood fill from (x, y) with per-channel tolerance against the seed color.
Mask chroma_flood_fill(const RgbImage& image, int x, int y, int tolerance);

double iou(const Mask& a, const Mask& b);

/// Color-statistics tracker: thresholds each frame at mean ± k·stddev of the
/// previous object pixels, then keeps the connected component that overlaps
/// the previous mask best (by Dice). Below the loss threshold the object is
/// reported lost.
class OverlapTracker final : public Tracker {
 public:
  struct Options {
    double sigma_multiplier = 2.0;
    double loss_threshold = 0.1;
  };

  OverlapTracker() : OverlapTracker(Options{}) {}
  explicit OverlapTracker(Options options) : options_(options) {}

  std::string name() const override { return "overlap"; }
  std::string describe() const override;
  TrackerState initialize(const RgbImage& image, const Mask& mask,
                          std::int64_t frame_index) override;
  Mask propagate(TrackerState& state, const RgbImage& image) override;

 private:
  Options options_;
};

/// 4-connected component labels (0 = unset, components numbered from 1 in
/// raster order of their first pixel). Returns the number of components.
int label_components(const Mask& mask, std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Factory

struct BackendConfig {
  std::string segmenter = "chroma_flood";
  std::string tracker = "overlap";
  std::array<int, kProposalsPerPrompt> flood_tolerances = ChromaFloodSegmenter::kDefaultTolerances;
  OverlapTracker::Options tracker_options{};
  /// Command line of an external adapter process; required when either
  /// backend is "external".
  std::string adapter_command;
  double adapter_timeout_s = 120.0;
};

struct BackendPair {
  std::unique_ptr<PromptableSegmenter> segmenter;
  std::unique_ptr<Tracker> tracker;
};

/// Throws UnknownBackend for unrecognised names.
BackendPair make_backends(const BackendConfig& config);
/// Name check only; starts no adapter process.
void check_backend_config(const BackendConfig& config);

}  // namespace seedtrack
