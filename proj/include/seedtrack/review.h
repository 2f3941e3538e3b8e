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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "seedtrack/image.h"
#include "seedtrack/pipeline.h"

namespace seedtrack::review {

inline constexpr double kOverlayAlpha = 0.45;
inline constexpr Rgb kOverlayTint{0, 255, 0};

/// PV frame with object pixels blended towards the tint; an empty mask
/// returns the frame unchanged.
RgbImage render_overlay(const RgbImage& pv, const Mask& mask, double alpha = kOverlayAlpha,
                        Rgb tint = kOverlayTint);

enum class RunState { kQueued, kRunning, kDone, kFailed };
std::string_view to_string(RunState state);

struct RunStatus {
  std::string run_id;
  std::string session_id;
  std::string kind;        // "label" or "reseed"
  std::string parent_run;  // reseed only
  RunState state = RunState::kQueued;
  std::int64_t frames_done = 0;
  std::int64_t frame_count = 0;
  double fps = 0.0;
  std::string error;
};

/// Queues labeling and re-seeding runs. Runs of one session execute one at a
/// time in submission order; different sessions proceed in parallel. Every
/// run writes a new directory, so finished runs are never modified.
class RunManager {
 public:
  explicit RunManager(std::filesystem::path store_root);
  ~RunManager();
  RunManager(const RunManager&) = delete;
  RunManager& operator=(const RunManager&) = delete;

  const std::filesystem::path& store_root() const { return root_; }

  /// Validates synchronously (NotFound, UnknownBackend, ...) and returns the
  /// new run id.
  std::string submit_label(const std::string& session_id, const LabelRunConfig& config);
  /// Also throws SeedOutOfBounds, and Conflict when a reseed of
  /// the same parent run is already pending.
  std::string submit_reseed(const std::string& session_id, const std::string& parent_run,
                            std::int64_t frame_index, const std::vector<std::pair<int, int>>& points,
                            const LabelRunConfig& config);

  /// Registry first, then finished runs on disk.
  std::optional<RunStatus> status(const std::string& run_id) const;

  /// Blocks until every queued run has finished.
  void wait_idle();

 private:
  struct Job {
    std::string run_id;
    std::function<LabelRun(const ProgressFn&)> work;
  };
  struct Lane {
    std::deque<Job> queue;
    bool busy = false;
    std::thread worker;
  };

  std::string reserve_run_id(const std::string& session_id);
  void enqueue(const std::string& session_id, Job job);
  void drain(const std::string& session_id);
  RunStatus& entry(const std::string& session_id, const std::string& run_id);

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::map<std::string, Lane> lanes_;
  std::map<std::pair<std::string, std::string>, RunStatus> runs_;  // (session, run)
  std::map<std::string, int> next_run_;                          // per session
  std::int64_t active_ = 0;
};

/// HTTP front end over a RunManager and the session store.
///
///   GET  /sessions
///   GET  /sessions/{id}
///   GET  /sessions/{id}/frames/{k}              PV frame (PNG)
///   GET  /sessions/{id}/runs                    run ids with flags
///   GET  /sessions/{id}/runs/{run}              run manifest
///   GET  /sessions/{id}/runs/{run}/masks/{k}    mask (PNG, 0/255)
///   GET  /sessions/{id}/runs/{run}/overlay/{k}  PV tinted by mask (PNG)
///   POST /sessions/{id}/label                   {"config":{...}} -> {"run_id"}
///   POST /sessions/{id}/runs/{run}/reseed       {"frame_index":k,"points":[{"x","y"}]} -> {"run_id"}
///   GET  /runs/{run}/status                     {"state","frames_done","fps",...}
///
/// Errors are JSON {"error": <class>, "detail": <text>, "fields": {...}} with
/// status 404 (unknown ids), 400 (malformed or invalid body) or 409
/// (concurrent reseed of one run).
class ReviewServer {
 public:
  explicit ReviewServer(std::filesystem::path store_root);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  std::uint16_t start(const std::string& host, std::uint16_t port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, std::uint16_t port);
  void stop();

  RunManager& runs() { return runs_; }

 private:
  struct Impl;
  RunManager runs_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace seedtrack::review
