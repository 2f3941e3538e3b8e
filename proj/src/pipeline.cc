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

#include "seedtrack/pipeline.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seedtrack/errors.h"

namespace seedtrack {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct FrameRange {
  std::int64_t start = 0;
  std::int64_t stop = 0;  // inclusive
};

FrameRange resolve_range(const Session& session, const LabelRunConfig& config,
                         std::int64_t default_start) {
  FrameRange r{config.start_frame.value_or(default_start),
               config.stop_frame.value_or(session.frame_count() - 1)};
  if (r.start < 0 || r.start >= session.frame_count()) {
    throw PreconditionError("start frame " + std::to_string(r.start) + " outside session");
  }
  if (r.stop < r.start || r.stop >= session.frame_count()) {
    throw PreconditionError("stop frame " + std::to_string(r.stop) + " outside [start, last]");
  }
  return r;
}

std::string describe_proposals(const std::vector<MaskProposal>& proposals) {
  std::ostringstream ss;
  ss << "proposal pixels/scores:";
  for (const auto& p : proposals) ss << " " << p.mask.count() << "/" << p.score;
  return ss.str();
}

/// Propagates from `state` over (from, to], writing masks and flags.
void propagate_range(const Session& session, Tracker& tracker, TrackerState& state,
                     std::int64_t from, std::int64_t to, FrameFlag live_flag,
                     AnnotationSet& out, const ProgressFn& progress) {
  for (std::int64_t k = from + 1; k <= to; ++k) {
    Mask m = tracker.propagate(state, session.pv(k));
    out.flags[k] = m.none() ? FrameFlag::kEmpty : live_flag;
    out.masks[k] = std::move(m);
    if (progress) progress(k + 1, session.frame_count());
  }
}

}  // namespace

std::string config_digest(const PromptableSegmenter& segmenter, const Tracker& tracker,
                          const LabelRunConfig& config) {
  std::ostringstream ss;
  ss << segmenter.describe() << "|" << tracker.describe() << "|start="
     << (config.start_frame ? std::to_string(*config.start_frame) : "seed")
     << "|stop=" << (config.stop_frame ? std::to_string(*config.stop_frame) : "last");
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : ss.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LabelRun label_session(const Session& session, const LabelRunConfig& config,
                       const ProgressFn& progress) {
  const auto t0 = Clock::now();
  if (session.seeds().empty()) throw PreconditionError("session has no seed prompt");
  const SeedPrompt& seed = session.seeds().front();
  if (config.start_frame && *config.start_frame != seed.frame_index) {
    throw PreconditionError("start frame " + std::to_string(*config.start_frame) +
                            " differs from seed frame " + std::to_string(seed.frame_index));
  }
  const FrameRange range = resolve_range(session, config, seed.frame_index);
  BackendPair backends = make_backends(config.backends);

  const std::int64_t n = session.frame_count();
  AnnotationSet out;
  out.session_id = session.id();
  out.masks.assign(static_cast<std::size_t>(n), Mask(session.resolution()));
  out.flags.assign(static_cast<std::size_t>(n), FrameFlag::kEmpty);
  out.backend = {backends.segmenter->name(), backends.tracker->name(),
                 config_digest(*backends.segmenter, *backends.tracker, config)};
  out.seed_history = {seed};

  const RgbImage first = session.pv(range.start);
  const auto proposals = backends.segmenter->propose(first, seed);
  const MaskProposal& best = select_best(proposals);
  if (best.mask.none()) {
    throw InitializationFailure("seed (" + std::to_string(seed.x) + "," + std::to_string(seed.y) +
                                ") on frame " + std::to_string(seed.frame_index) +
                                " produced no segmentable object; " + describe_proposals(proposals));
  }
  TrackerState state = backends.tracker->initialize(first, best.mask, range.start);
  out.masks[range.start] = best.mask;
  out.flags[range.start] = FrameFlag::kTracked;
  if (progress) progress(range.start + 1, n);

  propagate_range(session, *backends.tracker, state, range.start, range.stop, FrameFlag::kTracked,
                  out, progress);
  if (progress) progress(n, n);
  return {std::move(out), seconds_since(t0)};
}

LabelRun reseed(const Session& session, const AnnotationSet& annotations,
                const std::vector<SeedPrompt>& extra_seeds, const LabelRunConfig& config,
                const ProgressFn& progress) {
  const auto t0 = Clock::now();
  validate_annotations(annotations, session);
  if (extra_seeds.empty()) throw PreconditionError("reseed needs at least one seed point");
  const std::int64_t k = extra_seeds.front().frame_index;
  for (const auto& s : extra_seeds) {
    if (s.frame_index != k) throw PreconditionError("all reseed points must be on the same frame");
    if (!session.resolution().contains(s.x, s.y)) {
      throw SeedOutOfBounds("seed (" + std::to_string(s.x) + "," + std::to_string(s.y) +
                            ") outside " + session.resolution().str());
    }
  }
  if (k < 0 || k >= session.frame_count()) {
    throw PreconditionError("reseed frame " + std::to_string(k) + " outside session");
  }
  LabelRunConfig cfg = config;
  cfg.start_frame.reset();
  const FrameRange range = resolve_range(session, cfg, k);
  BackendPair backends = make_backends(config.backends);

  const RgbImage image = session.pv(k);
  Mask merged = annotations.masks[k];
  bool grew = false;
  for (const auto& s : extra_seeds) {
    const auto proposals = backends.segmenter->propose(image, s);
    const MaskProposal& best = select_best(proposals);
    if (best.mask.none()) continue;
    merged |= best.mask;
    grew = true;
  }
  if (!grew) throw ReseedFailure("no extra seed on frame " + std::to_string(k) + " yielded a mask");

  AnnotationSet out = annotations;
  out.backend = {backends.segmenter->name(), backends.tracker->name(),
                 config_digest(*backends.segmenter, *backends.tracker, cfg)};
  out.seed_history.insert(out.seed_history.end(), extra_seeds.begin(), extra_seeds.end());
  TrackerState state = backends.tracker->initialize(image, merged, k);
  out.masks[k] = std::move(merged);
  out.flags[k] = FrameFlag::kReseeded;
  if (progress) progress(k + 1, session.frame_count());
  propagate_range(session, *backends.tracker, state, k, range.stop, FrameFlag::kReseeded, out,
                  progress);
  for (std::int64_t j = range.stop + 1; j < session.frame_count(); ++j) {
    out.masks[j] = Mask(session.resolution());
    out.flags[j] = FrameFlag::kEmpty;
  }
  if (progress) progress(session.frame_count(), session.frame_count());
  return {std::move(out), seconds_since(t0)};
}

RunSummary run_report(const LabelRun& run) {
  RunSummary s;
  s.frames = run.annotations.frame_count();
  for (auto f : run.annotations.flags) {
    switch (f) {
      case FrameFlag::kTracked: ++s.tracked; break;
      case FrameFlag::kEmpty: ++s.empty; break;
      case FrameFlag::kReseeded: ++s.reseeded; break;
    }
  }
  s.wall_seconds = run.wall_seconds;
  s.fps = run.wall_seconds > 0.0 ? static_cast<double>(s.frames) / run.wall_seconds : 0.0;
  return s;
}

std::filesystem::path summary_path(const std::filesystem::path& run_dir) {
  std::filesystem::path p = run_dir;
  if (!p.has_filename()) p = p.parent_path();
  return p.parent_path() / (p.filename().string() + ".summary.json");
}

void save_run(const std::filesystem::path& run_dir, const LabelRun& run) {
  save_annotations(run_dir, run.annotations);
  const RunSummary s = run_report(run);
  const nlohmann::json j = {{"frames", s.frames},       {"tracked", s.tracked},
                            {"empty", s.empty},         {"reseeded", s.reseeded},
                            {"wall_seconds", s.wall_seconds}, {"fps", s.fps}};
  std::ofstream out(summary_path(run_dir));
  if (!out) throw StorageError("cannot write run summary");
  out << j.dump(2) << "\n";
}

RunSummary load_run_summary(const std::filesystem::path& run_dir) {
  std::ifstream in(summary_path(run_dir));
  if (!in) {
    LabelRun run{load_annotations(run_dir), 0.0};
    return run_report(run);
  }
  try {
    const auto j = nlohmann::json::parse(in);
    RunSummary s;
    s.frames = j.at("frames").get<std::int64_t>();
    s.tracked = j.at("tracked").get<std::int64_t>();
    s.empty = j.at("empty").get<std::int64_t>();
    s.reseeded = j.at("reseeded").get<std::int64_t>();
    s.wall_seconds = j.at("wall_seconds").get<double>();
    s.fps = j.at("fps").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad run summary: ") + e.what());
  }
}

}  // namespace seedtrack
