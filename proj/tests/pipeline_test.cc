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

#include <gtest/gtest.h>

#include <fstream>

#include "seedtrack/errors.h"
#include "seedtrack/synthetic.h"
#include "testing.h"

namespace seedtrack {
namespace {

using testing::TempDir;

std::string fake(const std::string& mode) {
  return testing::quote(SEEDTRACK_FAKE_ADAPTER) + " " + mode;
}

synth::SyntheticScene short_disc(const fs::path& root, std::int64_t frames = 8) {
  synth::SceneSpec spec = testing::moving_disc_spec();
  spec.frame_count = frames;
  return synth::generate(spec, root);
}

TEST(LabelSessionTest, MatchesGroundTruthOnMovingDisc) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path());
  const LabelRun run = label_session(scene.session, {});
  const AnnotationSet& a = run.annotations;
  ASSERT_EQ(a.frame_count(), 8);
  EXPECT_EQ(a.session_id, scene.session.id());
  EXPECT_EQ(a.object_id, 1);
  for (std::int64_t k = 0; k < 8; ++k) {
    EXPECT_EQ(a.masks[k], scene.ground_truth[0][k]) << k;
    EXPECT_EQ(a.flags[k], FrameFlag::kTracked);
  }
  ASSERT_EQ(a.seed_history.size(), 1u);
  EXPECT_EQ(a.seed_history[0], scene.session.seeds()[0]);
  EXPECT_EQ(a.backend.segmenter, "chroma_flood");
  EXPECT_EQ(a.backend.tracker, "overlap");
  EXPECT_EQ(a.backend.config_digest.size(), 16u);
  EXPECT_NO_THROW(validate_annotations(a, scene.session));
}

TEST(LabelSessionTest, FramesBeforeTheSeedAreEmpty) {
  TempDir tmp;
  synth::SceneSpec spec = testing::moving_disc_spec();
  spec.frame_count = 6;
  spec.objects[0].appear_frame = 2;
  const auto scene = synth::generate(spec, tmp.path());
  ASSERT_EQ(scene.session.seeds()[0].frame_index, 2);
  const LabelRun run = label_session(scene.session, {});
  for (int k = 0; k < 2; ++k) {
    EXPECT_TRUE(run.annotations.masks[k].none());
    EXPECT_EQ(run.annotations.flags[k], FrameFlag::kEmpty);
  }
  for (int k = 2; k < 6; ++k) EXPECT_EQ(run.annotations.masks[k], scene.ground_truth[0][k]);
}

TEST(LabelSessionTest, ObjectLeavingTheViewIsFlaggedEmpty) {
  TempDir tmp;
  synth::SceneSpec spec = testing::moving_disc_spec();
  spec.frame_count = 6;
  spec.objects[0].disappear_frame = 4;
  const auto scene = synth::generate(spec, tmp.path());
  const LabelRun run = label_session(scene.session, {});
  EXPECT_EQ(run.annotations.flags[3], FrameFlag::kTracked);
  EXPECT_EQ(run.annotations.flags[4], FrameFlag::kEmpty);
  EXPECT_TRUE(run.annotations.masks[5].none());
  EXPECT_EQ(run_report(run).empty, 2);
}

TEST(LabelSessionTest, StopFrameLeavesLaterFramesEmpty) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path());
  LabelRunConfig cfg;
  cfg.stop_frame = 4;
  const LabelRun run = label_session(scene.session, cfg);
  EXPECT_EQ(run.annotations.masks[4], scene.ground_truth[0][4]);
  EXPECT_TRUE(run.annotations.masks[5].none());
  EXPECT_EQ(run.annotations.flags[7], FrameFlag::kEmpty);
}

TEST(LabelSessionTest, RangeErrors) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path());
  LabelRunConfig cfg;
  cfg.start_frame = 1;
  EXPECT_THROW(label_session(scene.session, cfg), PreconditionError);
  cfg.start_frame = 0;
  cfg.stop_frame = 8;
  EXPECT_THROW(label_session(scene.session, cfg), PreconditionError);
  cfg.stop_frame = 7;
  EXPECT_NO_THROW(label_session(scene.session, cfg));
  LabelRunConfig unknown;
  unknown.backends.tracker = "nope";
  EXPECT_THROW(label_session(scene.session, unknown), UnknownBackend);
}

TEST(LabelSessionTest, EmptyBestProposalIsAnInitializationFailure) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path(), 3);
  LabelRunConfig cfg;
  cfg.backends.segmenter = "external";
  cfg.backends.adapter_command = fake("empty");
  EXPECT_THROW(label_session(scene.session, cfg), InitializationFailure);
}

TEST(LabelSessionTest, ProgressReachesFrameCount) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path(), 5);
  std::vector<std::int64_t> done;
  label_session(scene.session, {}, [&](std::int64_t d, std::int64_t total) {
    EXPECT_EQ(total, 5);
    done.push_back(d);
  });
  ASSERT_FALSE(done.empty());
  EXPECT_TRUE(std::is_sorted(done.begin(), done.end()));
  EXPECT_EQ(done.back(), 5);
}

TEST(LabelSessionTest, DeterministicAcrossRuns) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path(), 5);
  EXPECT_EQ(label_session(scene.session, {}).annotations, label_session(scene.session, {}).annotations);
}

synth::SyntheticScene two_blob(const fs::path& root, std::int64_t frames) {
  synth::SceneSpec spec = testing::two_blob_spec();
  spec.frame_count = frames;
  return synth::generate(spec, root);
}

/// A point on the secondary blob that the primary does not cover.
SeedPrompt secondary_seed(const synth::SceneSpec& spec, std::int64_t frame) {
  const auto& o = spec.objects[0];
  const int x = o.start_x + static_cast<int>(o.velocity_x * static_cast<double>(frame)) +
                o.secondary_offset_x + o.secondary_radius / 2;
  return {frame, x, o.start_y + o.secondary_offset_y, SeedOrigin::kReviewClick};
}

TEST(ReseedTest, UnionCoversBothBlobsAndLaterFramesFollow) {
  TempDir tmp;
  const auto scene = two_blob(tmp.path(), 6);
  const LabelRun first = label_session(scene.session, {});
  EXPECT_LT(first.annotations.masks[0].count(), scene.ground_truth[0][0].count());

  const LabelRun second = reseed(scene.session, first.annotations, {secondary_seed(testing::two_blob_spec(), 0)}, {});
  const AnnotationSet& a = second.annotations;
  for (std::int64_t k = 0; k < 6; ++k) {
    EXPECT_EQ(a.masks[k], scene.ground_truth[0][k]) << k;
    EXPECT_EQ(a.flags[k], FrameFlag::kReseeded);
  }
  ASSERT_EQ(a.seed_history.size(), 2u);
  EXPECT_EQ(a.seed_history[1].origin, SeedOrigin::kReviewClick);
  EXPECT_EQ(run_report(second).reseeded, 6);
}

TEST(ReseedTest, FramesBeforeTheReseedFrameAreUntouched) {
  TempDir tmp;
  const auto scene = two_blob(tmp.path(), 8);
  const LabelRun first = label_session(scene.session, {});
  const LabelRun second = reseed(scene.session, first.annotations, {secondary_seed(testing::two_blob_spec(), 5)}, {});
  for (std::int64_t k = 0; k < 5; ++k) {
    EXPECT_EQ(second.annotations.masks[k], first.annotations.masks[k]);
    EXPECT_EQ(second.annotations.flags[k], first.annotations.flags[k]);
  }
  EXPECT_TRUE(first.annotations.masks[5].subset_of(second.annotations.masks[5]));
  EXPECT_EQ(second.annotations.masks[7], scene.ground_truth[0][7]);
}

TEST(ReseedTest, Errors) {
  TempDir tmp;
  const auto scene = two_blob(tmp.path(), 3);
  const AnnotationSet a = label_session(scene.session, {}).annotations;
  EXPECT_THROW(reseed(scene.session, a, {}, {}), PreconditionError);
  EXPECT_THROW(reseed(scene.session, a, {{0, 1, 1, SeedOrigin::kReviewClick}, {1, 1, 1, SeedOrigin::kReviewClick}}, {}),
               PreconditionError);
  EXPECT_THROW(reseed(scene.session, a, {{0, 640, 1, SeedOrigin::kReviewClick}}, {}), SeedOutOfBounds);
  EXPECT_THROW(reseed(scene.session, a, {{3, 1, 1, SeedOrigin::kReviewClick}}, {}), PreconditionError);
  LabelRunConfig empty;
  empty.backends.segmenter = "external";
  empty.backends.adapter_command = fake("empty");
  EXPECT_THROW(reseed(scene.session, a, {{0, 1, 1, SeedOrigin::kReviewClick}}, empty), ReseedFailure);
  AnnotationSet truncated = a;
  truncated.masks.pop_back();
  truncated.flags.pop_back();
  EXPECT_THROW(reseed(scene.session, truncated, {{0, 1, 1, SeedOrigin::kReviewClick}}, {}), PreconditionError);
}

TEST(ConfigDigestTest, StableAndSensitive) {
  ChromaFloodSegmenter a;
  ChromaFloodSegmenter b({8, 24, 64});
  OverlapTracker t;
  const std::string d = config_digest(a, t, {});
  EXPECT_EQ(d, config_digest(a, t, {}));
  EXPECT_NE(d, config_digest(b, t, {}));
  LabelRunConfig stop;
  stop.stop_frame = 3;
  EXPECT_NE(d, config_digest(a, t, stop));
}

TEST(RunSummaryTest, StoredBesideTheRun) {
  TempDir tmp;
  const auto scene = short_disc(tmp.path(), 3);
  const LabelRun run = label_session(scene.session, {});
  const fs::path dir = run_path(scene.session.path(), "run-0001");
  save_run(dir, run);
  EXPECT_EQ(summary_path(dir), scene.session.path() / "ann" / "run-0001.summary.json");
  EXPECT_FALSE(fs::exists(dir / "run-0001.summary.json"));
  const RunSummary s = load_run_summary(dir);
  EXPECT_EQ(s.frames, 3);
  EXPECT_EQ(s.tracked, 3);
  EXPECT_DOUBLE_EQ(s.wall_seconds, run.wall_seconds);
  EXPECT_GT(s.fps, 0.0);

  fs::remove(summary_path(dir));
  const RunSummary fallback = load_run_summary(dir);
  EXPECT_EQ(fallback.frames, 3);
  EXPECT_EQ(fallback.fps, 0.0);

  { std::ofstream(summary_path(dir)) << "{}"; }
  EXPECT_THROW(load_run_summary(dir), FormatError);
}

TEST(RunSummaryTest, FpsIsFramesOverSeconds) {
  LabelRun run;
  run.annotations.masks.resize(10, Mask(Resolution{1, 1}));
  run.annotations.flags.assign(10, FrameFlag::kTracked);
  run.annotations.flags[0] = FrameFlag::kEmpty;
  run.wall_seconds = 4.0;
  const RunSummary s = run_report(run);
  EXPECT_DOUBLE_EQ(s.fps, 2.5);
  EXPECT_EQ(s.empty, 1);
  EXPECT_EQ(s.tracked, 9);
}

}  // namespace
}  // namespace seedtrack
