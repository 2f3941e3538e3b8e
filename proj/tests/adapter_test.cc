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
#include "seedtrack/adapter.h"

#include <gtest/gtest.h>

#include <chrono>

#include "seedtrack/errors.h"
#include "seedtrack/pipeline.h"
#include "seedtrack/synthetic.h"
#include "testing.h"

namespace seedtrack {
namespace {

std::string fake(const std::string& mode) {
  return testing::quote(SEEDTRACK_FAKE_ADAPTER) + " " + mode;
}

RgbImage blank() { return RgbImage(Resolution{40, 30}); }

TEST(AdapterTest, ProposeReturnsThreeScoredMasks) {
  auto proc = std::make_shared<AdapterProcess>(fake("ok"), 10.0);
  AdapterSegmenter seg(proc);
  const auto props = seg.propose(blank(), {0, 20, 15, SeedOrigin::kCaptureExplicit});
  ASSERT_EQ(props.size(), 3u);
  EXPECT_EQ(props[0].mask.count(), 25u);
  EXPECT_EQ(props[1].mask.count(), 169u);
  EXPECT_EQ(props[2].mask.count(), 625u);
  EXPECT_DOUBLE_EQ(props[1].score, 0.9);
  EXPECT_EQ(select_best_index(props), 1u);
}

TEST(AdapterTest, TrackerRoundTrip) {
  auto proc = std::make_shared<AdapterProcess>(fake("ok"), 10.0);
  AdapterTracker tracker(proc);
  Mask m(Resolution{40, 30});
  m.set(3, 4);
  m.set(4, 4);
  TrackerState st = tracker.initialize(blank(), m, 5);
  EXPECT_EQ(tracker.propagate(st, blank()), m);
  EXPECT_EQ(st.frame_cursor, 6);
  EXPECT_THROW(tracker.initialize(blank(), Mask(Resolution{40, 30}), 0), InitializationFailure);
}

TEST(AdapterTest, TimeoutRaisesBackendUnavailable) {
  auto proc = std::make_shared<AdapterProcess>(fake("hang"), 0.3);
  AdapterSegmenter seg(proc);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(seg.propose(blank(), {0, 1, 1, SeedOrigin::kCaptureExplicit}), BackendUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
}

TEST(AdapterTest, MisbehavingProcesses) {
  for (const char* mode : {"crash", "garbage", "error", "short"}) {
    auto proc = std::make_shared<AdapterProcess>(fake(mode), 5.0);
    AdapterSegmenter seg(proc);
    EXPECT_THROW(seg.propose(blank(), {0, 1, 1, SeedOrigin::kCaptureExplicit}), BackendUnavailable) << mode;
  }
}

TEST(AdapterTest, MissingExecutable) {
  auto proc = std::make_shared<AdapterProcess>("/nonexistent/adapter-binary", 5.0);
  AdapterSegmenter seg(proc);
  EXPECT_THROW(seg.propose(blank(), {0, 1, 1, SeedOrigin::kCaptureExplicit}), BackendUnavailable);
}

TEST(AdapterTest, LabelsASessionThroughTheFactory) {
  testing::TempDir tmp;
  synth::SceneSpec spec = testing::moving_disc_spec();
  spec.frame_count = 4;
  const auto scene = synth::generate(spec, tmp.path());
  LabelRunConfig cfg;
  cfg.backends.segmenter = "external";
  cfg.backends.tracker = "external";
  cfg.backends.adapter_command = fake("ok");
  const LabelRun run = label_session(scene.session, cfg);
  ASSERT_EQ(run.annotations.frame_count(), 4);
  EXPECT_EQ(run.annotations.backend.segmenter, "external");
  EXPECT_EQ(run.annotations.masks[0].count(), 169u);
  for (const auto& m : run.annotations.masks) EXPECT_EQ(m, run.annotations.masks[0]);
}

}  // namespace
}  // namespace seedtrack
