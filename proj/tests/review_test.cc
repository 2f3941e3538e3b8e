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
#include "seedtrack/review.h"

#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "seedtrack/errors.h"
#include "seedtrack/evaluation.h"
#include "seedtrack/png_io.h"
#include "seedtrack/synthetic.h"
#include "testing.h"

namespace seedtrack::review {
namespace {

using nlohmann::json;
using testing::TempDir;

TEST(OverlayTest, BlendsOnlyMaskedPixels) {
  RgbImage pv(Resolution{2, 1});
  for (int x = 0; x < 2; ++x) {
    std::uint8_t* px = pv.pixel(x, 0);
    px[0] = 100;
    px[1] = 200;
    px[2] = 10;
  }
  Mask m(Resolution{2, 1});
  m.set(1, 0);
  const RgbImage out = render_overlay(pv, m);
  EXPECT_EQ(pixel_rgb(out, 0, 0), (Rgb{100, 200, 10}));
  // 0.55 * v + 0.45 * tint, rounded half away from zero
  EXPECT_EQ(pixel_rgb(out, 1, 0), (Rgb{55, 225, 6}));
  EXPECT_THROW(render_overlay(pv, Mask(Resolution{1, 1})), ResolutionMismatch);
}

synth::SceneSpec small_two_blob() {
  synth::SceneSpec spec = testing::two_blob_spec();
  spec.session_id = "blobs";
  spec.frame_count = 12;
  return spec;
}

class ReviewServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    scene_.emplace(synth::generate(small_two_blob(), store_.path()));
    server_ = std::make_unique<ReviewServer>(store_.path());
    port_ = server_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }
  void TearDown() override {
    client_.reset();
    server_.reset();
  }

  json get_json(const std::string& path, int expect = 200) {
    const auto res = client_->Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return json::parse(res->body);
  }

  json post_json(const std::string& path, const std::string& body, int expect) {
    const auto res = client_->Post(path, body, "application/json");
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return json::parse(res->body);
  }

  json wait_done(const std::string& run_id) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
    json st;
    while (std::chrono::steady_clock::now() < deadline) {
      st = get_json("/runs/" + run_id + "/status");
      if (st.value("state", "") == "done" || st.value("state", "") == "failed") return st;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ADD_FAILURE() << "run " << run_id << " did not finish";
    return st;
  }

  TempDir store_;
  std::optional<synth::SyntheticScene> scene_;
  std::unique_ptr<ReviewServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::uint16_t port_ = 0;
};

TEST_F(ReviewServerTest, ListsSessionsAndFrames) {
  const json list = get_json("/sessions");
  ASSERT_EQ(list["sessions"].size(), 1u);
  EXPECT_EQ(list["sessions"][0]["session_id"], "blobs");

  const json one = get_json("/sessions/blobs");
  EXPECT_EQ(one["frame_count"], 12);
  EXPECT_EQ(one["width"], 640);
  EXPECT_EQ(one["seed_prompts"][0]["x"], scene_->session.seeds()[0].x);
  EXPECT_EQ(one["seed_prompts"][0]["origin"], to_string(scene_->session.seeds()[0].origin));

  const auto frame = client_->Get("/sessions/blobs/frames/3");
  ASSERT_TRUE(frame);
  EXPECT_EQ(frame->status, 200);
  EXPECT_EQ(frame->get_header_value("Content-Type"), "image/png");
  std::ifstream f(scene_->session.path() / "pv" / "000003.png", std::ios::binary);
  EXPECT_EQ(frame->body, std::string(std::istreambuf_iterator<char>(f), {}));

  EXPECT_EQ(get_json("/sessions/nope", 404)["error"], "NotFound");
  EXPECT_EQ(get_json("/sessions/blobs/frames/12", 404)["error"], "NotFound");
  EXPECT_EQ(get_json("/sessions/blobs/runs")["runs"], json::array());
  EXPECT_EQ(get_json("/runs/run-0042/status", 404)["error"], "NotFound");
}

TEST_F(ReviewServerTest, LabelThenReseedCoversBothBlobs) {
  const json submitted = post_json("/sessions/blobs/label", "{}", 202);
  EXPECT_EQ(submitted["run_id"], "run-0001");
  const json done = wait_done("run-0001");
  EXPECT_EQ(done["state"], "done");
  EXPECT_EQ(done["frames_done"], 12);
  EXPECT_EQ(done["frame_count"], 12);
  EXPECT_EQ(get_json("/sessions/blobs/runs")["runs"], json::array({"run-0001"}));
  EXPECT_EQ(get_json("/sessions/blobs/runs/run-0001")["session_id"], "blobs");

  const auto mask_res = client_->Get("/sessions/blobs/runs/run-0001/masks/0");
  ASSERT_TRUE(mask_res);
  EXPECT_EQ(mask_res->status, 200);
  const auto overlay_res = client_->Get("/sessions/blobs/runs/run-0001/overlay/0");
  ASSERT_TRUE(overlay_res);
  EXPECT_EQ(overlay_res->status, 200);
  {
    TempDir tmp;
    std::ofstream(tmp / "m.png", std::ios::binary) << mask_res->body;
    std::ofstream(tmp / "o.png", std::ios::binary) << overlay_res->body;
    const Mask m = png::read_mask(tmp / "m.png");
    EXPECT_EQ(png::read_rgb(tmp / "o.png"), render_overlay(scene_->session.pv(0), m));
    EXPECT_LT(testing::dice_oracle(m, scene_->ground_truth[0][0]), 0.8);
  }

  const json reseeded = post_json("/sessions/blobs/runs/run-0001/reseed",
                                  R"({"frame_index":0,"points":[{"x":180,"y":180}]})", 202);
  EXPECT_EQ(reseeded["run_id"], "run-0002");
  EXPECT_EQ(wait_done("run-0002")["state"], "done");
  const AnnotationSet a = load_annotations(run_path(scene_->session.path(), "run-0002"));
  EXPECT_EQ(a.parent_run, "run-0001");
  for (std::int64_t k = 0; k < 12; ++k) {
    EXPECT_GE(testing::dice_oracle(a.masks[k], scene_->ground_truth[0][k]), 0.95) << k;
  }
}

TEST_F(ReviewServerTest, RejectsBadRequests) {
  EXPECT_EQ(post_json("/sessions/nope/label", "{}", 404)["error"], "NotFound");
  EXPECT_EQ(post_json("/sessions/blobs/label", "{not json", 400)["error"], "BadRequest");
  const json bad_backend = post_json("/sessions/blobs/label", R"({"config":{"segmenter":"magic"}})", 400);
  EXPECT_EQ(bad_backend["error"], "UnknownBackend");
  const json bad_type = post_json("/sessions/blobs/label", R"({"config":{"start_frame":"x"}})", 400);
  EXPECT_TRUE(bad_type["fields"].contains("config.start_frame"));

  EXPECT_EQ(post_json("/sessions/blobs/runs/run-0001/reseed", R"({"frame_index":0,"points":[{"x":1,"y":1}]})", 404)["error"],
            "NotFound");
  ASSERT_EQ(post_json("/sessions/blobs/label", "{}", 202)["run_id"], "run-0001");
  wait_done("run-0001");
  const std::string reseed = "/sessions/blobs/runs/run-0001/reseed";
  EXPECT_TRUE(post_json(reseed, R"({"points":[{"x":1,"y":1}]})", 400)["fields"].contains("frame_index"));
  EXPECT_TRUE(post_json(reseed, R"({"frame_index":0,"points":[]})", 400)["fields"].contains("points"));
  EXPECT_TRUE(post_json(reseed, R"({"frame_index":0,"points":[{"x":1}]})", 400)["fields"].contains("points[0]"));
  EXPECT_EQ(post_json(reseed, R"({"frame_index":0,"points":[{"x":900,"y":1}]})", 400)["error"], "SeedOutOfBounds");
}

TEST_F(ReviewServerTest, ConcurrentReseedOfSameParentConflicts) {
  ASSERT_EQ(post_json("/sessions/blobs/label", "{}", 202)["run_id"], "run-0001");
  wait_done("run-0001");
  const std::string reseed = "/sessions/blobs/runs/run-0001/reseed";
  const std::string body = R"({"frame_index":0,"points":[{"x":180,"y":180}]})";
  // Holding the lane busy with a label run keeps the first reseed queued.
  post_json("/sessions/blobs/label", "{}", 202);
  EXPECT_EQ(post_json(reseed, body, 202)["run_id"], "run-0003");
  EXPECT_EQ(post_json(reseed, body, 409)["error"], "Conflict");
  server_->runs().wait_idle();
  EXPECT_EQ(post_json(reseed, body, 202)["run_id"], "run-0004");
  server_->runs().wait_idle();
}

TEST(RunManagerTest, RunIdsContinueFromDisk) {
  TempDir store;
  auto spec = small_two_blob();
  spec.frame_count = 3;
  synth::generate(spec, store.path());
  {
    RunManager runs(store.path());
    EXPECT_EQ(runs.submit_label("blobs", {}), "run-0001");
    runs.wait_idle();
    EXPECT_EQ(runs.status("run-0001")->state, RunState::kDone);
  }
  RunManager again(store.path());
  const auto st = again.status("run-0001");
  ASSERT_TRUE(st.has_value());
  EXPECT_EQ(st->state, RunState::kDone);
  EXPECT_EQ(st->kind, "label");
  EXPECT_EQ(again.submit_reseed("blobs", "run-0001", 0, {{180, 180}}, {}), "run-0002");
  again.wait_idle();
  RunManager third(store.path());
  const auto re = third.status("run-0002");
  ASSERT_TRUE(re.has_value());
  EXPECT_EQ(re->kind, "reseed");
  EXPECT_EQ(re->parent_run, "run-0001");
  EXPECT_FALSE(again.status("run-0099").has_value());
}

}  // namespace
}  // namespace seedtrack::review
