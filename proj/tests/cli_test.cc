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
// End-to-end tests that drive the seedtrack binary through a shell.

#include <gtest/gtest.h>
#include <signal.h>

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "net.h"
#include "seedtrack/evaluation.h"
#include "seedtrack/png_io.h"
#include "seedtrack/synthetic.h"
#include "testing.h"

namespace seedtrack {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::quote;
using testing::run_command;
using testing::TempDir;

std::string cli(const std::string& args) { return std::string(SEEDTRACK_CLI) + " " + args; }

fs::path write_spec(const TempDir& dir, const synth::SceneSpec& spec) {
  const fs::path p = dir / (spec.session_id + ".json");
  std::ofstream(p) << synth::dump_scene_spec(spec);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

synth::SceneSpec small_disc() {
  synth::SceneSpec spec = testing::moving_disc_spec();
  spec.session_id = "small";
  spec.resolution = {160, 120};
  spec.frame_count = 12;
  spec.objects[0].start_x = 40;
  spec.objects[0].start_y = 60;
  spec.objects[0].radius = 15;
  return spec;
}

TEST(CliTest, SynthLabelEvalOnMovingDisc) {
  TempDir tmp;
  const fs::path spec = write_spec(tmp, testing::moving_disc_spec());
  auto r = run_command(cli("synth --spec " + quote(spec) + " --out " + quote(tmp / "store")));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const fs::path session = tmp / "store" / testing::moving_disc_spec().session_id;
  r = run_command(cli("label --session " + quote(session) + " --segmenter chroma_flood --tracker overlap"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("run-0001 ", 0), 0u) << r.out;
  r = run_command(cli("eval dice --json --run " + quote(session / "ann" / "run-0001") + " --reference " +
                      quote(synth::ground_truth_dir(session, 0))) + " 2>/dev/null");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const json report = json::parse(r.out);
  EXPECT_EQ(report["n_frames"], 90);
  EXPECT_GE(report["mean"].get<double>(), 0.95);
  for (const auto& d : report["dice"]) EXPECT_GE(d.get<double>(), 0.95);

  r = run_command(cli("eval dice --frames uniform:10 --run " + quote(session / "ann" / "run-0001") +
                      " --reference " + quote(synth::ground_truth_dir(session, 0))));
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("(n=10)"), std::string::npos) << r.out;
}

TEST(CliTest, DiceResolutionMismatchExitCode) {
  TempDir tmp;
  auto a = small_disc();
  auto b = small_disc();
  b.session_id = "wide";
  b.resolution = {200, 120};
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, a)) + " --out " + quote(tmp / "s"))).exit_code, 0);
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, b)) + " --out " + quote(tmp / "s"))).exit_code, 0);
  ASSERT_EQ(run_command(cli("label --session " + quote(tmp / "s" / "small"))).exit_code, 0);
  const auto r = run_command(cli("eval dice --run " + quote(tmp / "s" / "small" / "ann" / "run-0001") +
                                 " --reference " + quote(synth::ground_truth_dir(tmp / "s" / "wide", 0))));
  EXPECT_EQ(r.exit_code, 13) << r.out;
  EXPECT_NE(r.out.find("error: ResolutionMismatch: "), std::string::npos) << r.out;
}

TEST(CliTest, LabelIsDeterministic) {
  TempDir tmp;
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, small_disc())) + " --out " + quote(tmp / "s")))
                .exit_code,
            0);
  const fs::path session = tmp / "s" / "small";
  ASSERT_EQ(run_command(cli("label --session " + quote(session))).exit_code, 0);
  ASSERT_EQ(run_command(cli("label --session " + quote(session))).exit_code, 0);
  std::string why;
  EXPECT_TRUE(testing::trees_equal(session / "ann" / "run-0001", session / "ann" / "run-0002", &why)) << why;
}

TEST(CliTest, SynthSeedFlagControlsNoise) {
  TempDir tmp;
  auto spec = small_disc();
  spec.noise_amplitude = 10;
  const fs::path p = write_spec(tmp, spec);
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(run_command(cli("synth --seed 7 --spec " + quote(p) + " --out " + quote(tmp / out))).exit_code, 0);
  }
  ASSERT_EQ(run_command(cli("synth --seed 8 --spec " + quote(p) + " --out " + quote(tmp / "c"))).exit_code, 0);
  EXPECT_EQ(read_file(tmp / "a" / "small" / "pv" / "000003.png"), read_file(tmp / "b" / "small" / "pv" / "000003.png"));
  EXPECT_NE(read_file(tmp / "a" / "small" / "pv" / "000003.png"), read_file(tmp / "c" / "small" / "pv" / "000003.png"));
}

TEST(CliTest, ReseedCoversSecondBlob) {
  TempDir tmp;
  auto spec = testing::two_blob_spec();
  spec.session_id = "blobs";
  spec.frame_count = 10;
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, spec)) + " --out " + quote(tmp / "s"))).exit_code, 0);
  const fs::path session = tmp / "s" / "blobs";
  ASSERT_EQ(run_command(cli("label --session " + quote(session))).exit_code, 0);
  const auto r = run_command(cli("reseed --session " + quote(session) + " --run run-0001 --frame 0 --point 180,180"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("reseeded=10"), std::string::npos) << r.out;
  const auto dice = run_command(cli("eval dice --json --run " + quote(session / "ann" / "run-0002") + " --reference " +
                                    quote(synth::ground_truth_dir(session, 0))) + " 2>/dev/null");
  ASSERT_EQ(dice.exit_code, 0) << dice.out;
  const json reseeded = json::parse(dice.out);
  for (const auto& d : reseeded["dice"]) EXPECT_GE(d.get<double>(), 0.95);

  EXPECT_EQ(run_command(cli("reseed --session " + quote(session) + " --run run-0001 --frame 0 --point 900,1")).exit_code,
            20);
  EXPECT_EQ(run_command(cli("reseed --session " + quote(session) + " --run run-0009 --frame 0 --point 1,1")).exit_code,
            10);
  EXPECT_EQ(run_command(cli("reseed --session " + quote(session) + " --run run-0001 --frame 0 --point nope")).exit_code,
            12);
}

TEST(CliTest, ExportRleRoundTrips) {
  TempDir tmp;
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, small_disc())) + " --out " + quote(tmp / "s")))
                .exit_code,
            0);
  const fs::path session = tmp / "s" / "small";
  ASSERT_EQ(run_command(cli("label --session " + quote(session))).exit_code, 0);
  const auto r = run_command(cli("export rle --session " + quote(session) + " --run run-0001 --out " + quote(tmp / "m.rle")));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto masks = eval::import_rle(read_file(tmp / "m.rle"));
  const AnnotationSet a = load_annotations(session / "ann" / "run-0001");
  EXPECT_EQ(masks, a.masks);

  const auto v = run_command(cli("export video --session " + quote(session) + " --out " + quote(tmp / "v.avi")));
  EXPECT_EQ(v.exit_code, 0) << v.out;
  EXPECT_GT(fs::file_size(tmp / "v.avi"), 0u);
}

TEST(CliTest, SpeedAndConcordanceReports) {
  TempDir tmp;
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, small_disc())) + " --out " + quote(tmp / "s")))
                .exit_code,
            0);
  const fs::path session = tmp / "s" / "small";
  ASSERT_EQ(run_command(cli("label --session " + quote(session))).exit_code, 0);
  std::ofstream(tmp / "t.csv") << "rater,frame,seconds\nHA1,0,125\nHA1,1,125\n";
  auto r = run_command(cli("eval speed --json --timings " + quote(tmp / "t.csv") + " --run " +
                           quote(session / "ann" / "run-0001")) + " 2>/dev/null");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("0.008 fps / "), std::string::npos) << r.out;

  fs::copy(synth::ground_truth_dir(session, 0), tmp / "HA2");
  r = run_command(cli("eval concordance --reference " + quote(synth::ground_truth_dir(session, 0)) + " --raters " +
                      quote(tmp / "HA2") + " --run " + quote(session / "ann" / "run-0001") +
                      " --frames 0,5,11"));
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("HA2"), std::string::npos) << r.out;

  std::ofstream(tmp / "bad.csv") << "rater,frame,seconds\nHA1,0,abc\n";
  r = run_command(cli("eval speed --timings " + quote(tmp / "bad.csv") + " --run " + quote(session / "ann" / "run-0001")));
  EXPECT_EQ(r.exit_code, 12) << r.out;
}

TEST(CliTest, ErrorsAndUsage) {
  TempDir tmp;
  auto r = run_command(cli(""));
  EXPECT_EQ(r.exit_code, 2);
  r = run_command(cli("frobnicate"));
  EXPECT_EQ(r.exit_code, 2);
  r = run_command(cli("label --session " + quote(tmp / "missing")));
  EXPECT_EQ(r.exit_code, 10);
  EXPECT_EQ(r.out.rfind("error: NotFound: ", 0), 0u) << r.out;
  ASSERT_EQ(run_command(cli("synth --spec " + quote(write_spec(tmp, small_disc())) + " --out " + quote(tmp / "s")))
                .exit_code,
            0);
  r = run_command(cli("label --segmenter magic --session " + quote(tmp / "s" / "small")));
  EXPECT_EQ(r.exit_code, 15) << r.out;
  r = run_command(cli("synth --spec " + quote(write_spec(tmp, small_disc())) + " --out " + quote(tmp / "s")));
  EXPECT_EQ(r.exit_code, 22) << r.out;
  std::ofstream(tmp / "broken.json") << "{";
  r = run_command(cli("synth --spec " + quote(tmp / "broken.json") + " --out " + quote(tmp / "s")));
  EXPECT_EQ(r.exit_code, 14) << r.out;
}

/// Starts `capture serve` in the background and returns its pid.
int start_server(const TempDir& tmp, std::uint16_t port) {
  const auto r = run_command(cli("capture serve --bind 127.0.0.1:" + std::to_string(port) + " --store " +
                                 quote(tmp / "recv")) +
                             " > " + quote(tmp / "serve.log") + " 2>&1 & echo $!");
  const int pid = std::stoi(r.out);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (std::chrono::steady_clock::now() < deadline) {
    if (read_file(tmp / "serve.log").find("listening " + std::to_string(port)) != std::string::npos) return pid;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ADD_FAILURE() << "server did not start: " << read_file(tmp / "serve.log");
  return pid;
}

TEST(CliTest, CaptureReplayRoundTrip) {
  TempDir tmp;
  auto spec = small_disc();
  spec.noise_amplitude = 8;
  spec.with_depth = true;
  spec.with_pose = true;
  ASSERT_EQ(run_command(cli("synth --seed 3 --spec " + quote(write_spec(tmp, spec)) + " --out " + quote(tmp / "src")))
                .exit_code,
            0);
  std::uint16_t port = 0;
  { net::listen_on({"127.0.0.1", 0}, port); }
  const int pid = start_server(tmp, port);

  const fs::path src = tmp / "src" / "small";
  auto r = run_command(cli("capture replay --session " + quote(src) + " --target 127.0.0.1:" + std::to_string(port) +
                           " --fps 500"));
  EXPECT_EQ(r.exit_code, 0) << r.out;
  r = run_command(cli("capture replay --session " + quote(src) + " --target 127.0.0.1:" + std::to_string(port) +
                      " --fps 500"));
  EXPECT_EQ(r.exit_code, 22) << r.out;

  ::kill(pid, SIGINT);
  for (int i = 0; i < 200 && ::kill(pid, 0) == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  EXPECT_NE(::kill(pid, 0), 0) << "server ignored SIGINT";

  const fs::path dst = tmp / "recv" / "small";
  std::string why;
  for (const char* sub : {"pv", "depth", "pose", "pc"}) {
    EXPECT_TRUE(testing::trees_equal(src / sub, dst / sub, &why)) << sub << ": " << why;
  }
  EXPECT_EQ(read_file(src / "timestamps.txt"), read_file(dst / "timestamps.txt"));
  EXPECT_EQ(Session::load(src).seeds(), Session::load(dst).seeds());

  r = run_command(cli("capture replay --session " + quote(src) + " --target 127.0.0.1:" + std::to_string(port) +
                      " --fps 500"));
  EXPECT_EQ(r.exit_code, 30) << r.out;
}

}  // namespace
}  // namespace seedtrack
