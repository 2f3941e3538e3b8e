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
#include "seedtrack/evaluation.h"

#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "seedtrack/errors.h"
#include "testing.h"

namespace seedtrack::eval {
namespace {

using seedtrack::testing::dice_oracle;
using seedtrack::testing::random_mask;

Mask from_rows(std::initializer_list<const char*> rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(std::strlen(*rows.begin()));
  Mask m(Resolution{w, h});
  int y = 0;
  for (const char* r : rows) {
    for (int x = 0; x < w; ++x) m.set(x, y, r[x] == '#');
    ++y;
  }
  return m;
}

TEST(DiceTest, HandComputedCases) {
  const Mask a = from_rows({"##..", "##..", "....", "...."});
  const Mask b = from_rows({".##.", ".##.", "....", "...."});
  EXPECT_DOUBLE_EQ(dice(a, b), 0.5);  // 2*2 / (4+4)
  EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
  const Mask empty(Resolution{4, 4});
  EXPECT_DOUBLE_EQ(dice(empty, empty), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, empty), 0.0);
  EXPECT_DOUBLE_EQ(dice(empty, a), 0.0);
  EXPECT_THROW(dice(a, Mask(Resolution{4, 5})), ResolutionMismatch);
}

TEST(DiceTest, EqualsCountingOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Resolution res{1 + static_cast<int>(rng() % 32), 1 + static_cast<int>(rng() % 32)};
    const double da = static_cast<double>(rng() % 101) / 100.0;
    const double db = static_cast<double>(rng() % 101) / 100.0;
    const Mask a = random_mask(rng, res, da);
    const Mask b = random_mask(rng, res, db);
    ASSERT_EQ(dice(a, b), dice_oracle(a, b));
    ASSERT_EQ(dice(a, b), dice(b, a));
  }
}

TEST(MeanStdTest, SampleStandardDeviation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanStd m = mean_std(v);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.stddev, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(m.n, 4u);
  const std::vector<double> one{0.7};
  EXPECT_DOUBLE_EQ(mean_std(one).stddev, 0.0);
  EXPECT_EQ(mean_std({}).n, 0u);
}

TEST(FormatTest, MeanStdCell) {
  EXPECT_EQ(format_mean_std(0.982, 0.011), "0.982 ± 0.011");
  EXPECT_EQ(format_mean_std(0.98249, 0.0104), "0.982 ± 0.010");
  EXPECT_EQ(format_mean_std(1.0, 0.0), "1.000 ± 0.000");
}

TEST(FormatTest, Trimmed) {
  EXPECT_EQ(format_trimmed(5.0), "5");
  EXPECT_EQ(format_trimmed(0.008), "0.008");
  EXPECT_EQ(format_trimmed(12.5), "12.5");
  EXPECT_EQ(format_trimmed(251.2794), "251.279");
  EXPECT_EQ(format_trimmed(-0.0001), "0");
  EXPECT_EQ(format_trimmed(624.96, 1), "625");
}

TEST(MeanDiceTest, SelectsFramesAndAggregates) {
  const Mask a = from_rows({"##", ".."});
  const Mask b = from_rows({"#.", ".."});
  const std::vector<Mask> masks{a, a, a};
  MaskSequence ref{{0, a}, {1, b}, {2, a}};
  const std::vector<std::int64_t> frames{0, 1, 2};
  const EvaluationReport r = mean_dice(masks, ref, frames, "x");
  ASSERT_EQ(r.dice.size(), 3u);
  EXPECT_DOUBLE_EQ(r.dice[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.mean, (2.0 + 2.0 / 3.0) / 3.0);
  EXPECT_EQ(r.n_frames, 3);
  const std::vector<std::int64_t> missing{3};
  EXPECT_THROW(mean_dice(masks, ref, missing, "x"), PreconditionError);
  ref.erase(2);
  const std::vector<std::int64_t> two{2};
  EXPECT_THROW(mean_dice(masks, ref, two, "x"), PreconditionError);
}

TEST(MeanDiceTest, RenderedReports) {
  const Mask a = from_rows({"##"});
  const std::vector<Mask> masks{a};
  const MaskSequence ref{{0, a}};
  const std::vector<std::int64_t> frames{0};
  const EvaluationReport r = mean_dice(masks, ref, frames, "HA1 vs machine");
  const std::string text = render_text(r);
  EXPECT_NE(text.find("mean dice: 1.000 ± 0.000"), std::string::npos);
  EXPECT_NE(text.find("sample standard deviation"), std::string::npos);
  const std::string json = render_json(r);
  EXPECT_NE(json.find("\"formatted\": \"1.000 ± 0.000\""), std::string::npos);
}

TEST(SelectFramesTest, Strategies) {
  EXPECT_EQ(select_frames(90, 5, FrameStrategy::kUniform), (std::vector<std::int64_t>{0, 22, 45, 67, 89}));
  EXPECT_EQ(select_frames(10, 3, FrameStrategy::kStride), (std::vector<std::int64_t>{0, 3, 6}));
  EXPECT_EQ(select_frames(3, 10, FrameStrategy::kUniform), (std::vector<std::int64_t>{0, 1, 2}));
  EXPECT_EQ(select_frames(4, 0, FrameStrategy::kAll).size(), 4u);
  EXPECT_EQ(select_frames(7, 1, FrameStrategy::kUniform), (std::vector<std::int64_t>{0}));
  EXPECT_THROW(select_frames(0, 1, FrameStrategy::kAll), PreconditionError);
  EXPECT_THROW(select_frames(5, 0, FrameStrategy::kUniform), PreconditionError);
}

TEST(SelectFramesTest, UniformIncludesEndsAndIsSorted) {
  for (std::int64_t n_frames : {2, 7, 90, 1001}) {
    for (std::int64_t n = 2; n < std::min<std::int64_t>(n_frames, 40); ++n) {
      const auto f = select_frames(n_frames, n, FrameStrategy::kUniform);
      ASSERT_EQ(static_cast<std::int64_t>(f.size()), n);
      EXPECT_EQ(f.front(), 0);
      EXPECT_EQ(f.back(), n_frames - 1);
      EXPECT_TRUE(std::adjacent_find(f.begin(), f.end(), std::greater_equal<>()) == f.end());
    }
  }
}

TEST(SelectFramesTest, ParsesText) {
  EXPECT_EQ(parse_frame_selection("uniform:5", 90), select_frames(90, 5, FrameStrategy::kUniform));
  EXPECT_EQ(parse_frame_selection("stride:3", 10), select_frames(10, 3, FrameStrategy::kStride));
  EXPECT_EQ(parse_frame_selection("all", 3).size(), 3u);
  EXPECT_EQ(parse_frame_selection("1, 5,9", 10), (std::vector<std::int64_t>{1, 5, 9}));
  EXPECT_THROW(parse_frame_selection("uniform:x", 10), FormatError);
  EXPECT_THROW(parse_frame_selection("1,,2", 10), FormatError);
  EXPECT_THROW(parse_frame_selection("12", 10), PreconditionError);
}

class ConcordanceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    a_ = from_rows({"####", "...."});
    b_ = from_rows({"###.", "...."});
    c_ = from_rows({"##..", "...."});
    set_.reference_id = "HA1";
    set_.raters["HA1"] = {{0, a_}, {1, a_}};
    set_.raters["HA2"] = {{0, b_}, {1, a_}};
    set_.raters["HA3"] = {{0, c_}, {1, b_}};
    machine_.masks = {a_, b_};
    machine_.flags.assign(2, FrameFlag::kTracked);
  }
  Mask a_, b_, c_;
  RaterSet set_;
  AnnotationSet machine_;
};

TEST_F(ConcordanceTest, MachineAndPooledColumns) {
  const std::vector<std::int64_t> frames{0, 1};
  const ConcordanceRow row = concordance_report(set_, machine_, frames, "phantom");
  EXPECT_DOUBLE_EQ(row.machine.dice[0], 1.0);
  EXPECT_DOUBLE_EQ(row.machine.dice[1], 6.0 / 7.0);
  // HA2: {6/7, 1}; HA3: {4/6, 6/7}, pooled rater-major.
  ASSERT_EQ(row.pooled.size(), 4u);
  EXPECT_DOUBLE_EQ(row.pooled[0], 6.0 / 7.0);
  EXPECT_DOUBLE_EQ(row.pooled[1], 1.0);
  EXPECT_DOUBLE_EQ(row.pooled[2], 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(row.pooled[3], 6.0 / 7.0);
  EXPECT_DOUBLE_EQ(row.pooled_stats.mean, mean_std(row.pooled).mean);
  EXPECT_EQ(row.per_rater.size(), 2u);
  EXPECT_EQ(format_concordance_cells(row),
            format_mean_std(row.machine.mean, row.machine.stddev) + " | " + format_mean_std(row.pooled_stats));
  const std::vector<ConcordanceRow> rows{row};
  EXPECT_NE(render_text(rows).find("phantom    | " + format_concordance_cells(row)), std::string::npos);
  EXPECT_NE(render_json(rows).find("\"experiment\": \"phantom\""), std::string::npos);
}

TEST_F(ConcordanceTest, Validation) {
  const std::vector<std::int64_t> frames{0};
  RaterSet missing_frame = set_;
  missing_frame.raters["HA3"].erase(1);
  EXPECT_THROW(concordance_report(missing_frame, machine_, frames, "x"), PreconditionError);
  RaterSet wrong_res = set_;
  wrong_res.raters["HA2"][1] = Mask(Resolution{3, 3});
  EXPECT_THROW(concordance_report(wrong_res, machine_, frames, "x"), ResolutionMismatch);
  RaterSet no_ref = set_;
  no_ref.reference_id = "HA9";
  EXPECT_THROW(concordance_report(no_ref, machine_, frames, "x"), PreconditionError);
}

TEST(SpeedTest, CellFormat) {
  TimingLog log;
  log["HA1"] = {{0, 120.0}, {1, 130.0}};
  log["HA2"] = {{0, 125.0}};
  RunSummary machine;
  machine.fps = 5.0;
  const SpeedReport r = speed_report(log, machine);
  EXPECT_DOUBLE_EQ(r.human_seconds_per_frame, 125.0);
  EXPECT_DOUBLE_EQ(r.human_fps, 0.008);
  EXPECT_DOUBLE_EQ(r.speedup, 625.0);
  EXPECT_EQ(format_speed_cell(r), "0.008 fps / 5 fps");
  EXPECT_EQ(format_speedup(r.speedup), "625×");
  EXPECT_NE(render_text(r).find("625×"), std::string::npos);
  EXPECT_THROW(speed_report({}, machine), PreconditionError);
}

TEST(SpeedTest, TimingLogParsing) {
  const TimingLog log = parse_timing_log("rater,frame,seconds\nHA1,0,120\n# comment\n\nHA2, 3 ,4.5\r\n");
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log.at("HA2")[0], (std::pair<std::int64_t, double>{3, 4.5}));
  EXPECT_EQ(parse_timing_log("HA1,0,1\n").size(), 1u);  // header optional
  EXPECT_THROW(parse_timing_log("rater,frame,seconds\n"), FormatError);
  EXPECT_THROW(parse_timing_log("HA1,0\n"), FormatError);
  EXPECT_THROW(parse_timing_log("HA1,0,-3\n"), FormatError);
  EXPECT_THROW(parse_timing_log("HA1,x,3\n"), FormatError);
}

TEST(RleTest, StartsWithBackgroundRun) {
  EXPECT_EQ(rle_encode(from_rows({"##..", ".#.."})), (std::vector<std::uint32_t>{0, 2, 3, 1, 2}));
  EXPECT_EQ(rle_encode(from_rows({"...."})), (std::vector<std::uint32_t>{4}));
  EXPECT_EQ(rle_encode(from_rows({"..##"})), (std::vector<std::uint32_t>{2, 2}));
}

TEST(RleTest, RoundTripOnRandomMasks) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Resolution res{1 + static_cast<int>(rng() % 40), 1 + static_cast<int>(rng() % 40)};
    const Mask m = random_mask(rng, res, static_cast<double>(rng() % 101) / 100.0);
    const auto runs = rle_encode(m);
    ASSERT_EQ(rle_decode(runs, res), m);
  }
}

TEST(RleTest, DecodeRejectsBadCoverage) {
  const std::vector<std::uint32_t> short_runs{1, 2};
  EXPECT_THROW(rle_decode(short_runs, Resolution{2, 2}), FormatError);
  const std::vector<std::uint32_t> long_runs{1, 4};
  EXPECT_THROW(rle_decode(long_runs, Resolution{2, 2}), FormatError);
}

TEST(RleTest, FileRoundTrip) {
  AnnotationSet a;
  a.masks = {from_rows({"#..", ".#."}), from_rows({"...", "..."}), from_rows({"###", "###"})};
  a.flags.assign(3, FrameFlag::kTracked);
  const std::string text = export_rle(a);
  EXPECT_EQ(text.substr(0, text.find('\n', text.find("frames"))), "seedtrack-rle 1\nsize 3 2\nframes 3");
  EXPECT_EQ(import_rle(text), a.masks);
  EXPECT_THROW(import_rle("other 1\n"), FormatError);
  EXPECT_THROW(import_rle("seedtrack-rle 1\nsize 3 2\nframes 2\n0 6\n"), FormatError);
  EXPECT_THROW(import_rle("seedtrack-rle 1\nsize 3 2\nframes 1\n0 6 x\n"), FormatError);
  EXPECT_THROW(import_rle("seedtrack-rle 1\nsize 3 2\nframes 1\n1 6\n"), FormatError);
  EXPECT_THROW(import_rle("seedtrack-rle 1\nsize 0 2\nframes 0\n"), FormatError);
}

}  // namespace
}  // namespace seedtrack::eval
