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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seedtrack/image.h"
#include "seedtrack/pipeline.h"
#include "seedtrack/session_store.h"

namespace seedtrack::eval {

using MaskSequence = std::map<std::int64_t, Mask>;

/// 2|A∩B| / (|A|+|B|). Two empty masks agree perfectly (1.0); exactly one
/// empty mask gives 0.0. Throws ResolutionMismatch.
double dice(const Mask& a, const Mask& b);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1); 0 when n < 2
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

/// "0.982 ± 0.011"
std::string format_mean_std(double mean, double stddev);
inline std::string format_mean_std(const MeanStd& m) { return format_mean_std(m.mean, m.stddev); }

struct EvaluationReport {
  std::string label;
  std::vector<std::int64_t> frames;
  std::vector<double> dice;  // parallel to frames
  double mean = 0.0;
  double stddev = 0.0;
  std::int64_t n_frames = 0;
};

/// Per-frame Dice of `masks[k]` against `reference[k]` over `frames`.
EvaluationReport mean_dice(const std::vector<Mask>& masks, const MaskSequence& reference,
                           std::span<const std::int64_t> frames, std::string label);
EvaluationReport mean_dice(const AnnotationSet& annotations, const MaskSequence& reference,
                           std::span<const std::int64_t> frames,
                           std::string label = "HA1 vs machine");

std::string render_text(const EvaluationReport& report);
std::string render_json(const EvaluationReport& report);

// ---------------------------------------------------------------------------
// Frame selection

enum class FrameStrategy { kUniform, kStride, kAll };

/// uniform: n indices round(i·(N−1)/(n−1)), always including first and last.
/// stride: every floor(N/n)-th index from 0, n of them. all: 0..N−1.
/// n >= N yields every index.
std::vector<std::int64_t> select_frames(std::int64_t frame_count, std::int64_t n,
                                        FrameStrategy strategy);

/// Accepts "all", "uniform:N", "stride:N" or an explicit "1,5,9" list.
std::vector<std::int64_t> parse_frame_selection(std::string_view text, std::int64_t frame_count);

// ---------------------------------------------------------------------------
// Inter-rater concordance

struct RaterSet {
  std::string reference_id;
  std::map<std::string, MaskSequence> raters;  // includes the reference

  /// Throws PreconditionError / ResolutionMismatch unless all raters cover the
  /// same frames at one resolution.
  void validate() const;
};

struct ConcordanceRow {
  std::string experiment;
  EvaluationReport machine;   // reference vs machine
  std::vector<double> pooled;  // reference vs every other rater, rater-major
  MeanStd pooled_stats;
  std::map<std::string, EvaluationReport> per_rater;
};

ConcordanceRow concordance_report(const RaterSet& raters, const AnnotationSet& machine,
                                  std::span<const std::int64_t> frames, std::string experiment);

/// "0.983 ± 0.008 | 0.986 ± 0.005"
std::string format_concordance_cells(const ConcordanceRow& row);
std::string render_text(std::span<const ConcordanceRow> rows);
std::string render_json(std::span<const ConcordanceRow> rows);

// ---------------------------------------------------------------------------
// Annotation speed

/// rater -> (frame index, seconds spent) entries.
using TimingLog = std::map<std::string, std::vector<std::pair<std::int64_t, double>>>;

/// CSV with header `rater,frame,seconds`.
TimingLog parse_timing_log(const std::string& text);

struct SpeedReport {
  double human_seconds_per_frame = 0.0;
  double human_fps = 0.0;
  double machine_fps = 0.0;
  double speedup = 0.0;  // machine fps / human fps
};

SpeedReport speed_report(const TimingLog& human_times, const RunSummary& machine_run);

/// "0.008 fps / 5 fps"
std::string format_speed_cell(const SpeedReport& report);
/// "625×"
std::string format_speedup(double speedup);
std::string render_text(const SpeedReport& report);
std::string render_json(const SpeedReport& report);

/// Fixed three decimals with trailing zeros (and a bare point) removed.
std::string format_trimmed(double value, int max_decimals = 3);

// ---------------------------------------------------------------------------
// Run-length export

/// Row-major alternating run lengths, starting with a (possibly zero-length)
/// background run.
std::vector<std::uint32_t> rle_encode(const Mask& mask);
/// Throws FormatError when the runs do not cover the image exactly.
Mask rle_decode(std::span<const std::uint32_t> runs, Resolution resolution);

/// Text file: `seedtrack-rle 1`, `size W H`, `frames N`, then one
/// `<index> <runs...>` line per frame.
std::string export_rle(const AnnotationSet& annotations);
std::vector<Mask> import_rle(const std::string& text);

}  // namespace seedtrack::eval
