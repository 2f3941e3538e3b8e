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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "seedtrack/errors.h"

namespace seedtrack::eval {
namespace {

using nlohmann::json;

std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

constexpr const char* kStdNote = "± is the sample standard deviation (n-1 denominator)";

}  // namespace

double dice(const Mask& a, const Mask& b) {
  if (a.resolution() != b.resolution()) {
    throw ResolutionMismatch("dice on " + a.resolution().str() + " vs " + b.resolution().str());
  }
  std::size_t na = 0, nb = 0, inter = 0;
  const auto pa = a.bytes();
  const auto pb = b.bytes();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool x = pa[i] != 0, y = pb[i] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::string format_mean_std(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", mean, stddev);
  return buf;
}

EvaluationReport mean_dice(const std::vector<Mask>& masks, const MaskSequence& reference,
                           std::span<const std::int64_t> frames, std::string label) {
  EvaluationReport r;
  r.label = std::move(label);
  for (const std::int64_t k : frames) {
    if (k < 0 || k >= static_cast<std::int64_t>(masks.size())) {
      throw PreconditionError("frame " + std::to_string(k) + " missing from annotations");
    }
    const auto it = reference.find(k);
    if (it == reference.end()) throw PreconditionError("frame " + std::to_string(k) + " missing from reference");
    r.frames.push_back(k);
    r.dice.push_back(dice(masks[static_cast<std::size_t>(k)], it->second));
  }
  const MeanStd ms = mean_std(r.dice);
  r.mean = ms.mean;
  r.stddev = ms.stddev;
  r.n_frames = static_cast<std::int64_t>(r.dice.size());
  return r;
}

EvaluationReport mean_dice(const AnnotationSet& annotations, const MaskSequence& reference,
                           std::span<const std::int64_t> frames, std::string label) {
  return mean_dice(annotations.masks, reference, frames, std::move(label));
}

std::string render_text(const EvaluationReport& r) {
  std::ostringstream ss;
  ss << r.label << "  (n=" << r.n_frames << ")\n";
  ss << std::setw(8) << "frame" << "  " << "dice\n";
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    ss << std::setw(8) << r.frames[i] << "  " << std::fixed << std::setprecision(6) << r.dice[i] << "\n";
  }
  ss << "mean dice: " << format_mean_std(r.mean, r.stddev) << "\n";
  ss << "note: " << kStdNote << "\n";
  return ss.str();
}

std::string render_json(const EvaluationReport& r) {
  const json j = {{"label", r.label},       {"frames", r.frames},
                  {"dice", r.dice},         {"mean", r.mean},
                  {"std", r.stddev},        {"n_frames", r.n_frames},
                  {"formatted", format_mean_std(r.mean, r.stddev)},
                  {"std_definition", "sample"}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::vector<std::int64_t> select_frames(std::int64_t frame_count, std::int64_t n,
                                        FrameStrategy strategy) {
  if (frame_count <= 0) throw PreconditionError("frame selection on an empty session");
  std::vector<std::int64_t> out;
  if (strategy == FrameStrategy::kAll || n >= frame_count) {
    for (std::int64_t k = 0; k < frame_count; ++k) out.push_back(k);
    return out;
  }
  if (n <= 0) throw PreconditionError("frame count to select must be positive");
  if (n == 1) return {0};
  if (strategy == FrameStrategy::kStride) {
    const std::int64_t step = frame_count / n;
    for (std::int64_t i = 0; i < n; ++i) out.push_back(i * step);
    return out;
  }
  for (std::int64_t i = 0; i < n; ++i) {
    out.push_back(std::llround(static_cast<double>(i) * static_cast<double>(frame_count - 1) /
                               static_cast<double>(n - 1)));
  }
  return out;
}

std::vector<std::int64_t> parse_frame_selection(std::string_view text, std::int64_t frame_count) {
  text = trim(text);
  if (text == "all") return select_frames(frame_count, frame_count, FrameStrategy::kAll);
  if (text.rfind("uniform:", 0) == 0) {
    return select_frames(frame_count, parse_int(text.substr(8), "frame count"), FrameStrategy::kUniform);
  }
  if (text.rfind("stride:", 0) == 0) {
    return select_frames(frame_count, parse_int(text.substr(7), "frame count"), FrameStrategy::kStride);
  }
  std::vector<std::int64_t> out;
  for (auto part : split(text, ',')) {
    const std::int64_t k = parse_int(trim(part), "frame index");
    if (k < 0 || k >= frame_count) throw PreconditionError("frame " + std::to_string(k) + " outside session");
    out.push_back(k);
  }
  if (out.empty()) throw FormatError("empty frame list");
  return out;
}

// ---------------------------------------------------------------------------

void RaterSet::validate() const {
  const auto ref = raters.find(reference_id);
  if (ref == raters.end()) throw PreconditionError("reference rater '" + reference_id + "' missing");
  if (ref->second.empty()) throw PreconditionError("reference rater has no masks");
  const Resolution res = ref->second.begin()->second.resolution();
  for (const auto& [id, seq] : raters) {
    if (seq.size() != ref->second.size()) {
      throw PreconditionError("rater '" + id + "' covers a different frame set");
    }
    for (const auto& [k, m] : seq) {
      if (!ref->second.contains(k)) throw PreconditionError("rater '" + id + "' covers a different frame set");
      if (m.resolution() != res) throw ResolutionMismatch("rater '" + id + "' mask " + m.resolution().str());
    }
  }
}

ConcordanceRow concordance_report(const RaterSet& raters, const AnnotationSet& machine,
                                  std::span<const std::int64_t> frames, std::string experiment) {
  raters.validate();
  const MaskSequence& ref = raters.raters.at(raters.reference_id);
  ConcordanceRow row;
  row.experiment = std::move(experiment);
  row.machine = mean_dice(machine.masks, ref, frames, raters.reference_id + " vs machine");
  for (const auto& [id, seq] : raters.raters) {
    if (id == raters.reference_id) continue;
    std::vector<Mask> masks;
    // Index the rater's sequence densely for mean_dice.
    std::int64_t last = seq.empty() ? -1 : seq.rbegin()->first;
    masks.assign(static_cast<std::size_t>(last + 1), Mask(ref.begin()->second.resolution()));
    for (const auto& [k, m] : seq) masks[static_cast<std::size_t>(k)] = m;
    for (std::int64_t k : frames) {
      if (!seq.contains(k)) throw PreconditionError("frame " + std::to_string(k) + " missing for rater '" + id + "'");
    }
    EvaluationReport r = mean_dice(masks, ref, frames, raters.reference_id + " vs " + id);
    row.pooled.insert(row.pooled.end(), r.dice.begin(), r.dice.end());
    row.per_rater.emplace(id, std::move(r));
  }
  row.pooled_stats = mean_std(row.pooled);
  return row;
}

std::string format_concordance_cells(const ConcordanceRow& row) {
  return format_mean_std(row.machine.mean, row.machine.stddev) + " | " +
         format_mean_std(row.pooled_stats);
}

std::string render_text(std::span<const ConcordanceRow> rows) {
  std::size_t width = std::string("Experiment").size();
  for (const auto& r : rows) width = std::max(width, r.experiment.size());
  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(width)) << "Experiment"
     << " | ref vs machine | ref vs other raters\n";
  for (const auto& r : rows) {
    ss << std::left << std::setw(static_cast<int>(width)) << r.experiment << " | "
       << format_concordance_cells(r) << "   (n=" << r.machine.n_frames << ")\n";
  }
  ss << "\nper-rater:\n";
  for (const auto& r : rows) {
    for (const auto& [id, rep] : r.per_rater) {
      ss << "  " << r.experiment << "  " << rep.label << ": " << format_mean_std(rep.mean, rep.stddev)
         << "\n";
    }
  }
  ss << "note: " << kStdNote << "; the other-rater column pools every per-frame, per-rater value\n";
  return ss.str();
}

std::string render_json(std::span<const ConcordanceRow> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json per = json::object();
    for (const auto& [id, rep] : r.per_rater) {
      per[id] = {{"mean", rep.mean}, {"std", rep.stddev}, {"dice", rep.dice}};
    }
    arr.push_back({{"experiment", r.experiment},
                   {"frames", r.machine.frames},
                   {"machine", {{"mean", r.machine.mean}, {"std", r.machine.stddev}, {"dice", r.machine.dice}}},
                   {"raters_pooled", {{"mean", r.pooled_stats.mean}, {"std", r.pooled_stats.stddev}, {"n", r.pooled_stats.n}}},
                   {"per_rater", per},
                   {"formatted", format_concordance_cells(r)}});
  }
  return json({{"rows", arr}, {"std_definition", "sample"}}).dump(2) + "\n";
}

// ---------------------------------------------------------------------------

TimingLog parse_timing_log(const std::string& text) {
  TimingLog log;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    if (header) {
      header = false;
      if (l == "rater,frame,seconds") continue;
    }
    const auto fields = split(l, ',');
    if (fields.size() != 3) throw FormatError("timing log line " + std::to_string(line_no) + ": expected 3 fields");
    const std::string rater(trim(fields[0]));
    const std::int64_t frame = parse_int(trim(fields[1]), "frame index");
    double seconds = 0.0;
    const auto s = trim(fields[2]);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seconds);
    if (ec != std::errc() || ptr != s.data() + s.size() || !(seconds > 0.0)) {
      throw FormatError("timing log line " + std::to_string(line_no) + ": bad seconds");
    }
    log[rater].emplace_back(frame, seconds);
  }
  if (log.empty()) throw FormatError("timing log has no entries");
  return log;
}

SpeedReport speed_report(const TimingLog& human_times, const RunSummary& machine_run) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& [rater, entries] : human_times) {
    for (const auto& [frame, seconds] : entries) {
      total += seconds;
      ++n;
    }
  }
  if (n == 0) throw PreconditionError("no human timing entries");
  SpeedReport r;
  r.human_seconds_per_frame = total / static_cast<double>(n);
  r.human_fps = 1.0 / r.human_seconds_per_frame;
  r.machine_fps = machine_run.fps;
  // machine_fps / human_fps, written to avoid a second rounding step.
  r.speedup = r.machine_fps * r.human_seconds_per_frame;
  return r;
}

std::string format_trimmed(double value, int max_decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", max_decimals, value);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string format_speed_cell(const SpeedReport& r) {
  char human[32];
  std::snprintf(human, sizeof(human), "%.3f", r.human_fps);
  return std::string(human) + " fps / " + format_trimmed(r.machine_fps) + " fps";
}

std::string format_speedup(double speedup) { return format_trimmed(speedup, 1) + "×"; }

std::string render_text(const SpeedReport& r) {
  std::ostringstream ss;
  ss << "Annotation speed (annotators / machine): " << format_speed_cell(r) << "\n";
  ss << "human seconds per frame: " << format_trimmed(r.human_seconds_per_frame, 3) << "\n";
  ss << "speedup: " << format_speedup(r.speedup) << "\n";
  return ss.str();
}

std::string render_json(const SpeedReport& r) {
  const json j = {{"human_seconds_per_frame", r.human_seconds_per_frame},
                  {"human_fps", r.human_fps},
                  {"machine_fps", r.machine_fps},
                  {"speedup", r.speedup},
                  {"formatted", format_speed_cell(r)},
                  {"speedup_formatted", format_speedup(r.speedup)}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> rle_encode(const Mask& mask) {
  std::vector<std::uint32_t> runs;
  bool current = false;  // background first
  std::uint32_t len = 0;
  const auto b = mask.bytes();
  for (const std::uint8_t v : b) {
    const bool on = v != 0;
    if (on != current) {
      runs.push_back(len);
      len = 0;
      current = on;
    }
    ++len;
  }
  runs.push_back(len);
  return runs;
}

Mask rle_decode(std::span<const std::uint32_t> runs, Resolution resolution) {
  Mask m(resolution);
  std::size_t pos = 0;
  bool on = false;
  const std::size_t total = resolution.pixels();
  for (const std::uint32_t len : runs) {
    if (pos + len > total) throw FormatError("RLE runs exceed image size");
    if (on) {
      for (std::size_t i = pos; i < pos + len; ++i) m.set_index(i);
    }
    pos += len;
    on = !on;
  }
  if (pos != total) throw FormatError("RLE runs cover " + std::to_string(pos) + " of " + std::to_string(total) + " pixels");
  return m;
}

std::string export_rle(const AnnotationSet& annotations) {
  const Resolution res = annotations.masks.empty() ? Resolution{} : annotations.masks.front().resolution();
  std::ostringstream ss;
  ss << "seedtrack-rle 1\n";
  ss << "size " << res.width << " " << res.height << "\n";
  ss << "frames " << annotations.masks.size() << "\n";
  for (std::size_t k = 0; k < annotations.masks.size(); ++k) {
    ss << k;
    for (auto r : rle_encode(annotations.masks[k])) ss << " " << r;
    ss << "\n";
  }
  return ss.str();
}

std::vector<Mask> import_rle(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  std::string key;
  Resolution res;
  std::size_t n = 0;
  if (!(in >> magic >> version) || magic != "seedtrack-rle" || version != 1) throw FormatError("not a seedtrack RLE file");
  if (!(in >> key >> res.width >> res.height) || key != "size") throw FormatError("RLE: missing size");
  if (res.width <= 0 || res.height <= 0) throw FormatError("RLE: size must be positive");
  if (!(in >> key >> n) || key != "frames") throw FormatError("RLE: missing frame count");
  std::string line;
  std::getline(in, line);
  std::vector<Mask> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::getline(in, line)) throw FormatError("RLE: truncated at frame " + std::to_string(k));
    std::istringstream ls(line);
    std::size_t idx = 0;
    if (!(ls >> idx) || idx != k) throw FormatError("RLE: frames out of order");
    std::vector<std::uint32_t> runs;
    std::string token;
    while (ls >> token) {
      const std::int64_t r = parse_int(token, "run length");
      if (r < 0 || r > UINT32_MAX) throw FormatError("RLE: run length out of range at frame " + std::to_string(k));
      runs.push_back(static_cast<std::uint32_t>(r));
    }
    out.push_back(rle_decode(runs, res));
  }
  return out;
}

}  // namespace seedtrack::eval
