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

#include "seedtrack/session_store.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seedtrack/errors.h"
#include "seedtrack/png_io.h"

namespace seedtrack {
namespace {

using nlohmann::json;

constexpr std::string_view kPvDir = "pv";
constexpr std::string_view kDepthDir = "depth";
constexpr std::string_view kPoseDir = "pose";
constexpr std::string_view kPointCloudDir = "pc";

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json seed_to_json(const SeedPrompt& s) {
  return {{"frame_index", s.frame_index},
          {"x", s.x},
          {"y", s.y},
          {"label", "foreground"},
          {"origin", to_string(s.origin)}};
}

SeedPrompt seed_from_json(const json& j) {
  SeedPrompt s;
  s.frame_index = j.at("frame_index").get<std::int64_t>();
  s.x = j.at("x").get<int>();
  s.y = j.at("y").get<int>();
  s.origin = parse_seed_origin(j.at("origin").get<std::string>());
  return s;
}

json manifest_to_json(const SessionManifest& m) {
  json seeds = json::array();
  for (const auto& s : m.seed_prompts) seeds.push_back(seed_to_json(s));
  return {{"session_id", m.session_id},
          {"width", m.resolution.width},
          {"height", m.resolution.height},
          {"frame_count", m.frame_count},
          {"seed_prompts", seeds},
          {"created_at", m.created_at},
          {"capture_source", to_string(m.capture_source)},
          {"finalized", m.finalized}};
}

SessionManifest manifest_from_json(const json& j) {
  SessionManifest m;
  m.session_id = j.at("session_id").get<std::string>();
  m.resolution = {j.at("width").get<int>(), j.at("height").get<int>()};
  m.frame_count = j.at("frame_count").get<std::int64_t>();
  for (const auto& s : j.at("seed_prompts")) m.seed_prompts.push_back(seed_from_json(s));
  m.created_at = j.at("created_at").get<std::string>();
  m.capture_source = parse_capture_source(j.at("capture_source").get<std::string>());
  m.finalized = j.at("finalized").get<bool>();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  out << text;
  if (!out) throw StorageError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_pose(const Pose& pose) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < pose.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), pose[i]);
    out.append(buf, end);
    out.push_back(i % 4 == 3 ? '\n' : ' ');
  }
  return out;
}

Pose parse_pose(const std::string& text, const fs::path& path) {
  Pose pose{};
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (auto& v : pose) {
    while (p < end && (*p == ' ' || *p == '\n' || *p == '\t' || *p == '\r')) ++p;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) throw CorruptSession("bad pose file " + path.string());
    p = next;
  }
  return pose;
}

void write_blob(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void check_seed_bounds(const SeedPrompt& seed, Resolution res) {
  if (!res.contains(seed.x, seed.y)) {
    throw SeedOutOfBounds("seed (" + std::to_string(seed.x) + "," + std::to_string(seed.y) +
                          ") outside " + res.str());
  }
}

bool parse_frame_file(const fs::path& p, std::string_view ext, std::int64_t& index) {
  const std::string name = p.filename().string();
  if (name.size() != 6 + ext.size() + 1) return false;
  if (p.extension().string() != "." + std::string(ext)) return false;
  const auto [ptr, ec] = std::from_chars(name.data(), name.data() + 6, index);
  return ec == std::errc() && ptr == name.data() + 6;
}

}  // namespace

std::string_view to_string(SeedOrigin origin) {
  switch (origin) {
    case SeedOrigin::kCaptureCenter: return "capture_center";
    case SeedOrigin::kCaptureExplicit: return "capture_explicit";
    case SeedOrigin::kReviewClick: return "review_click";
  }
  return "capture_explicit";
}

std::string_view to_string(CaptureSource source) {
  switch (source) {
    case CaptureSource::kNetwork: return "network";
    case CaptureSource::kReplay: return "replay";
    case CaptureSource::kSynthetic: return "synthetic";
    case CaptureSource::kImport: return "import";
  }
  return "import";
}

SeedOrigin parse_seed_origin(std::string_view text) {
  if (text == "capture_center") return SeedOrigin::kCaptureCenter;
  if (text == "capture_explicit") return SeedOrigin::kCaptureExplicit;
  if (text == "review_click") return SeedOrigin::kReviewClick;
  throw FormatError("unknown seed origin '" + std::string(text) + "'");
}

CaptureSource parse_capture_source(std::string_view text) {
  if (text == "network") return CaptureSource::kNetwork;
  if (text == "replay") return CaptureSource::kReplay;
  if (text == "synthetic") return CaptureSource::kSynthetic;
  if (text == "import") return CaptureSource::kImport;
  throw FormatError("unknown capture source '" + std::string(text) + "'");
}

std::string_view to_string(FrameFlag flag) {
  switch (flag) {
    case FrameFlag::kTracked: return "tracked";
    case FrameFlag::kEmpty: return "empty";
    case FrameFlag::kReseeded: return "reseeded";
  }
  return "empty";
}

FrameFlag parse_frame_flag(std::string_view text) {
  if (text == "tracked") return FrameFlag::kTracked;
  if (text == "empty") return FrameFlag::kEmpty;
  if (text == "reseeded") return FrameFlag::kReseeded;
  throw FormatError("unknown frame flag '" + std::string(text) + "'");
}

std::string frame_file_name(std::int64_t index, std::string_view ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld.", static_cast<long long>(index));
  return std::string(buf) + std::string(ext);
}

// ---------------------------------------------------------------------------
// SessionWriter

SessionWriter SessionWriter::create(const fs::path& store_root, const std::string& session_id,
                                    Resolution resolution, CaptureSource source) {
  if (session_id.empty() || session_id.find('/') != std::string::npos || session_id == "." ||
      session_id == "..") {
    throw PreconditionError("invalid session id '" + session_id + "'");
  }
  if (resolution.width <= 0 || resolution.height <= 0) {
    throw PreconditionError("resolution must be positive, got " + resolution.str());
  }
  std::error_code ec;
  fs::create_directories(store_root, ec);
  if (ec) throw StorageError("cannot create store root " + store_root.string());
  const fs::path dir = store_root / session_id;
  // create_directory is the atomic claim on the id.
  if (!fs::create_directory(dir, ec)) {
    if (!ec) throw DuplicateSession("session '" + session_id + "' already exists");
    throw StorageError("cannot create " + dir.string() + ": " + ec.message());
  }
  for (auto sub : {kPvDir, kDepthDir, kPoseDir, kPointCloudDir}) {
    fs::create_directory(dir / sub, ec);
    if (ec) throw StorageError("cannot create " + (dir / sub).string());
  }
  SessionManifest m;
  m.session_id = session_id;
  m.resolution = resolution;
  m.created_at = now_iso8601();
  m.capture_source = source;
  write_json(dir / kManifestFile, manifest_to_json(m));
  write_text(dir / kTimestampsFile, "");
  return SessionWriter(dir, std::move(m));
}

void SessionWriter::ensure_open() const {
  if (manifest_.finalized) throw SessionClosed("session '" + manifest_.session_id + "' is finalized");
  if (dir_.empty()) throw SessionClosed("session writer was aborted");
}

void SessionWriter::append_frame(const FrameRecord& frame) {
  ensure_open();
  if (frame.index != manifest_.frame_count) {
    throw OutOfOrderFrame("expected frame " + std::to_string(manifest_.frame_count) + ", got " +
                          std::to_string(frame.index));
  }
  if (frame.pv.resolution() != manifest_.resolution) {
    throw ResolutionMismatch("frame " + frame.pv.resolution().str() + " in " +
                             manifest_.resolution.str() + " session");
  }
  if (manifest_.frame_count > 0 && frame.timestamp_us < last_timestamp_us_) {
    throw OutOfOrderFrame("timestamp decreases at frame " + std::to_string(frame.index));
  }
  png::write(dir_ / kPvDir / frame_file_name(frame.index, "png"), frame.pv);
  if (frame.depth) png::write(dir_ / kDepthDir / frame_file_name(frame.index, "png"), *frame.depth);
  if (frame.pose) write_text(dir_ / kPoseDir / frame_file_name(frame.index, "txt"), format_pose(*frame.pose));
  if (frame.point_cloud) write_blob(dir_ / kPointCloudDir / frame_file_name(frame.index, "bin"), *frame.point_cloud);
  {
    std::ofstream ts(dir_ / kTimestampsFile, std::ios::app);
    ts << frame.timestamp_us << '\n';
    if (!ts) throw StorageError("cannot append timestamp");
  }
  last_timestamp_us_ = frame.timestamp_us;
  ++manifest_.frame_count;
}

void SessionWriter::attach_depth(std::int64_t index, const DepthImage& depth) {
  ensure_open();
  if (index < 0 || index >= manifest_.frame_count) {
    throw OutOfOrderFrame("no frame " + std::to_string(index) + " to attach depth to");
  }
  png::write(dir_ / kDepthDir / frame_file_name(index, "png"), depth);
}

void SessionWriter::attach_pose(std::int64_t index, const Pose& pose) {
  ensure_open();
  if (index < 0 || index >= manifest_.frame_count) {
    throw OutOfOrderFrame("no frame " + std::to_string(index) + " to attach pose to");
  }
  write_text(dir_ / kPoseDir / frame_file_name(index, "txt"), format_pose(pose));
}

void SessionWriter::add_seed(const SeedPrompt& seed) {
  ensure_open();
  check_seed_bounds(seed, manifest_.resolution);
  const std::int64_t last = std::max<std::int64_t>(manifest_.frame_count - 1, 0);
  if (seed.frame_index < 0 || seed.frame_index > last) {
    throw PreconditionError("seed frame " + std::to_string(seed.frame_index) +
                            " beyond last frame " + std::to_string(last));
  }
  manifest_.seed_prompts.push_back(seed);
}

Session SessionWriter::finalize() {
  ensure_open();
  if (manifest_.frame_count == 0) throw EmptySession("session '" + manifest_.session_id + "' has no frames");
  if (manifest_.seed_prompts.empty()) {
    throw PreconditionError("session '" + manifest_.session_id + "' has no seed prompt");
  }
  manifest_.finalized = true;
  write_json(dir_ / kManifestFile, manifest_to_json(manifest_));
  return Session::load(dir_);
}

void SessionWriter::abort() {
  if (dir_.empty() || manifest_.finalized) return;
  std::error_code ec;
  fs::remove_all(dir_, ec);
  dir_.clear();
}

// ---------------------------------------------------------------------------
// Session

Session Session::load(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) throw CorruptSession("missing manifest in " + dir.string());
  SessionManifest m;
  try {
    m = manifest_from_json(json::parse(read_text(manifest_path)));
  } catch (const json::exception& e) {
    throw CorruptSession("unreadable manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!m.finalized) throw CorruptSession("session '" + m.session_id + "' is not finalized");
  if (m.frame_count <= 0) throw CorruptSession("finalized session without frames");
  if (m.seed_prompts.empty()) throw CorruptSession("finalized session without seed prompts");

  std::int64_t pv_files = 0;
  for (const auto& entry : fs::directory_iterator(dir / kPvDir)) {
    std::int64_t idx = 0;
    if (parse_frame_file(entry.path(), "png", idx)) ++pv_files;
  }
  if (pv_files != m.frame_count) {
    throw CorruptSession("manifest lists " + std::to_string(m.frame_count) + " frames, found " +
                         std::to_string(pv_files));
  }
  for (std::int64_t k = 0; k < m.frame_count; ++k) {
    const fs::path p = dir / kPvDir / frame_file_name(k, "png");
    if (!fs::exists(p)) throw CorruptSession("missing frame " + p.string());
    Resolution r;
    try {
      r = png::read_size(p);
    } catch (const Error& e) {
      throw CorruptSession(e.what());
    }
    if (r != m.resolution) throw CorruptSession("frame " + std::to_string(k) + " is " + r.str());
  }
  for (const auto& s : m.seed_prompts) {
    if (!m.resolution.contains(s.x, s.y) || s.frame_index < 0 || s.frame_index >= m.frame_count) {
      throw CorruptSession("seed outside session bounds");
    }
  }

  std::vector<std::int64_t> ts;
  std::istringstream in(read_text(dir / kTimestampsFile));
  std::int64_t v = 0;
  while (in >> v) ts.push_back(v);
  if (static_cast<std::int64_t>(ts.size()) != m.frame_count) {
    throw CorruptSession("timestamp count does not match frame count");
  }
  if (!std::is_sorted(ts.begin(), ts.end())) throw CorruptSession("timestamps decrease");
  return Session(dir, std::move(m), std::move(ts));
}

void Session::check_index(std::int64_t index) const {
  if (index < 0 || index >= manifest_.frame_count) {
    throw PreconditionError("frame " + std::to_string(index) + " outside session of " +
                            std::to_string(manifest_.frame_count));
  }
}

RgbImage Session::pv(std::int64_t index) const {
  check_index(index);
  return png::read_rgb(dir_ / kPvDir / frame_file_name(index, "png"));
}

std::optional<DepthImage> Session::depth(std::int64_t index) const {
  check_index(index);
  const fs::path p = dir_ / kDepthDir / frame_file_name(index, "png");
  if (!fs::exists(p)) return std::nullopt;
  return png::read_depth(p);
}

std::optional<Pose> Session::pose(std::int64_t index) const {
  check_index(index);
  const fs::path p = dir_ / kPoseDir / frame_file_name(index, "txt");
  if (!fs::exists(p)) return std::nullopt;
  return parse_pose(read_text(p), p);
}

std::optional<std::vector<std::uint8_t>> Session::point_cloud(std::int64_t index) const {
  check_index(index);
  const fs::path p = dir_ / kPointCloudDir / frame_file_name(index, "bin");
  if (!fs::exists(p)) return std::nullopt;
  const std::string raw = read_text(p);
  return std::vector<std::uint8_t>(raw.begin(), raw.end());
}

FrameRecord Session::frame(std::int64_t index) const {
  FrameRecord f;
  f.index = index;
  f.timestamp_us = timestamp_us(index);
  f.pv = pv(index);
  f.depth = depth(index);
  f.pose = pose(index);
  f.point_cloud = point_cloud(index);
  return f;
}

std::vector<SessionManifest> list_sessions(const fs::path& store_root) {
  std::vector<SessionManifest> out;
  if (!fs::is_directory(store_root)) return out;
  for (const auto& entry : fs::directory_iterator(store_root)) {
    if (!entry.is_directory()) continue;
    const fs::path mp = entry.path() / kManifestFile;
    if (!fs::exists(mp)) continue;
    try {
      SessionManifest m = manifest_from_json(json::parse(read_text(mp)));
      if (m.finalized) out.push_back(std::move(m));
    } catch (const std::exception&) {
      // unreadable manifests are not listed
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.session_id < b.session_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Annotations

void save_annotations(const fs::path& run_dir, const AnnotationSet& a) {
  if (a.flags.size() != a.masks.size()) throw PreconditionError("flag count differs from mask count");
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw StorageError("cannot create " + run_dir.string());
  for (std::size_t k = 0; k < a.masks.size(); ++k) {
    png::write(run_dir / frame_file_name(static_cast<std::int64_t>(k), "png"), a.masks[k]);
  }
  json flags = json::array();
  for (auto f : a.flags) flags.push_back(to_string(f));
  json seeds = json::array();
  for (const auto& s : a.seed_history) seeds.push_back(seed_to_json(s));
  const Resolution res = a.masks.empty() ? Resolution{} : a.masks.front().resolution();
  json j = {{"session_id", a.session_id},
            {"object_id", a.object_id},
            {"frame_count", a.masks.size()},
            {"width", res.width},
            {"height", res.height},
            {"backend",
             {{"segmenter", a.backend.segmenter},
              {"tracker", a.backend.tracker},
              {"config_digest", a.backend.config_digest}}},
            {"seed_history", seeds},
            {"flags", flags},
            {"parent_run", a.parent_run}};
  write_json(run_dir / kRunManifestFile, j);
}

AnnotationSet load_annotations(const fs::path& run_dir) {
  const fs::path mp = run_dir / kRunManifestFile;
  if (!fs::exists(mp)) throw NotFound("no annotation run at " + run_dir.string());
  AnnotationSet a;
  std::int64_t n = 0;
  Resolution res;
  try {
    const json j = json::parse(read_text(mp));
    a.session_id = j.at("session_id").get<std::string>();
    a.object_id = j.at("object_id").get<int>();
    n = j.at("frame_count").get<std::int64_t>();
    res = {j.at("width").get<int>(), j.at("height").get<int>()};
    const auto& b = j.at("backend");
    a.backend = {b.at("segmenter").get<std::string>(), b.at("tracker").get<std::string>(),
                 b.at("config_digest").get<std::string>()};
    for (const auto& s : j.at("seed_history")) a.seed_history.push_back(seed_from_json(s));
    for (const auto& f : j.at("flags")) a.flags.push_back(parse_frame_flag(f.get<std::string>()));
    a.parent_run = j.value("parent_run", "");
  } catch (const json::exception& e) {
    throw CorruptSession("unreadable run manifest " + mp.string() + ": " + e.what());
  }
  if (a.object_id != AnnotationSet::kObjectId) throw CorruptSession("object_id must be 1");
  if (static_cast<std::int64_t>(a.flags.size()) != n) throw CorruptSession("flag count mismatch");
  a.masks.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const fs::path p = run_dir / frame_file_name(k, "png");
    if (!fs::exists(p)) throw CorruptSession("missing mask " + p.string());
    Mask m = png::read_mask(p);
    if (m.resolution() != res) throw CorruptSession("mask " + std::to_string(k) + " is " + m.resolution().str());
    a.masks.push_back(std::move(m));
  }
  return a;
}

void validate_annotations(const AnnotationSet& a, const Session& session) {
  if (a.object_id != AnnotationSet::kObjectId) throw PreconditionError("object_id must be 1");
  if (a.frame_count() != session.frame_count()) {
    throw PreconditionError("annotation set has " + std::to_string(a.frame_count()) +
                            " masks for " + std::to_string(session.frame_count()) + " frames");
  }
  if (a.flags.size() != a.masks.size()) throw PreconditionError("flag count mismatch");
  for (const auto& m : a.masks) {
    if (m.resolution() != session.resolution()) {
      throw ResolutionMismatch("mask " + m.resolution().str() + " in " +
                               session.resolution().str() + " session");
    }
  }
}

std::string next_run_id(const fs::path& session_dir) {
  const fs::path ann = session_dir / kAnnotationDir;
  int next = 1;
  if (fs::is_directory(ann)) {
    for (const auto& entry : fs::directory_iterator(ann)) {
      const std::string name = entry.path().filename().string();
      int n = 0;
      if (name.size() == 8 && name.rfind("run-", 0) == 0) {
        auto [ptr, ec] = std::from_chars(name.data() + 4, name.data() + 8, n);
        if (ec == std::errc()) next = std::max(next, n + 1);
      }
    }
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "run-%04d", next);
  return buf;
}

fs::path run_path(const fs::path& session_dir, const std::string& run_id) {
  return session_dir / kAnnotationDir / run_id;
}

void save_mask_sequence(const fs::path& dir, const std::map<std::int64_t, Mask>& masks) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create " + dir.string());
  for (const auto& [k, m] : masks) png::write(dir / frame_file_name(k, "png"), m);
}

std::map<std::int64_t, Mask> load_mask_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFound("no mask directory " + dir.string());
  std::map<std::int64_t, Mask> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::int64_t idx = 0;
    if (parse_frame_file(entry.path(), "png", idx)) out.emplace(idx, png::read_mask(entry.path()));
  }
  return out;
}

}  // namespace seedtrack
