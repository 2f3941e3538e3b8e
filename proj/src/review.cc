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

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seedtrack/errors.h"
#include "seedtrack/png_io.h"

namespace seedtrack::review {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFound("no file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json status_json(const RunStatus& s) {
  json j = {{"run_id", s.run_id},           {"session_id", s.session_id},
            {"kind", s.kind},               {"state", to_string(s.state)},
            {"frames_done", s.frames_done}, {"frame_count", s.frame_count},
            {"fps", s.fps}};
  if (!s.parent_run.empty()) j["parent_run"] = s.parent_run;
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

json manifest_json(const SessionManifest& m) {
  json seeds = json::array();
  for (const auto& s : m.seed_prompts) {
    seeds.push_back({{"frame_index", s.frame_index}, {"x", s.x}, {"y", s.y}, {"origin", to_string(s.origin)}});
  }
  return {{"session_id", m.session_id}, {"width", m.resolution.width},
          {"height", m.resolution.height}, {"frame_count", m.frame_count},
          {"seed_prompts", seeds}, {"created_at", m.created_at},
          {"capture_source", to_string(m.capture_source)}};
}

/// Maps a body field problem onto a 400 with a field diagnostic.
class BadRequest : public Error {
 public:
  BadRequest(std::string field, const std::string& what)
      : Error("BadRequest", what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

Session open_session(const fs::path& root, const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find('/') != std::string::npos ||
      !fs::exists(root / id / kManifestFile)) {
    throw NotFound("unknown session '" + id + "'");
  }
  return Session::load(root / id);
}

LabelRunConfig parse_config(const json& j) {
  LabelRunConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw BadRequest("config", "config must be an object");
  auto str = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw BadRequest(std::string("config.") + key, "must be a string");
    out = j[key].get<std::string>();
  };
  auto int_opt = [&](const char* key, std::optional<std::int64_t>& out) {
    if (!j.contains(key) || j[key].is_null()) return;
    if (!j[key].is_number_integer()) throw BadRequest(std::string("config.") + key, "must be an integer");
    out = j[key].get<std::int64_t>();
  };
  str("segmenter", cfg.backends.segmenter);
  str("tracker", cfg.backends.tracker);
  str("adapter", cfg.backends.adapter_command);
  int_opt("start_frame", cfg.start_frame);
  int_opt("stop_frame", cfg.stop_frame);
  return cfg;
}

}  // namespace

RgbImage render_overlay(const RgbImage& pv, const Mask& mask, double alpha, Rgb tint) {
  if (pv.resolution() != mask.resolution()) {
    throw ResolutionMismatch("overlay " + pv.resolution().str() + " vs mask " + mask.resolution().str());
  }
  RgbImage out = pv;
  const std::uint8_t t[3] = {tint.r, tint.g, tint.b};
  auto px = out.data();
  for (std::size_t i = 0; i < pv.resolution().pixels(); ++i) {
    if (!mask.at_index(i)) continue;
    for (int c = 0; c < 3; ++c) {
      const double v = (1.0 - alpha) * px[3 * i + c] + alpha * t[c];
      px[3 * i + c] = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

std::string_view to_string(RunState state) {
  switch (state) {
    case RunState::kQueued: return "queued";
    case RunState::kRunning: return "running";
    case RunState::kDone: return "done";
    case RunState::kFailed: return "failed";
  }
  return "failed";
}

// ---------------------------------------------------------------------------
// RunManager

RunManager::RunManager(std::filesystem::path store_root) : root_(std::move(store_root)) {}

RunManager::~RunManager() {
  wait_idle();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, lane] : lanes_) workers.push_back(std::move(lane.worker));
  }
  for (auto& t : workers) {
    if (t.joinable()) t.join();
  }
}

std::string RunManager::reserve_run_id(const std::string& session_id) {
  // caller holds mu_
  auto it = next_run_.find(session_id);
  int next = 0;
  if (it == next_run_.end()) {
    const std::string from_disk = next_run_id(root_ / session_id);
    next = std::stoi(from_disk.substr(4));
  } else {
    next = it->second;
  }
  next_run_[session_id] = next + 1;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "run-%04d", next);
  return buf;
}

RunStatus& RunManager::entry(const std::string& session_id, const std::string& run_id) {
  return runs_.at({session_id, run_id});
}

std::string RunManager::submit_label(const std::string& session_id, const LabelRunConfig& config) {
  const Session session = open_session(root_, session_id);
  check_backend_config(config.backends);
  std::string run_id;
  {
    std::lock_guard lock(mu_);
    run_id = reserve_run_id(session_id);
    RunStatus s;
    s.run_id = run_id;
    s.session_id = session_id;
    s.kind = "label";
    s.frame_count = session.frame_count();
    runs_[{session_id, run_id}] = s;
  }
  const fs::path out = run_path(session.path(), run_id);
  enqueue(session_id, {run_id, [session, config, out](const ProgressFn& progress) {
                         LabelRun run = label_session(session, config, progress);
                         save_run(out, run);
                         return run;
                       }});
  return run_id;
}

std::string RunManager::submit_reseed(const std::string& session_id, const std::string& parent_run,
                                      std::int64_t frame_index,
                                      const std::vector<std::pair<int, int>>& points,
                                      const LabelRunConfig& config) {
  const Session session = open_session(root_, session_id);
  check_backend_config(config.backends);
  const fs::path parent_dir = run_path(session.path(), parent_run);
  if (points.empty()) throw PreconditionError("reseed needs at least one point");
  if (frame_index < 0 || frame_index >= session.frame_count()) {
    throw PreconditionError("frame_index " + std::to_string(frame_index) + " outside session");
  }
  std::vector<SeedPrompt> seeds;
  for (const auto& [x, y] : points) {
    if (!session.resolution().contains(x, y)) {
      throw SeedOutOfBounds("point (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                            session.resolution().str());
    }
    seeds.push_back({frame_index, x, y, SeedOrigin::kReviewClick});
  }
  std::string run_id;
  {
    std::lock_guard lock(mu_);
    for (const auto& [key, st] : runs_) {
      if (key.first != session_id) continue;
      if (key.second == parent_run && (st.state == RunState::kQueued || st.state == RunState::kRunning)) {
        throw Conflict("run " + parent_run + " is still " + std::string(to_string(st.state)));
      }
      if (st.kind == "reseed" && st.parent_run == parent_run &&
          (st.state == RunState::kQueued || st.state == RunState::kRunning)) {
        throw Conflict("a reseed of " + parent_run + " is already " + std::string(to_string(st.state)));
      }
    }
    if (!fs::exists(parent_dir / kRunManifestFile)) throw NotFound("unknown run '" + parent_run + "'");
    run_id = reserve_run_id(session_id);
    RunStatus s;
    s.run_id = run_id;
    s.session_id = session_id;
    s.kind = "reseed";
    s.parent_run = parent_run;
    s.frame_count = session.frame_count();
    runs_[{session_id, run_id}] = s;
  }
  const fs::path out = run_path(session.path(), run_id);
  enqueue(session_id, {run_id, [session, config, parent_dir, parent_run, seeds, out](const ProgressFn& progress) {
                         const AnnotationSet parent = load_annotations(parent_dir);
                         LabelRun run = reseed(session, parent, seeds, config, progress);
                         run.annotations.parent_run = parent_run;
                         save_run(out, run);
                         return run;
                       }});
  return run_id;
}

void RunManager::enqueue(const std::string& session_id, Job job) {
  std::lock_guard lock(mu_);
  Lane& lane = lanes_[session_id];
  lane.queue.push_back(std::move(job));
  ++active_;
  if (!lane.busy) {
    lane.busy = true;
    if (lane.worker.joinable()) lane.worker.join();
    lane.worker = std::thread([this, session_id] { drain(session_id); });
  }
}

void RunManager::drain(const std::string& session_id) {
  for (;;) {
    Job job;
    {
      std::lock_guard lock(mu_);
      Lane& lane = lanes_[session_id];
      if (lane.queue.empty()) {
        lane.busy = false;
        return;
      }
      job = std::move(lane.queue.front());
      lane.queue.pop_front();
      entry(session_id, job.run_id).state = RunState::kRunning;
    }
    const auto t0 = Clock::now();
    auto progress = [&](std::int64_t done, std::int64_t total) {
      const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
      std::lock_guard lock(mu_);
      RunStatus& s = entry(session_id, job.run_id);
      s.frames_done = done;
      s.frame_count = total;
      s.fps = elapsed > 0.0 ? static_cast<double>(done) / elapsed : 0.0;
    };
    try {
      const LabelRun run = job.work(progress);
      const RunSummary summary = run_report(run);
      std::lock_guard lock(mu_);
      RunStatus& s = entry(session_id, job.run_id);
      s.state = RunState::kDone;
      s.frames_done = summary.frames;
      s.frame_count = summary.frames;
      s.fps = summary.fps;
    } catch (const Error& e) {
      spdlog::warn("run {}/{} failed: {}: {}", session_id, job.run_id, e.kind(), e.what());
      std::lock_guard lock(mu_);
      RunStatus& s = entry(session_id, job.run_id);
      s.state = RunState::kFailed;
      s.error = std::string(e.kind()) + ": " + e.what();
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      RunStatus& s = entry(session_id, job.run_id);
      s.state = RunState::kFailed;
      s.error = e.what();
    }
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

std::optional<RunStatus> RunManager::status(const std::string& run_id) const {
  {
    std::lock_guard lock(mu_);
    const RunStatus* found = nullptr;
    for (const auto& [key, s] : runs_) {
      if (key.second == run_id) found = &s;
    }
    if (found != nullptr) return *found;
  }
  if (!fs::is_directory(root_)) return std::nullopt;
  for (const auto& entry : fs::directory_iterator(root_)) {
    const fs::path dir = run_path(entry.path(), run_id);
    if (!fs::exists(dir / kRunManifestFile)) continue;
    const RunSummary summary = load_run_summary(dir);
    RunStatus s;
    s.run_id = run_id;
    s.session_id = entry.path().filename().string();
    s.kind = "label";
    try {
      s.parent_run = json::parse(read_file(dir / kRunManifestFile)).value("parent_run", "");
    } catch (const json::exception&) {
      throw CorruptSession("unreadable run manifest in " + dir.string());
    }
    if (!s.parent_run.empty()) s.kind = "reseed";
    s.state = RunState::kDone;
    s.frames_done = summary.frames;
    s.frame_count = summary.frames;
    s.fps = summary.fps;
    return s;
  }
  return std::nullopt;
}

void RunManager::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return active_ == 0; });
}

// ---------------------------------------------------------------------------
// HTTP

struct ReviewServer::Impl {
  httplib::Server http;
  std::thread thread;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& detail,
                const json& fields = json::object()) {
  send_json(res, status, {{"error", kind}, {"detail", detail}, {"fields", fields}});
}

int status_for(std::string_view kind) {
  if (kind == "NotFound" || kind == "CorruptSession") return 404;
  if (kind == "Conflict") return 409;
  return 400;
}

/// Runs a handler, translating library errors into HTTP responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const BadRequest& e) {
      send_error(res, 400, "BadRequest", e.what(), {{e.field(), e.what()}});
    } catch (const json::exception& e) {
      send_error(res, 400, "BadRequest", std::string("malformed JSON body: ") + e.what());
    } catch (const Error& e) {
      send_error(res, status_for(e.kind()), e.kind(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  };
}

std::int64_t frame_arg(const httplib::Request& req, std::size_t i) {
  return std::stoll(req.matches[i].str());
}

}  // namespace

ReviewServer::ReviewServer(std::filesystem::path store_root)
    : runs_(std::move(store_root)), impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  const fs::path root = runs_.store_root();

  auto load_session = [root](const std::string& id) { return open_session(root, id); };
  auto run_dir = [root](const std::string& id, const std::string& run) {
    const fs::path dir = run_path(root / id, run);
    if (!fs::exists(dir / kRunManifestFile)) throw NotFound("unknown run '" + run + "'");
    return dir;
  };

  http.Get("/sessions", guarded([root](const httplib::Request&, httplib::Response& res) {
    json arr = json::array();
    for (const auto& m : list_sessions(root)) arr.push_back(manifest_json(m));
    send_json(res, 200, {{"sessions", arr}});
  }));

  http.Get(R"(/sessions/([^/]+))", guarded([load_session](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, manifest_json(load_session(req.matches[1]).manifest()));
  }));

  http.Get(R"(/sessions/([^/]+)/frames/(\d+))",
           guarded([load_session](const httplib::Request& req, httplib::Response& res) {
             const Session s = load_session(req.matches[1]);
             const std::int64_t k = frame_arg(req, 2);
             if (k >= s.frame_count()) throw NotFound("no frame " + std::to_string(k));
             res.set_content(read_file(s.path() / "pv" / frame_file_name(k, "png")), "image/png");
           }));

  http.Get(R"(/sessions/([^/]+)/runs)", guarded([load_session](const httplib::Request& req, httplib::Response& res) {
    const Session s = load_session(req.matches[1]);
    json arr = json::array();
    const fs::path ann = s.path() / kAnnotationDir;
    std::vector<std::string> ids;
    if (fs::is_directory(ann)) {
      for (const auto& e : fs::directory_iterator(ann)) {
        if (e.is_directory() && fs::exists(e.path() / kRunManifestFile)) ids.push_back(e.path().filename().string());
      }
    }
    std::sort(ids.begin(), ids.end());
    send_json(res, 200, {{"runs", ids}});
  }));

  http.Get(R"(/sessions/([^/]+)/runs/([^/]+))",
           guarded([load_session, run_dir](const httplib::Request& req, httplib::Response& res) {
             load_session(req.matches[1]);
             const fs::path dir = run_dir(req.matches[1], req.matches[2]);
             res.set_content(read_file(dir / kRunManifestFile), "application/json");
           }));

  http.Get(R"(/sessions/([^/]+)/runs/([^/]+)/masks/(\d+))",
           guarded([load_session, run_dir](const httplib::Request& req, httplib::Response& res) {
             const Session s = load_session(req.matches[1]);
             const fs::path dir = run_dir(req.matches[1], req.matches[2]);
             const std::int64_t k = frame_arg(req, 3);
             if (k >= s.frame_count()) throw NotFound("no frame " + std::to_string(k));
             res.set_content(read_file(dir / frame_file_name(k, "png")), "image/png");
           }));

  http.Get(R"(/sessions/([^/]+)/runs/([^/]+)/overlay/(\d+))",
           guarded([load_session, run_dir](const httplib::Request& req, httplib::Response& res) {
             const Session s = load_session(req.matches[1]);
             const fs::path dir = run_dir(req.matches[1], req.matches[2]);
             const std::int64_t k = frame_arg(req, 3);
             if (k >= s.frame_count()) throw NotFound("no frame " + std::to_string(k));
             const Mask m = png::read_mask(dir / frame_file_name(k, "png"));
             const auto bytes = png::encode(render_overlay(s.pv(k), m));
             res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
           }));

  http.Post(R"(/sessions/([^/]+)/label)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = req.body.empty() ? json::object() : json::parse(req.body);
    if (!body.is_object()) throw BadRequest("body", "body must be a JSON object");
    const LabelRunConfig cfg = parse_config(body.value("config", json()));
    const std::string run_id = runs_.submit_label(req.matches[1], cfg);
    send_json(res, 202, {{"run_id", run_id}});
  }));

  http.Post(R"(/sessions/([^/]+)/runs/([^/]+)/reseed)",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
              const json body = json::parse(req.body);
              if (!body.is_object()) throw BadRequest("body", "body must be a JSON object");
              if (!body.contains("frame_index") || !body["frame_index"].is_number_integer()) {
                throw BadRequest("frame_index", "frame_index must be an integer");
              }
              if (!body.contains("points") || !body["points"].is_array() || body["points"].empty()) {
                throw BadRequest("points", "points must be a non-empty array of {x,y}");
              }
              std::vector<std::pair<int, int>> points;
              for (std::size_t i = 0; i < body["points"].size(); ++i) {
                const auto& p = body["points"][i];
                const std::string field = "points[" + std::to_string(i) + "]";
                if (!p.is_object() || !p.contains("x") || !p.contains("y") || !p["x"].is_number_integer() ||
                    !p["y"].is_number_integer()) {
                  throw BadRequest(field, "each point needs integer x and y");
                }
                points.emplace_back(p["x"].get<int>(), p["y"].get<int>());
              }
              const LabelRunConfig cfg = parse_config(body.value("config", json()));
              const std::string run_id = runs_.submit_reseed(req.matches[1], req.matches[2],
                                                             body["frame_index"].get<std::int64_t>(), points, cfg);
              send_json(res, 202, {{"run_id", run_id}});
            }));

  http.Get(R"(/runs/([^/]+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto s = runs_.status(req.matches[1]);
    if (!s) throw NotFound("unknown run '" + req.matches[1].str() + "'");
    send_json(res, 200, status_json(*s));
  }));
}

ReviewServer::~ReviewServer() { stop(); }

std::uint16_t ReviewServer::start(const std::string& host, std::uint16_t port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (!impl_->http.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw NetworkError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  return static_cast<std::uint16_t>(bound);
}

void ReviewServer::listen(const std::string& host, std::uint16_t port) {
  if (!impl_->http.listen(host, port)) throw NetworkError("cannot serve on " + host + ":" + std::to_string(port));
}

void ReviewServer::stop() {
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace seedtrack::review
