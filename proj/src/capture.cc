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

#include "seedtrack/capture.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <map>

#include "net.h"
#include "seedtrack/errors.h"

namespace seedtrack {
namespace {

using wire::Channel;
using wire::ControlMessage;
using wire::MessageType;
using wire::StreamFrameMessage;

bool valid_session_id(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos &&
         id.find('\0') == std::string::npos;
}

/// One connection's state machine. Owns at most one session writer.
class Connection {
 public:
  Connection(net::Socket& socket, const fs::path& root, const CaptureServer::Options& options)
      : socket_(socket), root_(root), options_(options) {}

  ConnectionOutcome run() {
    try {
      while (!done_) {
        wire::Message msg;
        try {
          msg = net::read_message(socket_, options_.max_payload);
        } catch (const FramingError& e) {
          fail(std::string("FramingError: ") + e.what());
          break;
        }
        if (const auto* c = std::get_if<ControlMessage>(&msg)) {
          on_control(*c);
        } else {
          on_frame(std::get<StreamFrameMessage>(msg));
        }
      }
    } catch (const NetworkError& e) {
      // Peer vanished: nothing to reply to.
      abort_session();
      outcome_.error = std::string("NetworkError: ") + e.what();
    } catch (const Error& e) {
      fail(std::string(e.kind()) + ": " + e.what());
    }
    return outcome_;
  }

 private:
  enum class State { kAwaitHello, kAwaitStart, kRecording };

  void on_control(const ControlMessage& c) {
    switch (c.kind) {
      case MessageType::kHello:
        if (state_ != State::kAwaitHello) return fail("unexpected HELLO");
        if (!valid_session_id(c.session_id)) return fail("invalid session id");
        if (fs::exists(root_ / c.session_id)) {
          return fail("DuplicateSession: session '" + c.session_id + "' already exists");
        }
        outcome_.session_id = c.session_id;
        state_ = State::kAwaitStart;
        reply(ControlMessage::ack("hello " + c.session_id));
        return;
      case MessageType::kStart:
        if (state_ != State::kAwaitStart) return fail("unexpected START");
        start_ = c;
        state_ = State::kRecording;
        reply(ControlMessage::ack("recording"));
        return;
      case MessageType::kStop:
        if (state_ != State::kRecording) return fail("not recording");
        return finish();
      case MessageType::kAck:
      case MessageType::kError:
      case MessageType::kFrame:
        return fail("unexpected message type from client");
    }
  }

  void on_frame(const StreamFrameMessage& f) {
    if (state_ != State::kRecording) return fail("not recording");
    switch (f.channel) {
      case Channel::kPv: return on_pv(f);
      case Channel::kDepth: {
        DepthImage d = wire::to_depth(f);
        if (writer_ && static_cast<std::int64_t>(f.index) < writer_->frame_count()) {
          writer_->attach_depth(static_cast<std::int64_t>(f.index), d);
        } else {
          pending_depth_[f.index] = std::move(d);
        }
        return;
      }
      case Channel::kPose: {
        Pose p = wire::to_pose(f);
        if (writer_ && static_cast<std::int64_t>(f.index) < writer_->frame_count()) {
          writer_->attach_pose(static_cast<std::int64_t>(f.index), p);
        } else {
          pending_pose_[f.index] = p;
        }
        return;
      }
    }
  }

  void on_pv(const StreamFrameMessage& f) {
    const Resolution res{f.width, f.height};
    if (!writer_) {
      writer_.emplace(SessionWriter::create(root_, outcome_.session_id, res, CaptureSource::kNetwork));
    } else if (res != writer_->resolution()) {
      return fail("ResolutionMismatch: resolution changed mid-session from " +
                  writer_->resolution().str() + " to " + res.str());
    }
    FrameRecord rec;
    rec.index = static_cast<std::int64_t>(f.index);
    rec.timestamp_us = static_cast<std::int64_t>(f.timestamp_us);
    rec.pv = wire::to_rgb(f);
    if (auto it = pending_depth_.find(f.index); it != pending_depth_.end()) {
      rec.depth = std::move(it->second);
      pending_depth_.erase(it);
    }
    if (auto it = pending_pose_.find(f.index); it != pending_pose_.end()) {
      rec.pose = it->second;
      pending_pose_.erase(it);
    }
    writer_->append_frame(rec);
    if (writer_->frame_count() == 1) bind_seed(res);
  }

  /// The seed always belongs to frame 0 of the recording.
  void bind_seed(Resolution res) {
    SeedPrompt seed;
    seed.frame_index = 0;
    if (start_.uses_center_seed()) {
      seed.x = res.width / 2;
      seed.y = res.height / 2;
      seed.origin = SeedOrigin::kCaptureCenter;
    } else {
      seed.x = start_.seed_x;
      seed.y = start_.seed_y;
      seed.origin = SeedOrigin::kCaptureExplicit;
    }
    writer_->add_seed(seed);
  }

  void finish() {
    if (!writer_) return fail("EmptySession: no PV frames before STOP");
    const auto leftovers = static_cast<std::int64_t>(pending_depth_.size() + pending_pose_.size());
    if (leftovers > 0) {
      spdlog::warn("session {}: dropping {} depth/pose frames without a matching PV frame",
                   outcome_.session_id, leftovers);
    }
    Session session = writer_->finalize();
    outcome_.finalized = true;
    outcome_.frames = session.frame_count();
    outcome_.dropped_auxiliary = leftovers;
    writer_.reset();
    done_ = true;
    reply(ControlMessage::ack("finalized " + session.id() + " frames=" +
                              std::to_string(session.frame_count())));
  }

  void reply(const ControlMessage& m) {
    try {
      net::write_message(socket_, m);
    } catch (const NetworkError&) {
      // The outcome already reflects what happened on our side.
    }
  }

  void abort_session() {
    if (writer_) {
      writer_->abort();
      writer_.reset();
    }
  }

  void fail(const std::string& why) {
    spdlog::warn("capture connection ({}): {}",
                 outcome_.session_id.empty() ? "no session" : outcome_.session_id, why);
    abort_session();
    outcome_.error = why;
    outcome_.finalized = false;
    done_ = true;
    reply(ControlMessage::error(why));
  }

  net::Socket& socket_;
  const fs::path& root_;
  const CaptureServer::Options& options_;
  State state_ = State::kAwaitHello;
  ControlMessage start_;
  std::optional<SessionWriter> writer_;
  std::map<std::uint64_t, DepthImage> pending_depth_;
  std::map<std::uint64_t, Pose> pending_pose_;
  ConnectionOutcome outcome_;
  bool done_ = false;
};

}  // namespace

struct CaptureServer::Impl {
  net::Socket listener;
  std::thread acceptor;
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::thread> workers;
  std::vector<std::shared_ptr<net::Socket>> live;
  bool stopping = false;
  Options options;
};

CaptureServer::CaptureServer(const std::string& bind_address, std::filesystem::path store_root,
                             Options options)
    : impl_(std::make_unique<Impl>()), store_root_(std::move(store_root)) {
  std::error_code ec;
  fs::create_directories(store_root_, ec);
  if (ec || !fs::is_directory(store_root_)) throw StorageError("store root " + store_root_.string() + " is not writable");
  impl_->options = std::move(options);
  impl_->listener = net::listen_on(net::parse_host_port(bind_address), port_);
  spdlog::info("capture server listening on port {}, store {}", port_, store_root_.string());
  impl_->acceptor = std::thread([this]() {
    for (;;) {
      auto sock = std::make_shared<net::Socket>(net::accept_from(impl_->listener));
      if (!sock->valid()) return;
      std::lock_guard lock(impl_->mu);
      if (impl_->stopping) return;
      impl_->live.push_back(sock);
      impl_->workers.emplace_back([this, sock]() {
        const Options& options = impl_->options;
        Connection conn(*sock, store_root_, options);
        const ConnectionOutcome outcome = conn.run();
        if (outcome.finalized) {
          spdlog::info("session {} finalized with {} frames", outcome.session_id, outcome.frames);
        }
        if (options.on_connection_done) options.on_connection_done(outcome);
        std::lock_guard done_lock(impl_->mu);
        std::erase(impl_->live, sock);
        sock->close();
      });
    }
  });
}

CaptureServer::~CaptureServer() { stop(); }

void CaptureServer::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopping) return;
    impl_->stopping = true;
    impl_->listener.shutdown();
  }
  if (impl_->acceptor.joinable()) impl_->acceptor.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(impl_->mu);
    for (auto& s : impl_->live) s->shutdown();
    workers.swap(impl_->workers);
  }
  for (auto& t : workers) t.join();
  impl_->listener.close();
  impl_->cv.notify_all();
}

void CaptureServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopping; });
}

std::unique_ptr<CaptureServer> serve(const std::string& bind_address,
                                     const std::filesystem::path& store_root,
                                     CaptureServer::Options options) {
  return std::make_unique<CaptureServer>(bind_address, store_root, std::move(options));
}

// ---------------------------------------------------------------------------

ReplayReport replay(const Session& session, const std::string& target, double rate_fps,
                    std::optional<std::string> session_id) {
  if (!(rate_fps > 0.0)) throw PreconditionError("replay rate must be positive");
  net::Socket sock = net::connect_to(net::parse_host_port(target));
  ReplayReport report;
  report.session_id = session_id.value_or(session.id());

  auto expect_ack = [&]() {
    const wire::Message m = net::read_message(sock);
    const auto* c = std::get_if<ControlMessage>(&m);
    if (c == nullptr || c->kind != MessageType::kAck) {
      report.error = true;
      report.detail = c != nullptr ? c->detail : "unexpected frame from server";
      return false;
    }
    report.detail = c->detail;
    return true;
  };

  try {
    net::write_message(sock, ControlMessage::hello(report.session_id));
    if (!expect_ack()) return report;

    const SeedPrompt& seed = session.seeds().front();
    const Resolution res = session.resolution();
    const bool center = seed.origin == SeedOrigin::kCaptureCenter && seed.x == res.width / 2 &&
                        seed.y == res.height / 2;
    net::write_message(sock, center ? ControlMessage::start() : ControlMessage::start(seed.x, seed.y));
    if (!expect_ack()) return report;

    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const auto period = std::chrono::duration<double>(1.0 / rate_fps);
    for (std::int64_t k = 0; k < session.frame_count(); ++k) {
      std::this_thread::sleep_until(
          t0 + std::chrono::duration_cast<Clock::duration>(period * static_cast<double>(k)));
      const FrameRecord f = session.frame(k);
      const auto idx = static_cast<std::uint64_t>(k);
      const auto ts = static_cast<std::uint64_t>(f.timestamp_us);
      net::write_message(sock, wire::pv_frame(idx, ts, f.pv));
      if (f.depth) net::write_message(sock, wire::depth_frame(idx, ts, *f.depth));
      if (f.pose) net::write_message(sock, wire::pose_frame(idx, ts, *f.pose));
      ++report.frames_sent;
    }
    net::write_message(sock, ControlMessage::stop());
    report.acknowledged = expect_ack();
  } catch (const Error& e) {
    report.error = true;
    report.detail = std::string(e.kind()) + ": " + e.what();
    // The server may have explained itself before closing.
    try {
      const wire::Message m = net::read_message(sock);
      if (const auto* c = std::get_if<ControlMessage>(&m); c && c->kind == MessageType::kError) {
        report.detail = c->detail;
      }
    } catch (const Error&) {
    }
  }
  return report;
}

}  // namespace seedtrack
