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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "seedtrack/protocol.h"
#include "seedtrack/session_store.h"

namespace seedtrack {

/// Outcome of one client connection, reported to an optional observer.
struct ConnectionOutcome {
  std::string session_id;
  bool finalized = false;
  std::int64_t frames = 0;
  std::int64_t dropped_auxiliary = 0;  // DEPTH/POSE with no matching PV at STOP
  std::string error;                   // empty on success
};

/// Recording-mode server. Each connection runs HELLO -> START -> frames ->
/// STOP and writes one session under the store root; the session is finalized
/// (and ACKed) only after STOP. Any protocol violation is answered with ERROR,
/// the connection is closed and the partial session removed.
class CaptureServer {
 public:
  struct Options {
    std::uint32_t max_payload = wire::kDefaultMaxPayload;
    std::function<void(const ConnectionOutcome&)> on_connection_done;
  };

  CaptureServer(const std::string& bind_address, std::filesystem::path store_root)
      : CaptureServer(bind_address, std::move(store_root), Options{}) {}
  CaptureServer(const std::string& bind_address, std::filesystem::path store_root, Options options);
  ~CaptureServer();
  CaptureServer(const CaptureServer&) = delete;
  CaptureServer& operator=(const CaptureServer&) = delete;

  /// Port actually bound (useful when binding port 0).
  std::uint16_t port() const { return port_; }
  const std::filesystem::path& store_root() const { return store_root_; }

  /// Stops accepting, closes live connections and joins every worker.
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::filesystem::path store_root_;
  std::uint16_t port_ = 0;
};

/// Binds and starts serving immediately.
std::unique_ptr<CaptureServer> serve(const std::string& bind_address,
                                     const std::filesystem::path& store_root,
                                     CaptureServer::Options options = {});

struct ReplayReport {
  std::string session_id;
  std::int64_t frames_sent = 0;
  bool acknowledged = false;  // STOP was ACKed
  bool error = false;
  std::string detail;
};

/// Device simulator: streams a stored session over the wire protocol at
/// `rate_fps` frames per second. Throws NetworkError if the target cannot be
/// reached; failures after connecting yield a partial report with `error` set.
ReplayReport replay(const Session& session, const std::string& target, double rate_fps,
                    std::optional<std::string> session_id = std::nullopt);

}  // namespace seedtrack
