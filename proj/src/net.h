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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "seedtrack/protocol.h"

namespace seedtrack::net {

/// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  /// Unblocks pending reads/accepts from another thread.
  void shutdown();

  /// Throws NetworkError on EOF or failure.
  void read_exact(std::span<std::uint8_t> out);
  void write_all(std::span<const std::uint8_t> data);

 private:
  int fd_ = -1;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port"; port may be 0 for an ephemeral bind.
HostPort parse_host_port(const std::string& text);

Socket connect_to(const HostPort& target);
/// Listening socket; `bound_port` receives the actual port.
Socket listen_on(const HostPort& bind, std::uint16_t& bound_port);
/// Returns an invalid socket once the listener was shut down.
Socket accept_from(const Socket& listener);

wire::Message read_message(Socket& socket, std::uint32_t max_payload = wire::kDefaultMaxPayload);
void write_message(Socket& socket, const wire::Message& message);

}  // namespace seedtrack::net
