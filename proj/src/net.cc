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

#include "net.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <vector>

#include "seedtrack/errors.h"

namespace seedtrack::net {

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::read_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n == 0) throw NetworkError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
}

void Socket::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

HostPort parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw FormatError("expected HOST:PORT, got '" + text + "'");
  HostPort hp;
  hp.host = text.substr(0, colon);
  if (hp.host.empty()) hp.host = "0.0.0.0";
  const char* b = text.data() + colon + 1;
  const char* e = text.data() + text.size();
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(b, e, port);
  if (ec != std::errc() || ptr != e || port > 65535) throw FormatError("bad port in '" + text + "'");
  hp.port = static_cast<std::uint16_t>(port);
  return hp;
}

namespace {

addrinfo* resolve(const HostPort& hp, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(hp.port);
  const int rc = ::getaddrinfo(hp.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw NetworkError("cannot resolve " + hp.host + ": " + ::gai_strerror(rc));
  return res;
}

}  // namespace

Socket connect_to(const HostPort& target) {
  addrinfo* res = resolve(target, false);
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      const int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw NetworkError("cannot connect to " + target.host + ":" + std::to_string(target.port) + ": " +
                     last_error);
}

Socket listen_on(const HostPort& bind, std::uint16_t& bound_port) {
  addrinfo* res = resolve(bind, true);
  Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!s.valid()) {
    ::freeaddrinfo(res);
    throw NetworkError("socket() failed");
  }
  const int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(s.fd(), res->ai_addr, res->ai_addrlen) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    throw NetworkError("cannot bind " + bind.host + ":" + std::to_string(bind.port) + ": " + err);
  }
  ::freeaddrinfo(res);
  if (::listen(s.fd(), 16) != 0) throw NetworkError("listen() failed");
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port = ntohs(addr.sin_port);
  return s;
}

Socket accept_from(const Socket& listener) {
  for (;;) {
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

wire::Message read_message(Socket& socket, std::uint32_t max_payload) {
  std::array<std::uint8_t, wire::kHeaderSize> header{};
  socket.read_exact(header);
  const wire::Header h = wire::decode_header(header, max_payload);
  std::vector<std::uint8_t> payload(h.length);
  socket.read_exact(payload);
  return wire::decode_payload(h.type, payload);
}

void write_message(Socket& socket, const wire::Message& message) {
  const auto bytes = wire::encode_message(message);
  socket.write_all(bytes);
}

}  // namespace seedtrack::net
