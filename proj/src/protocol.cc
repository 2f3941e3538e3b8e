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

#include "seedtrack/protocol.h"

#include <algorithm>
#include <bit>
#include <cstring>

#include "seedtrack/errors.h"

namespace seedtrack::wire {
namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(in[offset + i]) << (8 * i);
  return static_cast<T>(u);
}

bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x06; }

std::size_t expected_payload(Channel c, std::uint16_t w, std::uint16_t h) {
  switch (c) {
    case Channel::kPv: return static_cast<std::size_t>(w) * h * 3;
    case Channel::kDepth: return static_cast<std::size_t>(w) * h * 2;
    case Channel::kPose: return kPosePayloadSize;
  }
  return 0;
}

void check_frame(const StreamFrameMessage& f) {
  if (static_cast<std::uint8_t>(f.channel) > 2) throw FramingError("unknown channel");
  if (f.channel != Channel::kPose && (f.width == 0 || f.height == 0)) {
    throw FramingError("bitmap channel with zero size");
  }
  if (f.channel == Channel::kPose && (f.width != 0 || f.height != 0)) {
    throw FramingError("POSE frame must have zero width and height");
  }
  if (f.payload.size() != expected_payload(f.channel, f.width, f.height)) {
    throw FramingError("frame payload length " + std::to_string(f.payload.size()) +
                       " does not match channel layout");
  }
}

}  // namespace

ControlMessage ControlMessage::hello(std::string session_id) {
  ControlMessage m;
  m.kind = MessageType::kHello;
  m.session_id = std::move(session_id);
  return m;
}

ControlMessage ControlMessage::start(std::int32_t x, std::int32_t y) {
  ControlMessage m;
  m.kind = MessageType::kStart;
  m.seed_x = x;
  m.seed_y = y;
  return m;
}

ControlMessage ControlMessage::stop() {
  ControlMessage m;
  m.kind = MessageType::kStop;
  return m;
}

ControlMessage ControlMessage::ack(std::string detail) {
  ControlMessage m;
  m.kind = MessageType::kAck;
  m.detail = std::move(detail);
  return m;
}

ControlMessage ControlMessage::error(std::string detail) {
  ControlMessage m;
  m.kind = MessageType::kError;
  m.detail = std::move(detail);
  return m;
}

MessageType type_of(const Message& message) {
  if (const auto* c = std::get_if<ControlMessage>(&message)) return c->kind;
  return MessageType::kFrame;
}

std::vector<std::uint8_t> encode_message(const Message& message) {
  std::vector<std::uint8_t> payload;
  const MessageType type = type_of(message);
  if (const auto* c = std::get_if<ControlMessage>(&message)) {
    switch (c->kind) {
      case MessageType::kHello:
        if (c->session_id.empty()) throw FramingError("HELLO needs a session id");
        payload.assign(c->session_id.begin(), c->session_id.end());
        break;
      case MessageType::kStart:
        put_le<std::int32_t>(payload, c->seed_x);
        put_le<std::int32_t>(payload, c->seed_y);
        break;
      case MessageType::kStop:
        break;
      case MessageType::kAck:
      case MessageType::kError:
        payload.assign(c->detail.begin(), c->detail.end());
        break;
      case MessageType::kFrame:
        throw FramingError("control message cannot have type FRAME");
    }
  } else {
    const auto& f = std::get<StreamFrameMessage>(message);
    check_frame(f);
    payload.reserve(kFrameFixedSize + f.payload.size());
    put_le<std::uint64_t>(payload, f.index);
    put_le<std::uint64_t>(payload, f.timestamp_us);
    payload.push_back(static_cast<std::uint8_t>(f.channel));
    put_le<std::uint16_t>(payload, f.width);
    put_le<std::uint16_t>(payload, f.height);
    payload.insert(payload.end(), f.payload.begin(), f.payload.end());
  }
  if (payload.size() > UINT32_MAX) throw FramingError("payload too large");

  std::vector<std::uint8_t> out{kMagic[0], kMagic[1], kMagic[2], kMagic[3], kVersion,
                                static_cast<std::uint8_t>(type)};
  out.reserve(kHeaderSize + payload.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Header decode_header(std::span<const std::uint8_t> bytes, std::uint32_t max_payload) {
  if (bytes.size() < kHeaderSize) throw FramingError("truncated header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FramingError("bad magic");
  if (bytes[4] != kVersion) throw FramingError("unsupported version " + std::to_string(bytes[4]));
  if (!known_type(bytes[5])) throw FramingError("unknown message type " + std::to_string(bytes[5]));
  const auto length = get_le<std::uint32_t>(bytes, 6);
  if (length > max_payload) {
    throw FramingError("payload length " + std::to_string(length) + " exceeds maximum " +
                       std::to_string(max_payload));
  }
  return {static_cast<MessageType>(bytes[5]), length};
}

Message decode_payload(MessageType type, std::span<const std::uint8_t> p) {
  switch (type) {
    case MessageType::kHello: {
      if (p.empty()) throw FramingError("HELLO without session id");
      return ControlMessage::hello(std::string(p.begin(), p.end()));
    }
    case MessageType::kStart: {
      if (p.size() != 8) throw FramingError("START payload must be 8 bytes");
      const auto x = get_le<std::int32_t>(p, 0);
      const auto y = get_le<std::int32_t>(p, 4);
      const bool center = x == kCenterSeed && y == kCenterSeed;
      if (!center && (x < 0 || y < 0)) throw FramingError("START seed must be the sentinel or non-negative");
      return ControlMessage::start(x, y);
    }
    case MessageType::kStop:
      if (!p.empty()) throw FramingError("STOP carries no payload");
      return ControlMessage::stop();
    case MessageType::kAck:
      return ControlMessage::ack(std::string(p.begin(), p.end()));
    case MessageType::kError:
      return ControlMessage::error(std::string(p.begin(), p.end()));
    case MessageType::kFrame: {
      if (p.size() < kFrameFixedSize) throw FramingError("truncated FRAME");
      StreamFrameMessage f;
      f.index = get_le<std::uint64_t>(p, 0);
      f.timestamp_us = get_le<std::uint64_t>(p, 8);
      const std::uint8_t ch = p[16];
      if (ch > 2) throw FramingError("unknown channel " + std::to_string(ch));
      f.channel = static_cast<Channel>(ch);
      f.width = get_le<std::uint16_t>(p, 17);
      f.height = get_le<std::uint16_t>(p, 19);
      f.payload.assign(p.begin() + kFrameFixedSize, p.end());
      check_frame(f);
      return f;
    }
  }
  throw FramingError("unknown message type");
}

Message decode_message(std::span<const std::uint8_t> bytes, std::uint32_t max_payload) {
  const Header h = decode_header(bytes, max_payload);
  if (bytes.size() != kHeaderSize + h.length) {
    throw FramingError("frame holds " + std::to_string(bytes.size() - kHeaderSize) +
                       " payload bytes, header says " + std::to_string(h.length));
  }
  return decode_payload(h.type, bytes.subspan(kHeaderSize));
}

StreamFrameMessage pv_frame(std::uint64_t index, std::uint64_t timestamp_us, const RgbImage& pv) {
  if (pv.width() > UINT16_MAX || pv.height() > UINT16_MAX) throw FramingError("image too large");
  StreamFrameMessage f;
  f.index = index;
  f.timestamp_us = timestamp_us;
  f.channel = Channel::kPv;
  f.width = static_cast<std::uint16_t>(pv.width());
  f.height = static_cast<std::uint16_t>(pv.height());
  f.payload.assign(pv.data().begin(), pv.data().end());
  return f;
}

StreamFrameMessage depth_frame(std::uint64_t index, std::uint64_t timestamp_us, const DepthImage& depth) {
  if (depth.width() > UINT16_MAX || depth.height() > UINT16_MAX) throw FramingError("image too large");
  StreamFrameMessage f;
  f.index = index;
  f.timestamp_us = timestamp_us;
  f.channel = Channel::kDepth;
  f.width = static_cast<std::uint16_t>(depth.width());
  f.height = static_cast<std::uint16_t>(depth.height());
  f.payload.reserve(depth.data().size() * 2);
  for (const std::uint16_t v : depth.data()) put_le<std::uint16_t>(f.payload, v);
  return f;
}

StreamFrameMessage pose_frame(std::uint64_t index, std::uint64_t timestamp_us, const Pose& pose) {
  StreamFrameMessage f;
  f.index = index;
  f.timestamp_us = timestamp_us;
  f.channel = Channel::kPose;
  f.payload.reserve(kPosePayloadSize);
  for (const double v : pose) put_le<std::uint64_t>(f.payload, std::bit_cast<std::uint64_t>(v));
  return f;
}

RgbImage to_rgb(const StreamFrameMessage& f) {
  if (f.channel != Channel::kPv) throw FramingError("not a PV frame");
  check_frame(f);
  return RgbImage({f.width, f.height}, f.payload);
}

DepthImage to_depth(const StreamFrameMessage& f) {
  if (f.channel != Channel::kDepth) throw FramingError("not a DEPTH frame");
  check_frame(f);
  DepthImage d({f.width, f.height});
  auto data = d.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = get_le<std::uint16_t>(f.payload, 2 * i);
  return d;
}

Pose to_pose(const StreamFrameMessage& f) {
  if (f.channel != Channel::kPose) throw FramingError("not a POSE frame");
  check_frame(f);
  Pose p{};
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::bit_cast<double>(get_le<std::uint64_t>(f.payload, 8 * i));
  return p;
}

}  // namespace seedtrack::wire
