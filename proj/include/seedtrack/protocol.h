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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "seedtrack/image.h"

namespace seedtrack::wire {

// Frame layout: "HOLA" magic (bytes 0x48 0x4F 0x4C 0x41), version byte,
// type byte, payload length (u32 little-endian), payload. All multi-byte
// payload fields are little-endian.

inline constexpr std::array<std::uint8_t, 4> kMagic{0x48, 0x4F, 0x4C, 0x41};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kDefaultMaxPayload = 32u << 20;
inline constexpr std::uint16_t kDefaultPort = 38400;
/// START seed sentinel: use the center of frame 0.
inline constexpr std::int32_t kCenterSeed = -1;

enum class MessageType : std::uint8_t {
  kHello = 0x01,
  kStart = 0x02,
  kStop = 0x03,
  kAck = 0x04,
  kError = 0x05,
  kFrame = 0x06,
};

enum class Channel : std::uint8_t { kPv = 0, kDepth = 1, kPose = 2 };

inline constexpr std::size_t kPosePayloadSize = 16 * sizeof(double);
inline constexpr std::size_t kFrameFixedSize = 8 + 8 + 1 + 2 + 2;

/// HELLO: payload = session id (UTF-8, non-empty).
/// START: payload = seed_x, seed_y as i32 (both kCenterSeed, or both >= 0).
/// STOP:  empty payload.
/// ACK / ERROR: payload = free-text detail.
struct ControlMessage {
  MessageType kind = MessageType::kAck;
  std::int32_t seed_x = kCenterSeed;
  std::int32_t seed_y = kCenterSeed;
  std::string session_id;
  std::string detail;

  static ControlMessage hello(std::string session_id);
  static ControlMessage start(std::int32_t x = kCenterSeed, std::int32_t y = kCenterSeed);
  static ControlMessage stop();
  static ControlMessage ack(std::string detail = {});
  static ControlMessage error(std::string detail);

  bool uses_center_seed() const { return seed_x == kCenterSeed && seed_y == kCenterSeed; }
  bool operator==(const ControlMessage&) const = default;
};

/// FRAME: index u64, timestamp_us u64, channel u8, width u16, height u16,
/// then the channel payload (PV: w·h·3 RGB bytes, DEPTH: w·h u16 samples,
/// POSE: 16 f64 row-major; width/height are 0 for POSE).
struct StreamFrameMessage {
  std::uint64_t index = 0;
  std::uint64_t timestamp_us = 0;
  Channel channel = Channel::kPv;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const StreamFrameMessage&) const = default;
};

using Message = std::variant<ControlMessage, StreamFrameMessage>;

MessageType type_of(const Message& message);

std::vector<std::uint8_t> encode_message(const Message& message);

struct Header {
  MessageType type;
  std::uint32_t length;
};

/// Validates magic, version, type and length. Throws FramingError.
Header decode_header(std::span<const std::uint8_t> bytes,
                     std::uint32_t max_payload = kDefaultMaxPayload);
Message decode_payload(MessageType type, std::span<const std::uint8_t> payload);

/// Decodes exactly one complete frame. Throws FramingError for anything else.
Message decode_message(std::span<const std::uint8_t> bytes,
                       std::uint32_t max_payload = kDefaultMaxPayload);

// Channel payload conversion.
StreamFrameMessage pv_frame(std::uint64_t index, std::uint64_t timestamp_us, const RgbImage& pv);
StreamFrameMessage depth_frame(std::uint64_t index, std::uint64_t timestamp_us, const DepthImage& depth);
StreamFrameMessage pose_frame(std::uint64_t index, std::uint64_t timestamp_us, const Pose& pose);
RgbImage to_rgb(const StreamFrameMessage& frame);
DepthImage to_depth(const StreamFrameMessage& frame);
Pose to_pose(const StreamFrameMessage& frame);

}  // namespace seedtrack::wire
