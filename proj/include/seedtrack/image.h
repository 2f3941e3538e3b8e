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
#include <vector>

namespace seedtrack {

struct Resolution {
  int width = 0;
  int height = 0;

  bool operator==(const Resolution&) const = default;
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t pixels() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::string str() const;
};

/// Dense row-major interleaved bitmap.
template <typename T, int Channels>
class Bitmap {
 public:
  using value_type = T;
  static constexpr int kChannels = Channels;

  Bitmap() = default;
  explicit Bitmap(Resolution res, T fill = T{})
      : res_(res), data_(res.pixels() * Channels, fill) {}
  Bitmap(Resolution res, std::vector<T> data);

  Resolution resolution() const { return res_; }
  int width() const { return res_.width; }
  int height() const { return res_.height; }
  bool empty_bitmap() const { return data_.empty(); }

  T* pixel(int x, int y) {
    return data_.data() + (static_cast<std::size_t>(y) * res_.width + x) * Channels;
  }
  const T* pixel(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * res_.width + x) * Channels;
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }

  bool operator==(const Bitmap&) const = default;

 private:
  Resolution res_{};
  std::vector<T> data_;
};

template <typename T, int Channels>
Bitmap<T, Channels>::Bitmap(Resolution res, std::vector<T> data)
    : res_(res), data_(std::move(data)) {
  data_.resize(res.pixels() * Channels);
}

using RgbImage = Bitmap<std::uint8_t, 3>;
using DepthImage = Bitmap<std::uint16_t, 1>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Binary object mask. Stored as 0 (background) / 255 (object), which is
/// also the on-disk representation.
class Mask {
 public:
  static constexpr std::uint8_t kOn = 255;

  Mask() = default;
  explicit Mask(Resolution res) : bits_(res, 0) {}

  Resolution resolution() const { return bits_.resolution(); }
  int width() const { return bits_.width(); }
  int height() const { return bits_.height(); }

  bool at(int x, int y) const { return *bits_.pixel(x, y) != 0; }
  void set(int x, int y, bool on = true) { *bits_.pixel(x, y) = on ? kOn : 0; }
  bool at_index(std::size_t i) const { return bits_.data()[i] != 0; }
  void set_index(std::size_t i, bool on = true) { bits_.data()[i] = on ? kOn : 0; }

  std::size_t count() const;
  bool none() const { return count() == 0; }

  /// In-place union; resolutions must match.
  Mask& operator|=(const Mask& other);
  Mask operator&(const Mask& other) const;
  /// True when every pixel of this mask is also set in `other`.
  bool subset_of(const Mask& other) const;

  std::span<const std::uint8_t> bytes() const { return bits_.data(); }
  std::span<std::uint8_t> bytes() { return bits_.data(); }

  bool operator==(const Mask&) const = default;

 private:
  Bitmap<std::uint8_t, 1> bits_;
};

using Pose = std::array<double, 16>;

inline Rgb pixel_rgb(const RgbImage& img, int x, int y) {
  const auto* p = img.pixel(x, y);
  return {p[0], p[1], p[2]};
}

}  // namespace seedtrack
