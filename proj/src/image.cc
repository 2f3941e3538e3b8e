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

#include "seedtrack/image.h"

#include <algorithm>

#include "seedtrack/errors.h"

namespace seedtrack {

std::string Resolution::str() const {
  return std::to_string(width) + "x" + std::to_string(height);
}

std::size_t Mask::count() const {
  const auto b = bits_.data();
  return static_cast<std::size_t>(
      std::count_if(b.begin(), b.end(), [](std::uint8_t v) { return v != 0; }));
}

Mask& Mask::operator|=(const Mask& other) {
  if (other.resolution() != resolution()) {
    throw ResolutionMismatch("mask union " + resolution().str() + " vs " +
                             other.resolution().str());
  }
  auto dst = bits_.data();
  const auto src = other.bits_.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (src[i] != 0) dst[i] = kOn;
  }
  return *this;
}

Mask Mask::operator&(const Mask& other) const {
  if (other.resolution() != resolution()) {
    throw ResolutionMismatch("mask intersection " + resolution().str() + " vs " +
                             other.resolution().str());
  }
  Mask out(resolution());
  const auto a = bits_.data();
  const auto b = other.bits_.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && b[i] != 0) out.set_index(i);
  }
  return out;
}

bool Mask::subset_of(const Mask& other) const {
  if (other.resolution() != resolution()) return false;
  const auto a = bits_.data();
  const auto b = other.bits_.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && b[i] == 0) return false;
  }
  return true;
}

}  // namespace seedtrack
