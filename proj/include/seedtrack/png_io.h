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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "seedtrack/image.h"

namespace seedtrack::png {

// Lossless PNG I/O. All readers throw StorageError on I/O failure and
// FormatError when the file holds a different pixel layout.

std::vector<std::uint8_t> encode(const RgbImage& image);
std::vector<std::uint8_t> encode(const DepthImage& image);
std::vector<std::uint8_t> encode(const Mask& mask);

void write(const std::filesystem::path& path, const RgbImage& image);
void write(const std::filesystem::path& path, const DepthImage& image);
void write(const std::filesystem::path& path, const Mask& mask);

RgbImage read_rgb(const std::filesystem::path& path);
DepthImage read_depth(const std::filesystem::path& path);
/// Any nonzero sample is read as object.
Mask read_mask(const std::filesystem::path& path);

/// Header-only probe.
Resolution read_size(const std::filesystem::path& path);

}  // namespace seedtrack::png
