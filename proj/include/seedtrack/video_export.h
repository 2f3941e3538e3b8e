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

#include "seedtrack/session_store.h"

namespace seedtrack {

/// Encodes every PV frame of `session`, in index order, as a Motion-JPEG AVI.
/// Returns the number of frames written. Throws ExportError if no encoder
/// can be opened.
std::int64_t export_video(const Session& session, const std::filesystem::path& target,
                          double fps);

}  // namespace seedtrack
