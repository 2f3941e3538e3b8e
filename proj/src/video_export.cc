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

#include "seedtrack/video_export.h"

#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>

#include "seedtrack/errors.h"

namespace seedtrack {

std::int64_t export_video(const Session& session, const std::filesystem::path& target, double fps) {
  if (!(fps > 0.0)) throw PreconditionError("fps must be positive");
  const Resolution res = session.resolution();
  cv::VideoWriter writer(target.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps,
                         cv::Size(res.width, res.height), true);
  if (!writer.isOpened()) throw ExportError("no MJPG encoder for " + target.string());
  cv::Mat bgr(res.height, res.width, CV_8UC3);
  for (std::int64_t k = 0; k < session.frame_count(); ++k) {
    const RgbImage pv = session.pv(k);
    for (int y = 0; y < res.height; ++y) {
      auto* row = bgr.ptr<std::uint8_t>(y);
      const auto* src = pv.pixel(0, y);
      for (int x = 0; x < res.width; ++x) {
        row[3 * x + 0] = src[3 * x + 2];
        row[3 * x + 1] = src[3 * x + 1];
        row[3 * x + 2] = src[3 * x + 0];
      }
    }
    writer.write(bgr);
  }
  writer.release();
  return session.frame_count();
}

}  // namespace seedtrack
