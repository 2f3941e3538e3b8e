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

#include <filesystem>
#include <memory>
#include <string>

#include "seedtrack/segmentation.h"

namespace seedtrack {

/// A child process speaking the line-delimited JSON backend exchange on its
/// stdin/stdout. One request line in, one response line out:
///
///   {"op":"propose","image":P,"x":X,"y":Y,"out":PREFIX} -> {"masks":[3 paths],"scores":[3 reals]}
///   {"op":"init","image":P,"mask":M}                      -> {"ok":true}
///   {"op":"propagate","image":P,"out":PREFIX}             -> {"masks":[path],"scores":[real]}
///
/// Any response may instead be {"error":"..."}. Images and masks travel as
/// PNG files in a scratch directory owned by this object. A missing reply
/// within the timeout, a dead child or a malformed reply raise
/// BackendUnavailable.
class AdapterProcess {
 public:
  AdapterProcess(const std::string& command, double timeout_s);
  ~AdapterProcess();
  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  /// Sends one JSON line, returns the reply line (already parsed into text).
  std::string exchange(const std::string& request_line);

  std::filesystem::path scratch_path(const std::string& stem);

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  double timeout_s_;
  std::string pending_;
  std::filesystem::path scratch_;
  unsigned counter_ = 0;
};

class AdapterSegmenter final : public PromptableSegmenter {
 public:
  explicit AdapterSegmenter(std::shared_ptr<AdapterProcess> process) : process_(std::move(process)) {}
  std::string name() const override { return "external"; }
  std::string describe() const override { return "external{}"; }
  std::vector<MaskProposal> propose(const RgbImage& image, const SeedPrompt& prompt) override;

 private:
  std::shared_ptr<AdapterProcess> process_;
};

class AdapterTracker final : public Tracker {
 public:
  explicit AdapterTracker(std::shared_ptr<AdapterProcess> process) : process_(std::move(process)) {}
  std::string name() const override { return "external"; }
  std::string describe() const override { return "external{}"; }
  TrackerState initialize(const RgbImage& image, const Mask& mask,
                          std::int64_t frame_index) override;
  Mask propagate(TrackerState& state, const RgbImage& image) override;

 private:
  std::shared_ptr<AdapterProcess> process_;
};

}  // namespace seedtrack
