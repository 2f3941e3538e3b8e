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

#include "seedtrack/segmentation.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "seedtrack/adapter.h"
#include "seedtrack/errors.h"

namespace seedtrack {

std::size_t select_best_index(std::span<const MaskProposal> proposals) {
  if (proposals.empty()) throw NoProposal("no mask proposals to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < proposals.size(); ++i) {
    if (proposals[i].score > proposals[best].score) best = i;
  }
  return best;
}

const MaskProposal& select_best(std::span<const MaskProposal> proposals) {
  return proposals[select_best_index(proposals)];
}

double iou(const Mask& a, const Mask& b) {
  if (a.resolution() != b.resolution()) throw ResolutionMismatch("iou on different resolutions");
  std::size_t inter = 0, uni = 0;
  const auto pa = a.bytes();
  const auto pb = b.bytes();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool x = pa[i] != 0, y = pb[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// ChromaFloodSegmenter

Mask chroma_flood_fill(const RgbImage& image, int x, int y, int tolerance) {
  const Resolution res = image.resolution();
  if (!res.contains(x, y)) {
    throw SeedOutOfBounds("seed (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                          res.str());
  }
  Mask mask(res);
  const Rgb seed = pixel_rgb(image, x, y);
  auto accept = [&](int px, int py) {
    const auto* p = image.pixel(px, py);
    return std::abs(p[0] - seed.r) <= tolerance && std::abs(p[1] - seed.g) <= tolerance &&
           std::abs(p[2] - seed.b) <= tolerance;
  };
  std::vector<std::pair<int, int>> stack{{x, y}};
  mask.set(x, y);
  while (!stack.empty()) {
    const auto [cx, cy] = stack.back();
    stack.pop_back();
    constexpr int kDx[4] = {1, -1, 0, 0};
    constexpr int kDy[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int nx = cx + kDx[d], ny = cy + kDy[d];
      if (!res.contains(nx, ny) || mask.at(nx, ny) || !accept(nx, ny)) continue;
      mask.set(nx, ny);
      stack.emplace_back(nx, ny);
    }
  }
  return mask;
}

ChromaFloodSegmenter::ChromaFloodSegmenter(std::array<int, kProposalsPerPrompt> tolerances)
    : tolerances_(tolerances) {
  if (!std::is_sorted(tolerances_.begin(), tolerances_.end()) || tolerances_.front() < 0) {
    throw PreconditionError("flood tolerances must be non-negative and ascending");
  }
}

std::string ChromaFloodSegmenter::describe() const {
  std::ostringstream ss;
  ss << name() << "{tolerances=" << tolerances_[0] << "," << tolerances_[1] << ","
     << tolerances_[2] << "}";
  return ss.str();
}

std::vector<MaskProposal> ChromaFloodSegmenter::propose(const RgbImage& image,
                                                        const SeedPrompt& prompt) {
  std::vector<MaskProposal> out;
  out.reserve(kProposalsPerPrompt);
  for (int tol : tolerances_) out.push_back({chroma_flood_fill(image, prompt.x, prompt.y, tol), 0.0});
  // Stability rating: overlap with the next wider tolerance.
  for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i].score = iou(out[i].mask, out[i + 1].mask);
  out.back().score = kWidestScore;
  for (auto& p : out) {
    if (p.mask.none()) p.score = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// OverlapTracker

int label_components(const Mask& mask, std::vector<int>& labels) {
  const Resolution res = mask.resolution();
  labels.assign(res.pixels(), 0);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (!mask.at_index(start) || labels[start] != 0) continue;
    labels[start] = ++next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % res.width);
      const int y = static_cast<int>(i / res.width);
      auto visit = [&](int nx, int ny) {
        if (!res.contains(nx, ny)) return;
        const std::size_t j = static_cast<std::size_t>(ny) * res.width + nx;
        if (mask.at_index(j) && labels[j] == 0) {
          labels[j] = next;
          stack.push_back(j);
        }
      };
      visit(x + 1, y);
      visit(x - 1, y);
      visit(x, y + 1);
      visit(x, y - 1);
    }
  }
  return next;
}

namespace {

/// Per-channel acceptance window, in 8-bit units.
struct ColorWindow {
  std::array<double, 3> low{};
  std::array<double, 3> high{};
};

ColorWindow color_window(const RgbImage& image, const Mask& mask, double k) {
  std::array<double, 3> sum{}, sum_sq{};
  std::size_t n = 0;
  const auto px = image.data();
  for (std::size_t i = 0; i < mask.resolution().pixels(); ++i) {
    if (!mask.at_index(i)) continue;
    for (int c = 0; c < 3; ++c) {
      const double v = px[3 * i + c];
      sum[c] += v;
      sum_sq[c] += v * v;
    }
    ++n;
  }
  ColorWindow w;
  for (int c = 0; c < 3; ++c) {
    const double mean = sum[c] / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq[c] / static_cast<double>(n) - mean * mean);
    const double sd = std::sqrt(var);
    w.low[c] = mean - k * sd;
    w.high[c] = mean + k * sd;
  }
  return w;
}

void check_pair(const RgbImage& image, const Mask& mask) {
  if (image.resolution() != mask.resolution()) {
    throw ResolutionMismatch("image " + image.resolution().str() + " vs mask " +
                             mask.resolution().str());
  }
}

}  // namespace

std::string OverlapTracker::describe() const {
  std::ostringstream ss;
  ss << name() << "{sigma=" << options_.sigma_multiplier << ",loss=" << options_.loss_threshold
     << "}";
  return ss.str();
}

TrackerState OverlapTracker::initialize(const RgbImage& image, const Mask& mask,
                                        std::int64_t frame_index) {
  check_pair(image, mask);
  if (mask.none()) throw InitializationFailure("tracker initialized with an empty mask");
  TrackerState state;
  state.last_mask = mask;
  state.frame_cursor = frame_index;
  state.backend_state = color_window(image, mask, options_.sigma_multiplier);
  return state;
}

Mask OverlapTracker::propagate(TrackerState& state, const RgbImage& image) {
  check_pair(image, state.last_mask);
  const auto& window = std::any_cast<const ColorWindow&>(state.backend_state);
  const Resolution res = image.resolution();
  ++state.frame_cursor;

  Mask candidates(res);
  const auto px = image.data();
  for (std::size_t i = 0; i < res.pixels(); ++i) {
    bool in = true;
    for (int c = 0; c < 3 && in; ++c) {
      const double v = px[3 * i + c];
      in = v >= window.low[c] && v <= window.high[c];
    }
    if (in) candidates.set_index(i);
  }

  std::vector<int> labels;
  const int n = label_components(candidates, labels);
  if (n == 0) return Mask(res);
  std::vector<std::size_t> size(n + 1, 0), overlap(n + 1, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    ++size[labels[i]];
    if (state.last_mask.at_index(i)) ++overlap[labels[i]];
  }
  const double prev = static_cast<double>(state.last_mask.count());
  int best = 0;
  double best_dice = -1.0;
  for (int l = 1; l <= n; ++l) {
    const double d = 2.0 * static_cast<double>(overlap[l]) / (static_cast<double>(size[l]) + prev);
    if (d > best_dice) {
      best_dice = d;
      best = l;
    }
  }
  if (best_dice < options_.loss_threshold) return Mask(res);

  Mask out(res);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == best) out.set_index(i);
  }
  state.last_mask = out;
  state.backend_state = color_window(image, out, options_.sigma_multiplier);
  return out;
}

// ---------------------------------------------------------------------------

void check_backend_config(const BackendConfig& config) {
  if (config.segmenter != "chroma_flood" && config.segmenter != "external") {
    throw UnknownBackend("unknown segmenter '" + config.segmenter + "'");
  }
  if (config.tracker != "overlap" && config.tracker != "external") {
    throw UnknownBackend("unknown tracker '" + config.tracker + "'");
  }
  if ((config.segmenter == "external" || config.tracker == "external") &&
      config.adapter_command.empty()) {
    throw UnknownBackend("external backend requires an adapter command");
  }
}

BackendPair make_backends(const BackendConfig& config) {
  check_backend_config(config);
  BackendPair pair;
  std::shared_ptr<AdapterProcess> adapter;
  auto shared_adapter = [&]() {
    if (!adapter) {
      if (config.adapter_command.empty()) {
        throw UnknownBackend("external backend requires an adapter command");
      }
      adapter = std::make_shared<AdapterProcess>(config.adapter_command, config.adapter_timeout_s);
    }
    return adapter;
  };
  if (config.segmenter == "chroma_flood") {
    pair.segmenter = std::make_unique<ChromaFloodSegmenter>(config.flood_tolerances);
  } else if (config.segmenter == "external") {
    pair.segmenter = std::make_unique<AdapterSegmenter>(shared_adapter());
  } else {
    throw UnknownBackend("unknown segmenter '" + config.segmenter + "'");
  }
  if (config.tracker == "overlap") {
    pair.tracker = std::make_unique<OverlapTracker>(config.tracker_options);
  } else if (config.tracker == "external") {
    pair.tracker = std::make_unique<AdapterTracker>(shared_adapter());
  } else {
    throw UnknownBackend("unknown tracker '" + config.tracker + "'");
  }
  return pair;
}

}  // namespace seedtrack
