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

#include "seedtrack/synthetic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "seedtrack/errors.h"

namespace seedtrack::synth {
namespace {

using nlohmann::json;

int channel_distance(Rgb a, Rgb b) {
  return std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
}

bool active(const SceneObject& o, std::int64_t k) {
  return k >= o.appear_frame && (!o.disappear_frame || k < *o.disappear_frame);
}

struct Center {
  long x, y;
};

Center center_at(const SceneObject& o, std::int64_t k) {
  const double t = static_cast<double>(k - o.appear_frame);
  return {std::lround(o.start_x + o.velocity_x * t), std::lround(o.start_y + o.velocity_y * t)};
}

bool in_disc(long px, long py, long cx, long cy, long r) {
  const long dx = px - cx, dy = py - cy;
  return dx * dx + dy * dy <= r * r;
}

/// 0 = not covered, 1 = primary color, 2 = secondary color.
int coverage(const SceneObject& o, Center c, long px, long py) {
  switch (o.shape) {
    case Shape::kDisc:
      return in_disc(px, py, c.x, c.y, o.radius) ? 1 : 0;
    case Shape::kRectangle:
      return (std::labs(px - c.x) <= o.half_width && std::labs(py - c.y) <= o.half_height) ? 1 : 0;
    case Shape::kTwoBlob:
      if (in_disc(px, py, c.x, c.y, o.radius)) return 1;
      if (in_disc(px, py, c.x + o.secondary_offset_x, c.y + o.secondary_offset_y, o.secondary_radius)) {
        return 2;
      }
      return 0;
  }
  return 0;
}

struct Box {
  long x0, y0, x1, y1;  // inclusive
};

Box bounding_box(const SceneObject& o, Center c) {
  switch (o.shape) {
    case Shape::kDisc:
      return {c.x - o.radius, c.y - o.radius, c.x + o.radius, c.y + o.radius};
    case Shape::kRectangle:
      return {c.x - o.half_width, c.y - o.half_height, c.x + o.half_width, c.y + o.half_height};
    case Shape::kTwoBlob: {
      const long sx = c.x + o.secondary_offset_x, sy = c.y + o.secondary_offset_y;
      return {std::min(c.x - o.radius, sx - o.secondary_radius),
              std::min(c.y - o.radius, sy - o.secondary_radius),
              std::max(c.x + o.radius, sx + o.secondary_radius),
              std::max(c.y + o.radius, sy + o.secondary_radius)};
    }
  }
  return {0, 0, -1, -1};
}

Box clip(Box b, Resolution res) {
  return {std::max(b.x0, 0L), std::max(b.y0, 0L), std::min(b.x1, static_cast<long>(res.width) - 1),
          std::min(b.y1, static_cast<long>(res.height) - 1)};
}

Pose synthetic_pose(std::int64_t k) {
  const double a = 0.01 * static_cast<double>(k);
  const double c = std::cos(a), s = std::sin(a);
  return {c, -s, 0.0, 0.001 * static_cast<double>(k),
          s, c,  0.0, 0.0,
          0.0, 0.0, 1.0, 1.5,
          0.0, 0.0, 0.0, 1.0};
}

Rgb parse_rgb(const json& j) {
  if (!j.is_array() || j.size() != 3) throw SpecError("colors are [r,g,b] arrays");
  auto c = [&](std::size_t i) {
    const int v = j[i].get<int>();
    if (v < 0 || v > 255) throw SpecError("color channel out of range");
    return static_cast<std::uint8_t>(v);
  };
  return {c(0), c(1), c(2)};
}

json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

Shape parse_shape(const std::string& s) {
  if (s == "disc") return Shape::kDisc;
  if (s == "rectangle") return Shape::kRectangle;
  if (s == "two-blob" || s == "two_blob") return Shape::kTwoBlob;
  throw SpecError("unknown shape '" + s + "'");
}

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::kDisc: return "disc";
    case Shape::kRectangle: return "rectangle";
    case Shape::kTwoBlob: return "two-blob";
  }
  return "disc";
}

SeedPrompt seed_from_mask(const Mask& m, std::int64_t frame) {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  const long cx = std::lround(sx / static_cast<double>(n));
  const long cy = std::lround(sy / static_cast<double>(n));
  SeedPrompt seed{frame, static_cast<int>(cx), static_cast<int>(cy), SeedOrigin::kCaptureExplicit};
  if (m.at(seed.x, seed.y)) return seed;
  // Centroid outside the shape: nearest object pixel, raster order on ties.
  long best = std::numeric_limits<long>::max();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      const long d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d < best) {
        best = d;
        seed.x = x;
        seed.y = y;
      }
    }
  }
  return seed;
}

}  // namespace

void validate(const SceneSpec& spec) {
  if (spec.resolution.width <= 0 || spec.resolution.height <= 0) throw SpecError("resolution must be positive");
  if (spec.frame_count <= 0) throw SpecError("frame_count must be positive");
  if (spec.objects.empty()) throw SpecError("scene needs at least one object");
  if (spec.noise_amplitude < 0 || spec.noise_amplitude > 255) throw SpecError("noise_amplitude out of range");
  if (!(spec.fps > 0.0)) throw SpecError("fps must be positive");
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& o = spec.objects[i];
    const std::string who = "object " + std::to_string(i);
    if (o.appear_frame < 0 || o.appear_frame >= spec.frame_count) throw SpecError(who + ": appear_frame outside scene");
    if (o.disappear_frame && *o.disappear_frame <= o.appear_frame) {
      throw SpecError(who + ": disappear_frame must follow appear_frame");
    }
    if (o.radius < 0 || o.half_width < 0 || o.half_height < 0 || o.secondary_radius < 0) {
      throw SpecError(who + ": negative size");
    }
    if (spec.noise_amplitude == 0) {
      if (channel_distance(o.color, spec.background) <= kMinSeparation) {
        throw SpecError(who + ": color too close to background");
      }
      if (o.shape == Shape::kTwoBlob &&
          channel_distance(o.secondary_color, spec.background) <= kMinSeparation) {
        throw SpecError(who + ": secondary color too close to background");
      }
    }
    if (!o.disappear_frame) {
      for (std::int64_t k = o.appear_frame; k < spec.frame_count; ++k) {
        const Center c = center_at(o, k);
        const Box b = clip(bounding_box(o, c), spec.resolution);
        bool visible = false;
        for (long y = b.y0; y <= b.y1 && !visible; ++y) {
          for (long x = b.x0; x <= b.x1 && !visible; ++x) visible = coverage(o, c, x, y) != 0;
        }
        if (!visible) {
          throw SpecError(who + " leaves the frame at frame " + std::to_string(k) +
                          " without a disappear_frame");
        }
      }
    }
  }
}

RenderedScene render(const SceneSpec& spec) {
  validate(spec);
  const Resolution res = spec.resolution;
  const std::size_t n_obj = spec.objects.size();
  RenderedScene out;
  out.object_masks.assign(n_obj, {});
  std::mt19937_64 rng(spec.random_seed);
  auto noise = [&](int amplitude) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(2 * amplitude + 1)) - amplitude;
  };

  std::vector<int> owner(res.pixels());
  for (std::int64_t k = 0; k < spec.frame_count; ++k) {
    RgbImage img(res);
    for (std::size_t i = 0; i < res.pixels(); ++i) {
      auto* p = img.data().data() + 3 * i;
      p[0] = spec.background.r;
      p[1] = spec.background.g;
      p[2] = spec.background.b;
    }
    std::fill(owner.begin(), owner.end(), -1);
    for (std::size_t oi = 0; oi < n_obj; ++oi) {
      const auto& o = spec.objects[oi];
      if (!active(o, k)) continue;
      const Center c = center_at(o, k);
      const Box b = clip(bounding_box(o, c), res);
      for (long y = b.y0; y <= b.y1; ++y) {
        for (long x = b.x0; x <= b.x1; ++x) {
          const int cov = coverage(o, c, x, y);
          if (cov == 0) continue;
          const Rgb col = cov == 1 ? o.color : o.secondary_color;
          auto* p = img.pixel(static_cast<int>(x), static_cast<int>(y));
          p[0] = col.r;
          p[1] = col.g;
          p[2] = col.b;
          owner[static_cast<std::size_t>(y) * res.width + x] = static_cast<int>(oi);
        }
      }
    }
    for (std::size_t oi = 0; oi < n_obj; ++oi) {
      Mask m(res);
      for (std::size_t i = 0; i < owner.size(); ++i) {
        if (owner[i] == static_cast<int>(oi)) m.set_index(i);
      }
      out.object_masks[oi].push_back(std::move(m));
    }
    if (spec.noise_amplitude > 0) {
      for (auto& v : img.data()) v = static_cast<std::uint8_t>(std::clamp(v + noise(spec.noise_amplitude), 0, 255));
    }
    FrameRecord f;
    f.index = k;
    f.timestamp_us = static_cast<std::int64_t>(std::llround(static_cast<double>(k) * 1e6 / spec.fps));
    f.pv = std::move(img);
    if (spec.with_depth) {
      DepthImage d(res);
      auto data = d.data();
      for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<std::uint16_t>((owner[i] >= 0 ? 600 : 1500) + rng() % 16);
      }
      f.depth = std::move(d);
    }
    if (spec.with_pose) f.pose = synthetic_pose(k);
    out.frames.push_back(std::move(f));
  }

  const auto& first = spec.objects.front();
  const Mask& at_appear = out.object_masks[0][static_cast<std::size_t>(first.appear_frame)];
  if (at_appear.none()) throw SpecError("object 0 is hidden on its appear_frame");
  out.seed = seed_from_mask(at_appear, first.appear_frame);
  return out;
}

std::filesystem::path ground_truth_dir(const std::filesystem::path& session_dir, std::size_t object) {
  return session_dir / "gt" / ("obj" + std::to_string(object));
}

SyntheticScene generate(const SceneSpec& spec, const std::filesystem::path& store_root) {
  RenderedScene scene = render(spec);
  SessionWriter writer =
      SessionWriter::create(store_root, spec.session_id, spec.resolution, CaptureSource::kSynthetic);
  try {
    for (const auto& f : scene.frames) writer.append_frame(f);
    writer.add_seed(scene.seed);
    for (std::size_t oi = 0; oi < scene.object_masks.size(); ++oi) {
      std::map<std::int64_t, Mask> seq;
      for (std::size_t k = 0; k < scene.object_masks[oi].size(); ++k) {
        seq.emplace(static_cast<std::int64_t>(k), scene.object_masks[oi][k]);
      }
      save_mask_sequence(ground_truth_dir(writer.path(), oi), seq);
    }
    Session session = writer.finalize();
    return {std::move(session), std::move(scene.object_masks)};
  } catch (...) {
    writer.abort();
    throw;
  }
}

SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec spec;
  try {
    const json j = json::parse(text);
    spec.session_id = j.value("session_id", spec.session_id);
    spec.resolution = {j.value("width", spec.resolution.width), j.value("height", spec.resolution.height)};
    spec.frame_count = j.value("frame_count", spec.frame_count);
    if (j.contains("background")) spec.background = parse_rgb(j["background"]);
    spec.noise_amplitude = j.value("noise_amplitude", 0);
    spec.random_seed = j.value("random_seed", std::uint64_t{0});
    spec.fps = j.value("fps", spec.fps);
    spec.with_depth = j.value("with_depth", false);
    spec.with_pose = j.value("with_pose", false);
    for (const auto& jo : j.at("objects")) {
      SceneObject o;
      o.shape = parse_shape(jo.value("shape", std::string("disc")));
      o.color = parse_rgb(jo.at("color"));
      const auto& start = jo.at("start");
      o.start_x = start.at(0).get<int>();
      o.start_y = start.at(1).get<int>();
      if (jo.contains("velocity")) {
        o.velocity_x = jo["velocity"].at(0).get<double>();
        o.velocity_y = jo["velocity"].at(1).get<double>();
      }
      o.radius = jo.value("radius", o.radius);
      if (jo.contains("half_size")) {
        o.half_width = jo["half_size"].at(0).get<int>();
        o.half_height = jo["half_size"].at(1).get<int>();
      }
      if (jo.contains("secondary_color")) o.secondary_color = parse_rgb(jo["secondary_color"]);
      o.secondary_radius = jo.value("secondary_radius", o.secondary_radius);
      if (jo.contains("secondary_offset")) {
        o.secondary_offset_x = jo["secondary_offset"].at(0).get<int>();
        o.secondary_offset_y = jo["secondary_offset"].at(1).get<int>();
      }
      o.appear_frame = jo.value("appear_frame", std::int64_t{0});
      if (jo.contains("disappear_frame") && !jo["disappear_frame"].is_null()) {
        o.disappear_frame = jo["disappear_frame"].get<std::int64_t>();
      }
      spec.objects.push_back(o);
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed scene spec: ") + e.what());
  }
  return spec;
}

std::string dump_scene_spec(const SceneSpec& spec) {
  json objects = json::array();
  for (const auto& o : spec.objects) {
    json jo = {{"shape", shape_name(o.shape)},
               {"color", rgb_json(o.color)},
               {"start", {o.start_x, o.start_y}},
               {"velocity", {o.velocity_x, o.velocity_y}},
               {"radius", o.radius},
               {"half_size", {o.half_width, o.half_height}},
               {"secondary_color", rgb_json(o.secondary_color)},
               {"secondary_radius", o.secondary_radius},
               {"secondary_offset", {o.secondary_offset_x, o.secondary_offset_y}},
               {"appear_frame", o.appear_frame},
               {"disappear_frame", o.disappear_frame ? json(*o.disappear_frame) : json(nullptr)}};
    objects.push_back(jo);
  }
  const json j = {{"session_id", spec.session_id},
                  {"width", spec.resolution.width},
                  {"height", spec.resolution.height},
                  {"frame_count", spec.frame_count},
                  {"background", rgb_json(spec.background)},
                  {"noise_amplitude", spec.noise_amplitude},
                  {"random_seed", spec.random_seed},
                  {"fps", spec.fps},
                  {"with_depth", spec.with_depth},
                  {"with_pose", spec.with_pose},
                  {"objects", objects}};
  return j.dump(2) + "\n";
}

}  // namespace seedtrack::synth
