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
// Command-line entry point. Every subcommand is a thin wrapper over the
// library; failures print `error: <Class>: <detail>` on one line.

#include <signal.h>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seedtrack/capture.h"
#include "seedtrack/errors.h"
#include "seedtrack/evaluation.h"
#include "seedtrack/pipeline.h"
#include "seedtrack/review.h"
#include "seedtrack/session_store.h"
#include "seedtrack/synthetic.h"
#include "seedtrack/video_export.h"

namespace st = seedtrack;
namespace fs = std::filesystem;

namespace {

constexpr int kUsageExit = 2;
constexpr int kUnexpectedExit = 70;

/// Stable exit code per error class.
const std::map<std::string_view, int>& error_codes() {
  static const std::map<std::string_view, int> codes = {
      {"NotFound", 10},           {"PreconditionError", 11},  {"FormatError", 12},
      {"ResolutionMismatch", 13}, {"SpecError", 14},          {"UnknownBackend", 15},
      {"BackendUnavailable", 16}, {"InitializationFailure", 17}, {"ReseedFailure", 18},
      {"NoProposal", 19},         {"SeedOutOfBounds", 20},    {"CorruptSession", 21},
      {"DuplicateSession", 22},   {"StorageError", 23},       {"ExportError", 24},
      {"EmptySession", 25},       {"OutOfOrderFrame", 26},    {"SessionClosed", 27},
      {"FramingError", 28},       {"ProtocolError", 29},      {"NetworkError", 30},
      {"Conflict", 31},
  };
  return codes;
}

int exit_code_for(std::string_view kind) {
  const auto it = error_codes().find(kind);
  return it == error_codes().end() ? 1 : it->second;
}

/// Re-raises a server ERROR detail of the form "Kind: message" as that kind.
[[noreturn]] void raise_remote(const std::string& detail) {
  const auto colon = detail.find(": ");
  if (colon != std::string::npos) {
    const auto it = error_codes().find(std::string_view(detail).substr(0, colon));
    if (it != error_codes().end()) throw st::Error(it->first, "server: " + detail.substr(colon + 2));
  }
  throw st::ProtocolError(detail.empty() ? "no ACK for STOP" : "server: " + detail);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw st::NotFound("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw st::StorageError("cannot write " + path.string());
}

std::string env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : fallback;
}

/// Appends the default port when the address has none.
std::string with_port(const std::string& address, const std::string& default_port) {
  return address.find(':') == std::string::npos ? address + ":" + default_port : address;
}

st::Session open_session(const fs::path& dir) {
  if (!fs::exists(dir / st::kManifestFile)) throw st::NotFound("no session at " + dir.string());
  return st::Session::load(dir);
}

fs::path existing_run(const st::Session& session, const std::string& run_id) {
  const fs::path dir = st::run_path(session.path(), run_id);
  if (!fs::exists(dir / st::kRunManifestFile)) throw st::NotFound("no run '" + run_id + "' in " + session.path().string());
  return dir;
}

fs::path run_dir_arg(const fs::path& dir) {
  if (!fs::exists(dir / st::kRunManifestFile)) throw st::NotFound("no run at " + dir.string());
  return dir;
}

std::pair<int, int> parse_point(const std::string& text) {
  int x = 0;
  int y = 0;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> x >> comma >> y) || comma != ',' || !in.eof()) {
    throw st::FormatError("expected X,Y, got '" + text + "'");
  }
  return {x, y};
}

/// Blocks until SIGINT or SIGTERM. The signals are masked in main() before
/// any thread starts, so every thread inherits the mask.
void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

std::string new_run_id(const st::Session& session, const std::string& requested) {
  if (requested.empty()) return st::next_run_id(session.path());
  if (fs::exists(st::run_path(session.path(), requested))) {
    throw st::Conflict("run '" + requested + "' already exists");
  }
  return requested;
}

struct BackendFlags {
  std::string segmenter = "chroma_flood";
  std::string tracker = "overlap";
  std::string adapter;
  double adapter_timeout = 120.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--segmenter", segmenter, "promptable segmenter (chroma_flood, external)")->capture_default_str();
    cmd->add_option("--tracker", tracker, "tracker (overlap, external)")->capture_default_str();
    cmd->add_option("--adapter", adapter, "command line of the external backend process");
    cmd->add_option("--adapter-timeout", adapter_timeout, "seconds per adapter request")->capture_default_str();
  }
  st::LabelRunConfig config() const {
    st::LabelRunConfig cfg;
    cfg.backends.segmenter = segmenter;
    cfg.backends.tracker = tracker;
    cfg.backends.adapter_command = adapter;
    cfg.backends.adapter_timeout_s = adapter_timeout;
    return cfg;
  }
};

void print_run(const std::string& run_id, const fs::path& dir, const st::LabelRun& run) {
  const st::RunSummary s = st::run_report(run);
  std::cout << run_id << " " << dir.string() << " frames=" << s.frames << " tracked=" << s.tracked
            << " empty=" << s.empty << " reseeded=" << s.reseeded << " fps=" << st::eval::format_trimmed(s.fps)
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  spdlog::set_level(spdlog::level::warn);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"seedtrack: seed-point driven video object labeling"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress");

  const std::string default_store = env_or("SEEDTRACK_STORE", "store");
  const std::string default_port = env_or("SEEDTRACK_PORT", std::to_string(st::wire::kDefaultPort).c_str());
  const std::string default_review_port = env_or("SEEDTRACK_REVIEW_PORT", "8080");

  // capture
  auto* capture = app.add_subcommand("capture", "recording server and device simulator");
  capture->require_subcommand(1);
  std::string bind = "0.0.0.0";
  std::string store = default_store;
  auto* capture_serve = capture->add_subcommand("serve", "receive sessions over the wire protocol");
  capture_serve->add_option("--bind", bind, "HOST[:PORT]")->capture_default_str();
  capture_serve->add_option("--store", store, "session store root (env SEEDTRACK_STORE)")->capture_default_str();

  std::string session_dir;
  std::string target = "127.0.0.1";
  double fps = 30.0;
  std::string session_id;
  auto* capture_replay = capture->add_subcommand("replay", "stream a stored session to a capture server");
  capture_replay->add_option("--session", session_dir, "session directory")->required();
  capture_replay->add_option("--target", target, "HOST[:PORT]")->capture_default_str();
  capture_replay->add_option("--fps", fps, "frames per second (0 = unthrottled)")->capture_default_str();
  capture_replay->add_option("--id", session_id, "session id to announce (default: the stored id)");

  // synth
  std::string spec_file;
  std::string out;
  std::optional<std::uint64_t> seed;
  auto* synth = app.add_subcommand("synth", "render a synthetic session with ground truth");
  synth->add_option("--spec", spec_file, "scene spec (JSON)")->required();
  synth->add_option("--out", out, "store root to write the session into")->required();
  synth->add_option("--seed", seed, "override the spec's random seed");

  // label / reseed
  BackendFlags backend;
  std::string run_id;
  std::optional<std::int64_t> start_frame;
  std::optional<std::int64_t> stop_frame;
  auto* label = app.add_subcommand("label", "label a session from its seed");
  label->add_option("--session", session_dir, "session directory")->required();
  backend.add_to(label);
  label->add_option("--run", run_id, "run id to create (default: next free run-NNNN)");
  label->add_option("--start-frame", start_frame, "must equal the seed frame");
  label->add_option("--stop-frame", stop_frame, "last frame to propagate to");

  std::string parent_run;
  std::int64_t frame = 0;
  std::vector<std::string> points;
  auto* reseed = app.add_subcommand("reseed", "add corrective seeds to a run");
  reseed->add_option("--session", session_dir, "session directory")->required();
  reseed->add_option("--run", parent_run, "run to correct")->required();
  reseed->add_option("--frame", frame, "frame of the new seeds")->required();
  reseed->add_option("--point", points, "X,Y (repeatable)")->required();
  reseed->add_option("--new-run", run_id, "run id to create (default: next free run-NNNN)");
  backend.add_to(reseed);

  // eval
  auto* eval = app.add_subcommand("eval", "reports against reference masks");
  eval->require_subcommand(1);
  bool json_out = false;
  std::string run_dir;
  std::string reference;
  std::string frames = "all";
  std::string report_label = "HA1 vs machine";
  auto* eval_dice = eval->add_subcommand("dice", "mean Dice of a run against reference masks");
  eval_dice->add_option("--run", run_dir, "run directory")->required();
  eval_dice->add_option("--reference", reference, "mask directory")->required();
  eval_dice->add_option("--frames", frames, "all, uniform:N, stride:N or a comma list")->capture_default_str();
  eval_dice->add_option("--label", report_label, "report label")->capture_default_str();
  eval_dice->add_flag("--json", json_out, "JSON output");

  std::vector<std::string> raters;
  std::string experiment;
  auto* eval_conc = eval->add_subcommand("concordance", "inter-rater and machine Dice");
  eval_conc->add_option("--reference", reference, "reference rater mask directory")->required();
  eval_conc->add_option("--raters", raters, "other rater mask directories")->required();
  eval_conc->add_option("--run", run_dir, "run directory")->required();
  eval_conc->add_option("--frames", frames, "all, uniform:N, stride:N or a comma list")->required();
  eval_conc->add_option("--experiment", experiment, "row name (default: run directory name)");
  eval_conc->add_flag("--json", json_out, "JSON output");

  std::string timings;
  auto* eval_speed = eval->add_subcommand("speed", "human vs machine annotation speed");
  eval_speed->add_option("--timings", timings, "CSV rater,frame,seconds")->required();
  eval_speed->add_option("--run", run_dir, "run directory")->required();
  eval_speed->add_flag("--json", json_out, "JSON output");

  // review
  auto* review = app.add_subcommand("review", "quality-control service");
  review->require_subcommand(1);
  std::string review_bind = "127.0.0.1";
  auto* review_serve = review->add_subcommand("serve", "serve the review HTTP API");
  review_serve->add_option("--store", store, "session store root (env SEEDTRACK_STORE)")->capture_default_str();
  review_serve->add_option("--bind", review_bind, "HOST[:PORT]")->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "export sessions and runs");
  exp->require_subcommand(1);
  double video_fps = 30.0;
  auto* export_video = exp->add_subcommand("video", "PV frames as Motion-JPEG AVI");
  export_video->add_option("--session", session_dir, "session directory")->required();
  export_video->add_option("--run", run_id, "accepted for symmetry; the video holds PV frames only");
  export_video->add_option("--out", out, "output file")->required();
  export_video->add_option("--fps", video_fps, "playback rate")->capture_default_str();
  auto* export_rle = exp->add_subcommand("rle", "run masks as run-length text");
  export_rle->add_option("--session", session_dir, "session directory")->required();
  export_rle->add_option("--run", run_id, "run id")->required();
  export_rle->add_option("--out", out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: UsageError: " << e.what() << "\n";
    return kUsageExit;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*capture_serve) {
      const auto server = st::serve(with_port(bind, default_port), store);
      std::cout << "listening " << server->port() << std::endl;
      wait_for_signal();
      server->stop();
    } else if (*capture_replay) {
      const st::Session session = open_session(session_dir);
      std::optional<std::string> id;
      if (!session_id.empty()) id = session_id;
      const st::ReplayReport r = st::replay(session, with_port(target, default_port), fps, id);
      std::cout << "replayed " << r.session_id << " frames=" << r.frames_sent << " "
                << (r.acknowledged ? "acknowledged" : "unacknowledged") << " " << r.detail << "\n";
      if (r.error || !r.acknowledged) raise_remote(r.detail);
    } else if (*synth) {
      st::synth::SceneSpec spec = st::synth::parse_scene_spec(read_text(spec_file));
      if (seed) spec.random_seed = *seed;
      const st::synth::SyntheticScene scene = st::synth::generate(spec, out);
      std::cout << scene.session.path().string() << " frames=" << scene.session.frame_count() << "\n";
    } else if (*label) {
      const st::Session session = open_session(session_dir);
      st::LabelRunConfig cfg = backend.config();
      cfg.start_frame = start_frame;
      cfg.stop_frame = stop_frame;
      const std::string id = new_run_id(session, run_id);
      const st::LabelRun run = st::label_session(session, cfg);
      const fs::path dir = st::run_path(session.path(), id);
      st::save_run(dir, run);
      print_run(id, dir, run);
    } else if (*reseed) {
      const st::Session session = open_session(session_dir);
      const st::AnnotationSet parent = st::load_annotations(existing_run(session, parent_run));
      std::vector<st::SeedPrompt> seeds;
      for (const auto& p : points) {
        const auto [x, y] = parse_point(p);
        seeds.push_back({frame, x, y, st::SeedOrigin::kReviewClick});
      }
      const std::string id = new_run_id(session, run_id);
      st::LabelRun run = st::reseed(session, parent, seeds, backend.config());
      run.annotations.parent_run = parent_run;
      const fs::path dir = st::run_path(session.path(), id);
      st::save_run(dir, run);
      print_run(id, dir, run);
    } else if (*eval_dice) {
      const st::AnnotationSet ann = st::load_annotations(run_dir_arg(run_dir));
      if (!fs::is_directory(reference)) throw st::NotFound("no reference directory " + reference);
      const auto ref = st::load_mask_sequence(reference);
      const auto selected = st::eval::parse_frame_selection(frames, ann.frame_count());
      const auto report = st::eval::mean_dice(ann, ref, selected, report_label);
      std::cout << (json_out ? st::eval::render_json(report) : st::eval::render_text(report)) << "\n";
    } else if (*eval_conc) {
      const fs::path rdir = run_dir_arg(run_dir);
      const st::AnnotationSet ann = st::load_annotations(rdir);
      st::eval::RaterSet set;
      auto rater_name = [](const fs::path& p) {
        const fs::path clean = p.filename().empty() ? p.parent_path() : p;
        return clean.filename().string();
      };
      if (!fs::is_directory(reference)) throw st::NotFound("no rater directory " + reference);
      set.reference_id = rater_name(reference);
      set.raters[set.reference_id] = st::load_mask_sequence(reference);
      for (const auto& dir : raters) {
        if (!fs::is_directory(dir)) throw st::NotFound("no rater directory " + dir);
        const std::string name = rater_name(dir);
        if (set.raters.count(name) != 0) throw st::PreconditionError("duplicate rater name '" + name + "'");
        set.raters[name] = st::load_mask_sequence(dir);
      }
      const auto selected = st::eval::parse_frame_selection(frames, ann.frame_count());
      const std::vector<st::eval::ConcordanceRow> rows{st::eval::concordance_report(
          set, ann, selected, experiment.empty() ? rater_name(rdir) : experiment)};
      std::cout << (json_out ? st::eval::render_json(rows) : st::eval::render_text(rows)) << "\n";
    } else if (*eval_speed) {
      const auto log = st::eval::parse_timing_log(read_text(timings));
      const auto summary = st::load_run_summary(run_dir_arg(run_dir));
      const auto report = st::eval::speed_report(log, summary);
      std::cout << (json_out ? st::eval::render_json(report) : st::eval::render_text(report)) << "\n";
    } else if (*review_serve) {
      if (!fs::is_directory(store)) throw st::NotFound("no store directory " + store);
      st::review::ReviewServer server(store);
      const std::string addr = with_port(review_bind, default_review_port);
      const auto colon = addr.rfind(':');
      const int port = std::stoi(addr.substr(colon + 1));
      if (port < 0 || port > 65535) throw st::FormatError("bad port in '" + addr + "'");
      const std::uint16_t bound = server.start(addr.substr(0, colon), static_cast<std::uint16_t>(port));
      std::cout << "listening " << bound << std::endl;
      wait_for_signal();
      server.stop();
    } else if (*export_video) {
      const st::Session session = open_session(session_dir);
      const auto n = st::export_video(session, out, video_fps);
      std::cout << out << " frames=" << n << "\n";
    } else if (*export_rle) {
      const st::Session session = open_session(session_dir);
      const st::AnnotationSet ann = st::load_annotations(existing_run(session, run_id));
      write_text(out, st::eval::export_rle(ann));
      std::cout << out << " frames=" << ann.frame_count() << "\n";
    }
  } catch (const st::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return kUnexpectedExit;
  }
  return 0;
}
