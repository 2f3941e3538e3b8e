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

#include "seedtrack/adapter.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "seedtrack/errors.h"
#include "seedtrack/png_io.h"

namespace seedtrack {
namespace {

using nlohmann::json;

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendUnavailable("adapter stdin closed");
    }
    off += static_cast<std::size_t>(n);
  }
}

json parse_reply(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("malformed adapter reply: ") + e.what());
  }
  if (!j.is_object()) throw BackendUnavailable("adapter reply is not an object");
  if (j.contains("error")) throw BackendUnavailable("adapter error: " + j["error"].dump());
  return j;
}

}  // namespace

AdapterProcess::AdapterProcess(const std::string& command, double timeout_s)
    : timeout_s_(timeout_s) {
  ::signal(SIGPIPE, SIG_IGN);
  char tmpl[] = "/tmp/seedtrack-adapter-XXXXXX";
  if (::mkdtemp(tmpl) == nullptr) throw BackendUnavailable("cannot create adapter scratch dir");
  scratch_ = tmpl;

  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw BackendUnavailable("pipe() failed");
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendUnavailable("fork() failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

AdapterProcess::~AdapterProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  std::error_code ec;
  std::filesystem::remove_all(scratch_, ec);
}

std::filesystem::path AdapterProcess::scratch_path(const std::string& stem) {
  return scratch_ / (stem + "-" + std::to_string(counter_++));
}

std::string AdapterProcess::exchange(const std::string& request_line) {
  write_all(to_child_, request_line + "\n");
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s_));
  char buf[4096];
  for (;;) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw BackendUnavailable("adapter timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) throw BackendUnavailable("adapter timed out");
    const ssize_t n = ::read(from_child_, buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw BackendUnavailable("adapter exited");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

namespace {

Mask read_reply_mask(const json& path) {
  if (!path.is_string()) throw BackendUnavailable("adapter mask path must be a string");
  try {
    return png::read_mask(path.get<std::string>());
  } catch (const Error& e) {
    throw BackendUnavailable("adapter mask unreadable: " + std::string(e.what()));
  }
}

}  // namespace

std::vector<MaskProposal> AdapterSegmenter::propose(const RgbImage& image, const SeedPrompt& prompt) {
  if (!image.resolution().contains(prompt.x, prompt.y)) throw SeedOutOfBounds("prompt outside image");
  const auto img_path = process_->scratch_path("image").replace_extension(".png");
  png::write(img_path, image);
  const json req = {{"op", "propose"},
                    {"image", img_path.string()},
                    {"x", prompt.x},
                    {"y", prompt.y},
                    {"out", process_->scratch_path("proposal").string()}};
  const json reply = parse_reply(process_->exchange(req.dump()));
  if (!reply.contains("masks") || !reply.contains("scores") || !reply["masks"].is_array() ||
      !reply["scores"].is_array() || reply["masks"].size() != kProposalsPerPrompt || reply["scores"].size() != kProposalsPerPrompt) {
    throw BackendUnavailable("adapter must return exactly three proposals");
  }
  std::vector<MaskProposal> out;
  for (std::size_t i = 0; i < kProposalsPerPrompt; ++i) {
    if (!reply["scores"][i].is_number()) throw BackendUnavailable("adapter scores must be numbers");
    MaskProposal p{read_reply_mask(reply["masks"][i]), reply["scores"][i].get<double>()};
    if (p.mask.resolution() != image.resolution()) throw BackendUnavailable("proposal resolution mismatch");
    if (p.mask.none()) p.score = 0.0;
    p.score = std::clamp(p.score, 0.0, 1.0);
    out.push_back(std::move(p));
  }
  return out;
}

TrackerState AdapterTracker::initialize(const RgbImage& image, const Mask& mask,
                                        std::int64_t frame_index) {
  if (image.resolution() != mask.resolution()) throw ResolutionMismatch("init image/mask mismatch");
  if (mask.none()) throw InitializationFailure("tracker initialized with an empty mask");
  const auto img_path = process_->scratch_path("image").replace_extension(".png");
  const auto mask_path = process_->scratch_path("mask").replace_extension(".png");
  png::write(img_path, image);
  png::write(mask_path, mask);
  const json req = {{"op", "init"}, {"image", img_path.string()}, {"mask", mask_path.string()}};
  parse_reply(process_->exchange(req.dump()));
  TrackerState state;
  state.last_mask = mask;
  state.frame_cursor = frame_index;
  return state;
}

Mask AdapterTracker::propagate(TrackerState& state, const RgbImage& image) {
  if (image.resolution() != state.last_mask.resolution()) throw ResolutionMismatch("propagate resolution mismatch");
  const auto img_path = process_->scratch_path("image").replace_extension(".png");
  png::write(img_path, image);
  const json req = {{"op", "propagate"},
                    {"image", img_path.string()},
                    {"out", process_->scratch_path("track").string()}};
  const json reply = parse_reply(process_->exchange(req.dump()));
  if (!reply.contains("masks") || !reply["masks"].is_array() || reply["masks"].size() != 1) {
    throw BackendUnavailable("adapter must return one propagated mask");
  }
  Mask m = read_reply_mask(reply["masks"][0]);
  if (m.resolution() != image.resolution()) throw BackendUnavailable("propagated mask resolution mismatch");
  ++state.frame_cursor;
  if (!m.none()) state.last_mask = m;
  return m;
}

}  // namespace seedtrack
