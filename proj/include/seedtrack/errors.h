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

#include <stdexcept>
#include <string>
#include <string_view>

namespace seedtrack {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-parsable class name; the CLI prints it and maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  std::string_view kind() const noexcept { return kind_; }

 private:
  std::string_view kind_;
};

#define SEEDTRACK_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(#Name, what) {}       \
  }

// session_store
SEEDTRACK_DEFINE_ERROR(DuplicateSession);
SEEDTRACK_DEFINE_ERROR(StorageError);
SEEDTRACK_DEFINE_ERROR(OutOfOrderFrame);
SEEDTRACK_DEFINE_ERROR(ResolutionMismatch);
SEEDTRACK_DEFINE_ERROR(SessionClosed);
SEEDTRACK_DEFINE_ERROR(SeedOutOfBounds);
SEEDTRACK_DEFINE_ERROR(EmptySession);
SEEDTRACK_DEFINE_ERROR(CorruptSession);
SEEDTRACK_DEFINE_ERROR(ExportError);
SEEDTRACK_DEFINE_ERROR(PreconditionError);

// capture_service
SEEDTRACK_DEFINE_ERROR(FramingError);
SEEDTRACK_DEFINE_ERROR(ProtocolError);
SEEDTRACK_DEFINE_ERROR(NetworkError);

// segmentation_backends / labeling_pipeline
SEEDTRACK_DEFINE_ERROR(NoProposal);
SEEDTRACK_DEFINE_ERROR(InitializationFailure);
SEEDTRACK_DEFINE_ERROR(ReseedFailure);
SEEDTRACK_DEFINE_ERROR(BackendUnavailable);
SEEDTRACK_DEFINE_ERROR(UnknownBackend);

// synthetic_scenes / evaluation / cli
SEEDTRACK_DEFINE_ERROR(SpecError);
SEEDTRACK_DEFINE_ERROR(FormatError);
SEEDTRACK_DEFINE_ERROR(NotFound);
SEEDTRACK_DEFINE_ERROR(Conflict);

#undef SEEDTRACK_DEFINE_ERROR

}  // namespace seedtrack
