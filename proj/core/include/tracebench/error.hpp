// Copyright 2026 The TraceBench Authors
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

namespace tracebench {

// Base for all library errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition (bad config, bad arguments).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// On-disk data is malformed: bad magic, bad field, unparseable JSON.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Streams or files disagree with each other (lengths, episode counts).
class ConsistencyError : public FormatError {
 public:
  using FormatError::FormatError;
};

// A numerical procedure produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Simulation harness misuse, e.g. stepping a terminated world.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace tracebench
