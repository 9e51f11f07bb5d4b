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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "tracebench/config.hpp"

namespace tracebench {

inline constexpr const char* kVersion = "0.1.0";

// Real-time bridge between one simulation and any number of socket clients.
// The simulation thread is the only writer of world state; connection
// threads talk to it through a command queue and per-connection send queues.
class Session {
 public:
  explicit Session(RunConfig config);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Binds and starts serving. Throws Error if the address is unavailable.
  // With run_clock = false no simulation thread is started and the caller
  // drives ticks through advance() (used for lockstep replay).
  void start(bool run_clock = true);
  void advance(int ticks = 1);
  std::size_t pending_commands() const;
  int port() const;
  // Safe to call from any thread; wait() then finishes the shutdown.
  void request_stop();
  // Blocks until stopped; flushes an in-progress recording to the dataset.
  void wait();
  std::int64_t ticks() const;
  int episodes_written() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tracebench
