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

#include "tracebench/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <list>
#include <mutex>
#include <random>
#include <thread>

#include "tracebench/dataset.hpp"
#include "tracebench/error.hpp"
#include "tracebench/expert.hpp"
#include "tracebench/labeling.hpp"
#include "tracebench/render.hpp"
#include "tracebench/seed.hpp"
#include "tracebench/wire.hpp"

namespace tracebench {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxQueued = 512;

std::string random_token() {
  std::random_device rd;
  std::uniform_int_distribution<int> hex(0, 15);
  std::string t;
  for (int i = 0; i < 16; ++i) t.push_back("0123456789abcdef"[hex(rd)]);
  return t;
}

struct Connection {
  int fd = -1;
  std::uint64_t id = 0;
  std::atomic<bool> alive{true};
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> out;
  std::uint64_t seq = 0;
  std::thread reader;
  std::thread writer;
};

struct Command {
  std::uint64_t conn = 0;
  json header;
};

}  // namespace

struct Session::Impl {
  RunConfig config;
  int listen_fd = -1;
  int bound_port = 0;
  std::atomic<bool> stopping{false};
  std::atomic<std::int64_t> tick_count{0};
  std::atomic<int> written{0};
  std::thread accept_thread;
  std::thread sim_thread;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  std::mutex conn_mutex;
  std::list<std::shared_ptr<Connection>> connections;
  std::uint64_t next_conn = 1;
  std::uint64_t controller = 0;
  std::string token;

  mutable std::mutex cmd_mutex;
  std::vector<Command> commands;

  // Owned by the simulation thread (and by wait() after it has joined).
  WorldState world;
  std::uint64_t world_seed = 0;
  double w_max = 1.0;
  bool last_alert = false;
  bool recording = false;
  std::uint64_t episode_id = 0;
  Episode episode;

  explicit Impl(RunConfig c) : config(std::move(c)) {}

  double wall_time() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }

  void send(Connection& c, wire::Message m) {
    if (!c.alive) return;
    {
      std::lock_guard lock(c.mutex);
      m.header["seq"] = ++c.seq;
      m.header["time"] = wall_time();
      if (c.out.size() >= kMaxQueued) c.out.pop_front();  // slow reader: drop the oldest
      c.out.push_back(wire::encode(m));
    }
    c.cv.notify_one();
  }

  void send_to(std::uint64_t id, const wire::Message& m) {
    std::shared_ptr<Connection> target;
    {
      std::lock_guard lock(conn_mutex);
      for (auto& c : connections) {
        if (c->id == id) target = c;
      }
    }
    if (target) send(*target, m);
  }

  void broadcast(const wire::Message& m) {
    std::vector<std::shared_ptr<Connection>> targets;
    {
      std::lock_guard lock(conn_mutex);
      targets.assign(connections.begin(), connections.end());
    }
    for (auto& c : targets) send(*c, m);
  }

  static wire::Message message(const std::string& type, json body = json::object()) {
    wire::Message m;
    m.header = std::move(body);
    m.header["type"] = type;
    return m;
  }

  void send_error(std::uint64_t conn, const std::string& what, const json& client_seq) {
    json body = {{"message", what}};
    body["client_seq"] = client_seq;
    send_to(conn, message("error", body));
  }

  wire::StateExtras extras(const Observation* obs) {
    wire::StateExtras e;
    e.manipulability = manipulability(world.arm.joint_angles, world.arm.link_lengths);
    e.alert = singularity_alert(e.manipulability, w_max, config.service.alert_lambda);
    e.recording = recording;
    if (obs) {
      e.estimate = extract_contact(obs->tactile, config.labeling.extraction);
      if (e.estimate) {
        const Vec3 p = gripper_to_world(pixel_to_gripper(e.estimate->p_tac, obs->tactile), world.gripper.pose);
        e.estimate_world = Vec2(p.x(), p.y());
      }
    }
    return e;
  }

  Observation observation() {
    return observe(world, config.tactile, mix_seed(world_seed, 5000 + static_cast<std::uint64_t>(world.tick)),
                   config.policy.visual_res);
  }

  wire::Message snapshot() {
    const Observation obs = observation();
    wire::Message m = message("snapshot", {{"state", wire::snapshot_payload(world, extras(&obs))},
                                           {"seed", world_seed}});
    wire::attach_image(m, "tactile", obs.tactile.image);
    wire::attach_image(m, "visual", obs.visual);
    return m;
  }

  void reset_world(std::uint64_t seed, ObjectPreset preset) {
    SimConfig sim = config.sim;
    sim.preset = preset;
    config.sim.preset = preset;
    world = spawn(sim, seed);
    world_seed = seed;
    last_alert = false;
  }

  void finish_recording(bool announce) {
    if (!recording) return;
    recording = false;
    json body = {{"on", false}, {"episode_id", episode_id}, {"steps", episode.steps.size()}};
    try {
      if (episode.steps.size() < 2) throw PreconditionError("episode discarded: fewer than 2 steps");
      const LabeledEpisode le = label_episode(episode, config.labeling);
      append_episode(config.service.dataset, le, config_json(config));
      ++written;
      body["saved"] = true;
    } catch (const Error& e) {
      body["saved"] = false;
      if (announce) broadcast(message("error", {{"message", e.what()}, {"client_seq", nullptr}}));
    }
    episode = {};
    if (announce) broadcast(message("recording", body));
  }

  void handle(const Command& cmd, std::optional<json>& move, std::optional<double>& grip, bool& was_reset) {
    const json& h = cmd.header;
    const json client_seq = h.contains("client_seq") ? h["client_seq"] : json(nullptr);
    if (!h.contains("type") || !h["type"].is_string()) {
      send_error(cmd.conn, "message has no type", client_seq);
      return;
    }
    const std::string type = h["type"];
    if (type == "health") {
      send_to(cmd.conn, message("health", {{"version", kVersion}, {"tick", world.tick},
                                           {"ticks", tick_count.load()}, {"client_seq", client_seq}}));
      return;
    }
    if (type == "snapshot") {
      send_to(cmd.conn, snapshot());
      return;
    }
    if (type != "move" && type != "grip" && type != "record" && type != "reset") {
      send_error(cmd.conn, "unknown message type '" + type + "'", client_seq);
      return;
    }
    if (cmd.conn != controller || !h.contains("token") || h["token"] != token) {
      send_error(cmd.conn, "not the controller", client_seq);
      return;
    }
    try {
      if (type == "move") {
        move = json{{"dx", h.at("dx").get<double>()}, {"dy", h.at("dy").get<double>()},
                    {"dtheta", h.value("dtheta", 0.0)}};
      } else if (type == "grip") {
        grip = h.at("aperture").get<double>();
      } else if (type == "record") {
        const std::string action = h.at("action");
        if (action == "start") {
          if (recording) throw PreconditionError("already recording");
          recording = true;
          ++episode_id;
          episode = {};
          episode.p0 = world.anchor;
          episode.rate_hz = 1.0 / config.sim.dt;
          episode.preset = world.preset;
          episode.seed = world_seed;
          broadcast(message("recording", {{"on", true}, {"episode_id", episode_id}}));
        } else if (action == "stop") {
          if (!recording) throw PreconditionError("not recording");
          finish_recording(true);
        } else {
          throw PreconditionError("record action must be start or stop");
        }
      } else {
        const auto seed = h.value("seed", world_seed);
        const auto preset = h.contains("preset") ? preset_from_string(h["preset"].get<std::string>()) : world.preset;
        if (recording) {
          recording = false;
          episode = {};
          broadcast(message("recording", {{"on", false}, {"episode_id", episode_id}, {"saved", false}}));
        }
        reset_world(seed, preset);
        move.reset();
        grip.reset();
        was_reset = true;
        broadcast(snapshot());
      }
    } catch (const json::exception& e) {
      send_error(cmd.conn, std::string("malformed ") + type + ": " + e.what(), client_seq);
    } catch (const Error& e) {
      send_error(cmd.conn, e.what(), client_seq);
    }
  }

  void tick() {
    std::vector<Command> batch;
    {
      std::lock_guard lock(cmd_mutex);
      batch.swap(commands);
    }
    std::optional<json> move;
    std::optional<double> grip;
    bool was_reset = false;
    for (const auto& c : batch) handle(c, move, grip, was_reset);

    // A reset tick publishes the fresh world without advancing it.
    if (world.status == Status::Running && !was_reset) {
      const auto& sim = config.sim;
      Pose2 target = world.gripper.pose;
      if (move) {
        Vec2 d((*move)["dx"].get<double>(), (*move)["dy"].get<double>());
        const double limit = sim.max_speed * sim.dt;
        if (!d.allFinite()) d.setZero();
        if (d.norm() > limit) d *= limit / d.norm();
        double dth = (*move)["dtheta"].get<double>();
        if (!std::isfinite(dth)) dth = 0.0;
        dth = std::clamp(dth, -sim.max_angular_speed * sim.dt, sim.max_angular_speed * sim.dt);
        target = {target.x + d.x(), target.y + d.y(), wrap_angle(target.theta + dth)};
      }
      const GripperAction action{target, grip ? *grip : world.gripper.aperture};
      try {
        if (recording) {
          EpisodeStep s;
          s.obs = observation();
          s.obs.tactile.timestamp = static_cast<double>(episode.steps.size()) / episode.rate_hz;
          s.action = to_action(action);
          episode.steps.push_back(std::move(s));
          world = step(world, from_action(episode.steps.back().action), sim);
        } else {
          world = step(world, action, sim);
        }
      } catch (const Error& e) {
        broadcast(message("error", {{"message", std::string("simulation fault: ") + e.what()}, {"client_seq", nullptr}}));
        recording = false;
        episode = {};
        reset_world(world_seed, world.preset);
        broadcast(snapshot());
      }
    }
    const auto n = ++tick_count;
    if (n % std::max(1, config.service.broadcast_every) == 0) {
      const Observation obs = observation();
      const auto e = extras(&obs);
      broadcast(message("state", {{"state", wire::state_payload(world, e)}}));
      wire::Message tac = message("tactile", {{"tick", world.tick}});
      wire::attach_image(tac, "tactile", obs.tactile.image);
      broadcast(tac);
      wire::Message vis = message("visual", {{"tick", world.tick}});
      wire::attach_image(vis, "visual", obs.visual);
      broadcast(vis);
      if (e.alert != last_alert) {
        last_alert = e.alert;
        broadcast(message("alert", {{"alert", e.alert}, {"manipulability", e.manipulability}}));
      }
    }
  }

  void sim_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / config.service.tick_hz));
    auto next = clock::now();
    while (!stopping) {
      tick();
      next += period;
      const auto now = clock::now();
      if (next < now - 10 * period) next = now;  // far behind: do not try to catch up
      std::this_thread::sleep_until(next);
    }
  }

  void reader_loop(const std::shared_ptr<Connection>& c) {
    wire::Decoder decoder;
    std::vector<std::uint8_t> buf(65536);
    while (!stopping && c->alive) {
      pollfd p{c->fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      if (r < 0 && errno != EINTR) break;
      if (r <= 0) continue;
      const ssize_t n = ::recv(c->fd, buf.data(), buf.size(), 0);
      if (n <= 0) break;
      try {
        decoder.feed(std::span(buf.data(), static_cast<std::size_t>(n)));
        while (auto m = decoder.next()) {
          std::lock_guard lock(cmd_mutex);
          commands.push_back({c->id, std::move(m->header)});
        }
      } catch (const FormatError& e) {
        send(*c, message("error", {{"message", e.what()}, {"client_seq", nullptr}}));
        decoder = wire::Decoder();  // framing lost; keep the connection, resync on new data
      }
    }
    drop(c);
  }

  void writer_loop(const std::shared_ptr<Connection>& c) {
    while (true) {
      std::vector<std::uint8_t> bytes;
      {
        std::unique_lock lock(c->mutex);
        c->cv.wait_for(lock, std::chrono::milliseconds(100), [&] { return !c->out.empty() || !c->alive; });
        if (!c->alive) return;
        if (c->out.empty()) continue;
        bytes = std::move(c->out.front());
        c->out.pop_front();
      }
      std::size_t off = 0;
      while (off < bytes.size()) {
        const ssize_t n = ::send(c->fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
        if (n <= 0) {
          if (n < 0 && errno == EINTR) continue;
          c->alive = false;
          return;
        }
        off += static_cast<std::size_t>(n);
      }
    }
  }

  void drop(const std::shared_ptr<Connection>& c) {
    c->alive = false;
    c->cv.notify_all();
    std::lock_guard lock(conn_mutex);
    if (controller == c->id) controller = 0;
  }

  void accept_loop() {
    while (!stopping) {
      pollfd p{listen_fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      if (r <= 0) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      auto c = std::make_shared<Connection>();
      c->fd = fd;
      bool is_controller = false;
      {
        std::lock_guard lock(conn_mutex);
        reap_locked();
        c->id = next_conn++;
        if (controller == 0) {
          controller = c->id;
          token = random_token();
          is_controller = true;
        }
        connections.push_back(c);
      }
      json ack = {{"role", is_controller ? "controller" : "observer"},
                  {"version", kVersion},
                  {"max_speed", config.sim.max_speed},
                  {"dt", config.sim.dt},
                  {"tick_hz", config.service.tick_hz}};
      ack["token"] = is_controller ? json(token) : json(nullptr);
      send(*c, message("ack", ack));
      {
        // The snapshot is built on the simulation thread's behalf via a command.
        std::lock_guard lock(cmd_mutex);
        commands.push_back({c->id, {{"type", "snapshot"}}});
      }
      c->reader = std::thread([this, c] { reader_loop(c); });
      c->writer = std::thread([this, c] { writer_loop(c); });
    }
  }

  // Joins and forgets dead connections. Requires conn_mutex.
  void reap_locked() {
    for (auto it = connections.begin(); it != connections.end();) {
      auto& c = *it;
      if (!c->alive) {
        if (c->reader.joinable() && c->reader.get_id() != std::this_thread::get_id()) c->reader.join();
        if (c->writer.joinable()) c->writer.join();
        ::close(c->fd);
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }
};

Session::Session(RunConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Session::~Session() {
  request_stop();
  try {
    wait();
  } catch (...) {
    // destructor must not throw
  }
}

void Session::start(bool run_clock) {
  auto& s = *impl_;
  const auto& cfg = s.config.service;
  if (!(cfg.tick_hz > 0.0)) throw PreconditionError("service.tick_hz must be positive");
  if (cfg.port < 0 || cfg.port > 65535) throw PreconditionError("service.port out of range");
  s.w_max = estimate_max_manipulability(s.config.sim.arm.link_lengths, cfg.w_max_samples);
  s.reset_world(cfg.seed, s.config.sim.preset);

  s.listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (s.listen_fd < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(cfg.port));
  if (::inet_pton(AF_INET, cfg.bind.c_str(), &addr.sin_addr) != 1) {
    ::close(s.listen_fd);
    throw PreconditionError("service.bind: not an IPv4 address: " + cfg.bind);
  }
  if (::bind(s.listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int err = errno;
    ::close(s.listen_fd);
    s.listen_fd = -1;
    throw Error("cannot bind " + cfg.bind + ":" + std::to_string(cfg.port) + ": " + std::strerror(err));
  }
  ::listen(s.listen_fd, 16);
  socklen_t len = sizeof addr;
  ::getsockname(s.listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  s.bound_port = ntohs(addr.sin_port);
  s.accept_thread = std::thread([&s] { s.accept_loop(); });
  if (run_clock) s.sim_thread = std::thread([&s] { s.sim_loop(); });
}

void Session::advance(int ticks) {
  if (impl_->sim_thread.joinable()) throw StateError("advance() needs a session started without its clock");
  if (impl_->listen_fd < 0) throw StateError("session not started");
  for (int i = 0; i < ticks; ++i) impl_->tick();
}

std::size_t Session::pending_commands() const {
  std::lock_guard lock(impl_->cmd_mutex);
  return impl_->commands.size();
}

int Session::port() const { return impl_->bound_port; }

void Session::request_stop() { impl_->stopping = true; }

void Session::wait() {
  auto& s = *impl_;
  while (!s.stopping) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  if (s.sim_thread.joinable()) s.sim_thread.join();
  if (s.accept_thread.joinable()) s.accept_thread.join();
  s.finish_recording(false);
  std::list<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(s.conn_mutex);
    conns.swap(s.connections);
  }
  for (auto& c : conns) {
    c->alive = false;
    c->cv.notify_all();
    ::shutdown(c->fd, SHUT_RDWR);
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
  if (s.listen_fd >= 0) {
    ::close(s.listen_fd);
    s.listen_fd = -1;
  }
}

std::int64_t Session::ticks() const { return impl_->tick_count; }

int Session::episodes_written() const { return impl_->written; }

}  // namespace tracebench
