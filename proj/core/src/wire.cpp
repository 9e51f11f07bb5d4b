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

#include "tracebench/wire.hpp"

#include "tracebench/bytes.hpp"
#include "tracebench/error.hpp"

namespace tracebench::wire {

namespace {

void put_frame(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxFrame) throw PreconditionError("frame exceeds the wire limit");
  bytes::put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
}

nlohmann::json point(const Vec2& p) { return {p.x(), p.y()}; }

}  // namespace

std::vector<std::uint8_t> encode(const Message& message) {
  nlohmann::json header = message.header;
  const auto declared = header.contains("attachments") ? header["attachments"].size() : 0;
  if (declared != message.attachments.size()) {
    throw PreconditionError("header declares " + std::to_string(declared) + " attachments, message carries " +
                            std::to_string(message.attachments.size()));
  }
  const std::string text = header.dump();
  std::vector<std::uint8_t> out;
  put_frame(out, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  for (const auto& a : message.attachments) put_frame(out, a);
  return out;
}

void Decoder::feed(std::span<const std::uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<std::uint8_t>> Decoder::frame() {
  if (buffer_.size() - offset_ < 4) return std::nullopt;
  std::size_t off = offset_;
  const auto len = bytes::get_u32(buffer_, off);
  if (len > kMaxFrame) throw FormatError("frame of " + std::to_string(len) + " bytes exceeds the limit");
  if (buffer_.size() - off < len) return std::nullopt;
  std::vector<std::uint8_t> payload(buffer_.begin() + static_cast<std::ptrdiff_t>(off),
                                    buffer_.begin() + static_cast<std::ptrdiff_t>(off + len));
  offset_ = off + len;
  return payload;
}

std::optional<Message> Decoder::next() {
  while (true) {
    if (pending_ && awaiting_ == 0) {
      std::optional<Message> done = std::move(pending_);
      pending_.reset();
      return done;
    }
    auto payload = frame();
    if (!payload) return std::nullopt;
    if (pending_) {
      pending_->attachments.push_back(std::move(*payload));
      --awaiting_;
      continue;
    }
    Message m;
    try {
      m.header = nlohmann::json::parse(payload->begin(), payload->end());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed message header: ") + e.what());
    }
    if (!m.header.is_object()) throw FormatError("message header must be a JSON object");
    awaiting_ = 0;
    if (m.header.contains("attachments")) {
      if (!m.header["attachments"].is_array()) throw FormatError("attachments must be an array");
      awaiting_ = m.header["attachments"].size();
    }
    pending_ = std::move(m);
  }
}

void attach_image(Message& message, const std::string& name, const Image& image) {
  if (!message.header.contains("attachments")) message.header["attachments"] = nlohmann::json::array();
  message.header["attachments"].push_back(
      {{"name", name}, {"height", image.height}, {"width", image.width}, {"encoding", "u8"}});
  message.attachments.push_back(image.pixels);
}

Image attached_image(const Message& message, std::size_t index) {
  try {
    const auto& desc = message.header.at("attachments").at(index);
    Image img(desc.at("width").get<int>(), desc.at("height").get<int>());
    const auto& bytes = message.attachments.at(index);
    if (bytes.size() != img.pixels.size()) throw FormatError("attachment size does not match its shape");
    img.pixels = bytes;
    return img;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad attachment descriptor: ") + e.what());
  } catch (const std::out_of_range&) {
    throw FormatError("attachment index out of range");
  }
}

nlohmann::json state_payload(const WorldState& world, const StateExtras& extras, int max_points) {
  const auto& g = world.gripper;
  nlohmann::json j;
  j["gripper"] = {{"x", g.pose.x}, {"y", g.pose.y}, {"theta", g.pose.theta}, {"aperture", g.aperture},
                  {"grasping", g.grasping}};
  const auto& x = world.rope.particles;
  const std::size_t stride =
      x.size() <= static_cast<std::size_t>(max_points) ? 1 : (x.size() + static_cast<std::size_t>(max_points) - 2) /
                                                                  static_cast<std::size_t>(max_points - 1);
  nlohmann::json poly = nlohmann::json::array();
  for (std::size_t i = 0; i < x.size(); i += stride) poly.push_back(point(x[i]));
  if (!x.empty() && (x.size() - 1) % stride != 0) poly.push_back(point(x.back()));
  j["polyline"] = std::move(poly);
  j["anchor"] = point(world.anchor);
  if (extras.estimate && extras.estimate_world) {
    j["contact"] = {{"u", extras.estimate->p_tac.x()},
                    {"v", extras.estimate->p_tac.y()},
                    {"method", extras.estimate->method == ContactMethod::EllipseFit ? "ellipse" : "pca"},
                    {"area", extras.estimate->contact_area},
                    {"world", point(*extras.estimate_world)}};
    j["completion"] = (*extras.estimate_world - world.anchor).norm() / world.length;
  } else {
    j["contact"] = nullptr;
    j["completion"] = nullptr;
  }
  j["manipulability"] = extras.manipulability;
  j["alert"] = extras.alert;
  j["recording"] = extras.recording;
  j["status"] = std::string(to_string(world.status));
  j["tick"] = world.tick;
  j["sim_time"] = world.time;
  return j;
}

nlohmann::json snapshot_payload(const WorldState& world, const StateExtras& extras) {
  nlohmann::json j = state_payload(world, extras, static_cast<int>(world.rope.particles.size()) + 1);
  j["preset"] = std::string(to_string(world.preset));
  j["length"] = world.length;
  j["grasp"] = {{"arc", world.grasp.arc}, {"offset", world.grasp.offset}};
  j["joints"] = world.arm.joint_angles;
  return j;
}

}  // namespace tracebench::wire
