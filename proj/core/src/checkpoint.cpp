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

#include <cstring>

#include <nlohmann/json.hpp>

#include "tracebench/bytes.hpp"
#include "tracebench/dataset.hpp"
#include "tracebench/error.hpp"
#include "tracebench/policy.hpp"

namespace tracebench {

// Layout (little-endian): "TBCK", u32 version, u32 header length, JSON header
// (policy config + ablation), u32 tensor count, then per tensor: u16 name
// length, name, u32 rows, u32 cols, rows*cols f32 in row-major order.

namespace {

void put_tensor(std::vector<std::uint8_t>& out, const std::string& name, const Eigen::MatrixXd& m) {
  bytes::put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  bytes::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  bytes::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) bytes::put_f32(out, static_cast<float>(m(r, c)));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Policy& policy) {
  std::vector<std::uint8_t> out = {'T', 'B', 'C', 'K'};
  bytes::put_u32(out, kCheckpointVersion);
  nlohmann::ordered_json header;
  header["policy"] = nlohmann::ordered_json::parse(policy.params.config().to_json());
  header["ablation"] = {{"no_vision", policy.ablation.no_vision},
                        {"no_tactile", policy.ablation.no_tactile},
                        {"no_center", policy.ablation.no_center},
                        {"no_task", policy.ablation.no_task}};
  const std::string text = header.dump();
  bytes::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());

  const auto& tensors = policy.params.tensors();
  bytes::put_u32(out, static_cast<std::uint32_t>(tensors.size() + 4));
  for (std::size_t i = 0; i < tensors.size(); ++i) put_tensor(out, tensors[i].name, policy.params.mat(i));
  put_tensor(out, "norm.kin_mean", policy.stats.kin_mean);
  put_tensor(out, "norm.kin_std", policy.stats.kin_std);
  put_tensor(out, "norm.act_mean", policy.stats.act_mean);
  put_tensor(out, "norm.act_std", policy.stats.act_std);
  write_file(path, out);
}

Policy load_checkpoint(const std::filesystem::path& path) {
  const auto in = read_file(path);
  std::size_t off = 0;
  bytes::require(in, off, 4, "checkpoint magic");
  if (std::memcmp(in.data(), "TBCK", 4) != 0) throw FormatError(path.string() + ": not a checkpoint");
  off = 4;
  const auto version = bytes::get_u32(in, off);
  if (version != kCheckpointVersion) {
    throw VersionError(path.string() + ": checkpoint version " + std::to_string(version) + " is not supported");
  }
  const auto hlen = bytes::get_u32(in, off);
  bytes::require(in, off, hlen, "checkpoint header");
  const std::string text(in.begin() + static_cast<std::ptrdiff_t>(off),
                         in.begin() + static_cast<std::ptrdiff_t>(off + hlen));
  off += hlen;

  Policy policy;
  try {
    const auto header = nlohmann::json::parse(text);
    policy.params = Params(PolicyConfig::from_json(header.at("policy").dump()));
    const auto& ab = header.at("ablation");
    policy.ablation.no_vision = ab.at("no_vision");
    policy.ablation.no_tactile = ab.at("no_tactile");
    policy.ablation.no_center = ab.at("no_center");
    policy.ablation.no_task = ab.at("no_task");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }

  const auto count = bytes::get_u32(in, off);
  std::size_t filled = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto nlen = bytes::get_u16(in, off);
    bytes::require(in, off, nlen, "tensor name");
    const std::string name(in.begin() + static_cast<std::ptrdiff_t>(off),
                           in.begin() + static_cast<std::ptrdiff_t>(off + nlen));
    off += nlen;
    const auto rows = bytes::get_u32(in, off);
    const auto cols = bytes::get_u32(in, off);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = bytes::get_f32(in, off);
    }
    Eigen::Vector4d* norm = nullptr;
    if (name == "norm.kin_mean") norm = &policy.stats.kin_mean;
    else if (name == "norm.kin_std") norm = &policy.stats.kin_std;
    else if (name == "norm.act_mean") norm = &policy.stats.act_mean;
    else if (name == "norm.act_std") norm = &policy.stats.act_std;
    if (norm) {
      if (rows != 4 || cols != 1) throw FormatError(path.string() + ": bad shape for " + name);
      *norm = m.col(0);
      continue;
    }
    const auto& info = policy.params.info(name);
    if (static_cast<int>(rows) != info.rows || static_cast<int>(cols) != info.cols) {
      throw FormatError(path.string() + ": tensor " + name + " has the wrong shape");
    }
    policy.params.data.segment(info.offset, info.size()) = m.reshaped();
    ++filled;
  }
  if (filled != policy.params.tensors().size()) throw FormatError(path.string() + ": missing tensors");
  if (off != in.size()) throw FormatError(path.string() + ": trailing bytes");
  return policy;
}

}  // namespace tracebench
