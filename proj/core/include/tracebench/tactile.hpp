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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tracebench/geometry.hpp"
#include "tracebench/image.hpp"
#include "tracebench/sim.hpp"

namespace tracebench {

// A tactile image. Pixel (col, row) has its center at (col + 0.5, row + 0.5);
// image u runs along the gripper x axis and v along the gripper y axis
// (the finger), so the sensing-region center c = (W/2, H/2) sits on the
// finger line.
struct TactileFrame {
  Image image;
  float p2m = 1.0f;  // pixels per meter
  double timestamp = 0.0;

  int width() const { return image.width; }
  int height() const { return image.height; }
  Vec2 center() const { return {0.5 * image.width, 0.5 * image.height}; }
  bool operator==(const TactileFrame&) const = default;
};

struct FrameSpec {
  int height = 32;
  int width = 32;
  float p2m = 32.0f / 0.024f;
};

inline constexpr std::uint8_t kTactileBackground = 10;
inline constexpr std::uint8_t kTactilePeak = 235;
inline constexpr double kTactileNoiseSigma = 4.0;
inline constexpr double kTactileNoiseClamp = 5.0 * kTactileNoiseSigma;

// Band geometry in pixel coordinates, for rendering synthetic contacts.
struct BandSpec {
  Vec2 contact{16.0, 16.0};   // band center, pixels
  Vec2 direction{1.0, 0.0};   // object tangent in the image plane
  double width = 8.0;         // pixels, object diameter * p2m
  double footprint = 3.5;     // pixels, Gaussian half-length of the pressed region
};

// Background plus a textured band, then bounded zero-mean Gaussian noise.
TactileFrame render_band(const FrameSpec& spec, const std::optional<BandSpec>& band,
                         std::uint32_t texture_seed, std::uint64_t noise_seed, double timestamp = 0.0);

// Tactile image of the current grasp; background when nothing is grasped.
TactileFrame render_tactile(const WorldState& world, const FrameSpec& spec, std::uint64_t seed);

enum class ContactMethod { EllipseFit, PCA };

struct ContactEstimate {
  Vec2 p_tac{0.0, 0.0};
  ContactMethod method = ContactMethod::PCA;
  double contact_area = 0.0;       // pixels^2
  double major_axis_angle = 0.0;   // radians in the image plane
};

struct ExtractionParams {
  int binarize_threshold = 60;
  double gaussian_sigma = 1.0;
  double min_area = 6.0;
  int ellipse_min_points = 5;

  void validate() const;
};

// Gaussian blur, binarize, connected-component contours, largest contour,
// then an ellipse fit (or PCA for small/degenerate contours).
std::optional<ContactEstimate> extract_contact(const TactileFrame& frame, const ExtractionParams& params);

// Pixel contact to the gripper frame, z = 0.
Vec3 pixel_to_gripper(const Vec2& p_tac, const TactileFrame& frame);
Vec2 gripper_to_pixel(const Vec3& p_gripper, const TactileFrame& frame);

// Homogeneous planar transform from the gripper frame to the world frame.
Vec3 gripper_to_world(const Vec3& p_gripper, const Pose2& pose);
Vec3 world_to_gripper(const Vec3& p_world, const Pose2& pose);

// Building blocks of the extraction pipeline, exposed for testing.
std::vector<double> gaussian_blur(const Image& img, double sigma);

struct EllipseFit {
  Vec2 center{0.0, 0.0};
  double major_axis_angle = 0.0;
};
// Direct least-squares conic fit constrained to ellipses; empty when the
// points are degenerate (collinear, too few) or no ellipse solution exists.
std::optional<EllipseFit> fit_ellipse(std::span<const Vec2> points);

// TACF record: 16-byte header (magic "TACF", u16 version, u16 H, u16 W,
// f32 p2m, 2 reserved bytes; little-endian) then H*W bytes row-major.
inline constexpr std::uint16_t kTacfVersion = 1;
inline constexpr std::size_t kTacfHeaderSize = 16;
void append_tacf(std::vector<std::uint8_t>& out, const TactileFrame& frame);
// Decodes one record at `offset` and advances it.
TactileFrame read_tacf(std::span<const std::uint8_t> bytes, std::size_t& offset, double timestamp);

}  // namespace tracebench
