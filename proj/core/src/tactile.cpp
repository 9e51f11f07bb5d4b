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

#include "tracebench/tactile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "tracebench/bytes.hpp"
#include "tracebench/error.hpp"

namespace tracebench {

namespace {

struct Texture {
  double period = 3.0;
  double angle = 0.0;
  double phase = 0.0;
  double depth = 0.18;

  explicit Texture(std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    period = 2.5 + 1.5 * uni(rng);
    angle = std::numbers::pi * uni(rng);
    phase = 2.0 * std::numbers::pi * uni(rng);
    depth = 0.10 + 0.12 * uni(rng);
  }

  // Multiplicative shading in [1 - depth, 1], in band-aligned coordinates.
  double operator()(double along, double across) const {
    const double t = along * std::cos(angle) + across * std::sin(angle);
    const double wave = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * t / period + phase);
    return 1.0 - depth * wave;
  }
};

std::vector<double> blur_1d_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

struct Component {
  std::vector<int> pixels;    // linear indices
  std::vector<Vec2> contour;  // boundary pixel centers
};

std::vector<Component> connected_components(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!mask[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    auto& comp = comps.back();
    stack.assign(1, start);
    label[static_cast<std::size_t>(start)] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const int px = p % w;
      const int py = p / w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = px + dx;
          const int ny = py + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int q = ny * w + nx;
          if (mask[static_cast<std::size_t>(q)] && label[static_cast<std::size_t>(q)] < 0) {
            label[static_cast<std::size_t>(q)] = id;
            stack.push_back(q);
          }
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    for (int p : comp.pixels) {
      const int px = p % w;
      const int py = p / w;
      bool boundary = px == 0 || py == 0 || px == w - 1 || py == h - 1;
      constexpr int kDx[4] = {1, -1, 0, 0};
      constexpr int kDy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4 && !boundary; ++k) {
        const int q = (py + kDy[k]) * w + (px + kDx[k]);
        boundary = label[static_cast<std::size_t>(q)] != id;
      }
      if (boundary) comp.contour.emplace_back(px + 0.5, py + 0.5);
    }
  }
  return comps;
}

ContactEstimate pca_estimate(std::span<const Vec2> points, double area) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 major = eig.eigenvectors().col(1);
  return {mean, ContactMethod::PCA, area, std::atan2(major.y(), major.x())};
}

}  // namespace

void ExtractionParams::validate() const {
  if (binarize_threshold <= 0 || binarize_threshold >= 255) {
    throw PreconditionError("binarize_threshold must lie in (0, 255)");
  }
  if (!(gaussian_sigma > 0.0)) throw PreconditionError("gaussian_sigma must be positive");
  if (ellipse_min_points < 5) throw PreconditionError("an ellipse fit needs at least 5 points");
}

TactileFrame render_band(const FrameSpec& spec, const std::optional<BandSpec>& band,
                         std::uint32_t texture_seed, std::uint64_t noise_seed, double timestamp) {
  if (spec.width <= 0 || spec.height <= 0 || spec.width % 2 || spec.height % 2) {
    throw PreconditionError("tactile frame dimensions must be positive and even");
  }
  if (!(spec.p2m > 0.0f)) throw PreconditionError("p2m must be positive");
  TactileFrame frame;
  frame.image = Image(spec.width, spec.height, kTactileBackground);
  frame.p2m = spec.p2m;
  frame.timestamp = timestamp;

  const Texture texture(texture_seed);
  std::mt19937_64 rng(noise_seed ^ 0x9E3779B97F4A7C15ULL);
  std::normal_distribution<double> noise(0.0, kTactileNoiseSigma);

  Vec2 dir = band ? band->direction : Vec2::UnitX();
  if (dir.norm() < 1e-12) dir = Vec2::UnitX();
  dir.normalize();
  const Vec2 normal(-dir.y(), dir.x());
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      double v = kTactileBackground;
      if (band) {
        const Vec2 q = Vec2(c + 0.5, r + 0.5) - band->contact;
        const double along = q.dot(dir);
        const double across = q.dot(normal);
        // Flat-topped across the object, anti-aliased edges, Gaussian along it.
        const double edge = std::clamp(0.5 * band->width + 0.5 - std::abs(across), 0.0, 1.0);
        const double envelope = std::exp(-0.5 * (along * along) / (band->footprint * band->footprint));
        v += (kTactilePeak - kTactileBackground) * edge * envelope * texture(along, across);
      }
      v += std::clamp(noise(rng), -kTactileNoiseClamp, kTactileNoiseClamp);
      frame.image.at(c, r) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return frame;
}

TactileFrame render_tactile(const WorldState& world, const FrameSpec& spec, std::uint64_t seed) {
  std::optional<BandSpec> band;
  if (const auto contact = contact_point(world)) {
    const Pose2& pose = world.gripper.pose;
    const Vec2 local = pose.inverse_apply(contact->point);
    const Vec2 tangent = world.rope.tangent_at(contact->arc);
    const Vec2 local_tangent(tangent.dot(pose.x_axis()), tangent.dot(pose.y_axis()));
    BandSpec b;
    b.contact = Vec2(0.5 * spec.width, 0.5 * spec.height) + static_cast<double>(spec.p2m) * local;
    b.direction = local_tangent;
    b.width = world.rope.diameter * spec.p2m;
    band = b;
  }
  return render_band(spec, band, world.rope.texture_seed, seed, world.time);
}

std::vector<double> gaussian_blur(const Image& img, double sigma) {
  const auto kernel = blur_1d_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width;
  const int h = img.height;
  std::vector<double> tmp(static_cast<std::size_t>(w * h));
  std::vector<double> out(static_cast<std::size_t>(w * h));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int cc = std::clamp(c + k, 0, w - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(cc, r);
      }
      tmp[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int rr = std::clamp(r + k, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(rr * w + c)];
      }
      out[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  return out;
}

std::optional<EllipseFit> fit_ellipse(std::span<const Vec2> points) {
  if (points.size() < 5) return std::nullopt;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  double scale = 0.0;
  for (const auto& p : points) scale += (p - mean).squaredNorm();
  scale = std::sqrt(scale / static_cast<double>(points.size()));
  if (scale < 1e-12) return std::nullopt;

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd quad(n, 3);
  Eigen::MatrixXd lin(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 q = (points[static_cast<std::size_t>(i)] - mean) / scale;
    quad.row(i) << q.x() * q.x(), q.x() * q.y(), q.y() * q.y();
    lin.row(i) << q.x(), q.y(), 1.0;
  }
  const Eigen::Matrix3d s1 = quad.transpose() * quad;
  const Eigen::Matrix3d s2 = quad.transpose() * lin;
  const Eigen::Matrix3d s3 = lin.transpose() * lin;
  Eigen::FullPivLU<Eigen::Matrix3d> s3_lu(s3);
  if (!s3_lu.isInvertible()) return std::nullopt;
  const Eigen::Matrix3d t = -s3_lu.solve(s2.transpose());
  const Eigen::Matrix3d m = s1 + s2 * t;
  // Premultiply by the inverse of the ellipse constraint matrix.
  Eigen::Matrix3d reduced;
  reduced.row(0) = m.row(2) / 2.0;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2.0;
  Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
  if (eig.info() != Eigen::Success) return std::nullopt;

  std::optional<Eigen::Vector3d> a1;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(eig.eigenvalues()(k).imag()) > 1e-9) continue;
    const Eigen::Vector3d v = eig.eigenvectors().col(k).real();
    if (4.0 * v(0) * v(2) - v(1) * v(1) > 0.0) {
      a1 = v;
      break;
    }
  }
  if (!a1) return std::nullopt;
  const Eigen::Vector3d a2 = t * *a1;
  const double A = (*a1)(0), B = (*a1)(1), C = (*a1)(2), D = a2(0), E = a2(1);
  const double det = B * B - 4.0 * A * C;
  if (std::abs(det) < 1e-14) return std::nullopt;
  const Vec2 center_n((2.0 * C * D - B * E) / det, (2.0 * A * E - B * D) / det);
  if (!center_n.allFinite()) return std::nullopt;

  Eigen::Matrix2d form;
  form << A, B / 2.0, B / 2.0, C;
  if (A < 0.0) form = -form;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> axes(form);
  const Vec2 major = axes.eigenvectors().col(0);  // smallest curvature = longest axis
  return EllipseFit{mean + scale * center_n, std::atan2(major.y(), major.x())};
}

std::optional<ContactEstimate> extract_contact(const TactileFrame& frame, const ExtractionParams& params) {
  params.validate();
  const int w = frame.width();
  const int h = frame.height();
  const auto blurred = gaussian_blur(frame.image, params.gaussian_sigma);
  std::vector<std::uint8_t> mask(blurred.size());
  for (std::size_t i = 0; i < blurred.size(); ++i) {
    mask[i] = blurred[i] > params.binarize_threshold ? 1 : 0;
  }
  const auto comps = connected_components(mask, w, h);
  const Component* largest = nullptr;
  for (const auto& comp : comps) {
    if (!largest || comp.pixels.size() > largest->pixels.size()) largest = &comp;
  }
  if (!largest) return std::nullopt;
  const auto area = static_cast<double>(largest->pixels.size());
  if (area < params.min_area) return std::nullopt;

  const auto& contour = largest->contour;
  if (static_cast<int>(contour.size()) >= params.ellipse_min_points) {
    if (const auto fit = fit_ellipse(contour)) {
      const Vec2 c = fit->center;
      if (c.x() >= 0.0 && c.x() < w && c.y() >= 0.0 && c.y() < h) {
        return ContactEstimate{c, ContactMethod::EllipseFit, area, fit->major_axis_angle};
      }
    }
  }
  return pca_estimate(contour, area);
}

Vec3 pixel_to_gripper(const Vec2& p_tac, const TactileFrame& frame) {
  const Vec2 c = frame.center();
  const double p2m = frame.p2m;
  return {(p_tac.x() - c.x()) / p2m, (p_tac.y() - c.y()) / p2m, 0.0};
}

Vec2 gripper_to_pixel(const Vec3& p_gripper, const TactileFrame& frame) {
  const Vec2 c = frame.center();
  const double p2m = frame.p2m;
  return {c.x() + p_gripper.x() * p2m, c.y() + p_gripper.y() * p2m};
}

Vec3 gripper_to_world(const Vec3& p_gripper, const Pose2& pose) {
  const Eigen::Vector3d h = pose.matrix() * Eigen::Vector3d(p_gripper.x(), p_gripper.y(), 1.0);
  return {h.x(), h.y(), p_gripper.z()};
}

Vec3 world_to_gripper(const Vec3& p_world, const Pose2& pose) {
  const Vec2 local = pose.inverse_apply({p_world.x(), p_world.y()});
  return {local.x(), local.y(), p_world.z()};
}

void append_tacf(std::vector<std::uint8_t>& out, const TactileFrame& frame) {
  out.insert(out.end(), {'T', 'A', 'C', 'F'});
  bytes::put_u16(out, kTacfVersion);
  bytes::put_u16(out, static_cast<std::uint16_t>(frame.height()));
  bytes::put_u16(out, static_cast<std::uint16_t>(frame.width()));
  bytes::put_f32(out, frame.p2m);
  bytes::put_u16(out, 0);
  out.insert(out.end(), frame.image.pixels.begin(), frame.image.pixels.end());
}

TactileFrame read_tacf(std::span<const std::uint8_t> in, std::size_t& offset, double timestamp) {
  bytes::require(in, offset, kTacfHeaderSize, "TACF header");
  if (in[offset] != 'T' || in[offset + 1] != 'A' || in[offset + 2] != 'C' || in[offset + 3] != 'F') {
    throw FormatError("bad TACF magic");
  }
  offset += 4;
  const auto version = bytes::get_u16(in, offset);
  if (version != kTacfVersion) {
    throw VersionError("unsupported TACF version " + std::to_string(version));
  }
  const int h = bytes::get_u16(in, offset);
  const int w = bytes::get_u16(in, offset);
  const float p2m = bytes::get_f32(in, offset);
  offset += 2;  // reserved
  if (h == 0 || w == 0 || h % 2 || w % 2 || !(p2m > 0.0f)) throw FormatError("invalid TACF header fields");
  const auto n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  bytes::require(in, offset, n, "TACF pixels");
  TactileFrame frame;
  frame.image = Image(w, h);
  std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), n, frame.image.pixels.begin());
  frame.p2m = p2m;
  frame.timestamp = timestamp;
  offset += n;
  return frame;
}

}  // namespace tracebench
