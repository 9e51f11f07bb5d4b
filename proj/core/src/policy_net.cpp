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

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tracebench/error.hpp"
#include "tracebench/policy.hpp"
#include "tracebench/render.hpp"
#include "tracebench/seed.hpp"

namespace tracebench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

enum Tensor : std::size_t {
  kVisW, kVisB, kVisPos, kVisOutW, kVisOutB,
  kTacW, kTacB, kTacPos, kTacOutW, kTacOutB,
  kKinW, kKinB,
  kEncW1, kEncB1, kEncW2, kEncB2,
  kDecW1, kDecB1, kDecW2, kDecB2,
  kActW, kActB, kCompW, kCompB,
  kTensorCount
};

int patch_dim(int patch) { return patch * patch; }
int patch_count(int res, int patch) { return (res / patch) * (res / patch); }
int decoder_input(const PolicyConfig& c) { return c.visual_feat + c.tactile_feat + c.kin_embed + c.latent; }
int encoder_input(const PolicyConfig& c) { return 4 * c.chunk + c.kin_embed; }

struct Shape {
  const char* name;
  int rows;
  int cols;
  int fan_in;
};

std::vector<Shape> shapes(const PolicyConfig& c) {
  const int pv = patch_dim(c.visual_patch);
  const int nv = patch_count(c.visual_res, c.visual_patch);
  const int pt = patch_dim(c.tactile_patch);
  const int nt = patch_count(c.tactile_res, c.tactile_patch);
  const int e = c.patch_embed;
  const int ein = encoder_input(c);
  const int din = decoder_input(c);
  const int h = c.dec_hidden;
  return {
      {"visual.patch.weight", e, pv, pv},         {"visual.patch.bias", e, 1, pv},
      {"visual.position", e, nv, pv},             {"visual.out.weight", c.visual_feat, e, e},
      {"visual.out.bias", c.visual_feat, 1, e},   {"tactile.patch.weight", e, pt, pt},
      {"tactile.patch.bias", e, 1, pt},           {"tactile.position", e, nt, pt},
      {"tactile.out.weight", c.tactile_feat, e, e}, {"tactile.out.bias", c.tactile_feat, 1, e},
      {"kin.weight", c.kin_embed, 4, 4},          {"kin.bias", c.kin_embed, 1, 4},
      {"encoder.l1.weight", c.enc_hidden, ein, ein}, {"encoder.l1.bias", c.enc_hidden, 1, ein},
      {"encoder.l2.weight", 2 * c.latent, c.enc_hidden, c.enc_hidden},
      {"encoder.l2.bias", 2 * c.latent, 1, c.enc_hidden},
      {"decoder.l1.weight", h, din, din},         {"decoder.l1.bias", h, 1, din},
      {"decoder.l2.weight", h, h, h},             {"decoder.l2.bias", h, 1, h},
      {"head.action.weight", 4 * c.chunk, h, h},  {"head.action.bias", 4 * c.chunk, 1, h},
      {"head.completion.weight", c.chunk, h, h},  {"head.completion.bias", c.chunk, 1, h},
  };
}

MatrixXd tanh_of(const MatrixXd& m) { return m.array().tanh().matrix(); }

// Patch-embedding encoder state for one image stream.
struct PatchCache {
  MatrixXd x;       // patch_dim x (n * B)
  MatrixXd h;       // embed x (n * B), after tanh
  MatrixXd pooled;  // embed x B
  MatrixXd feat;    // out x B
};

void gather_patches(const std::vector<Sample>& batch, bool visual, int res, int patch, MatrixXd& x) {
  const int side = res / patch;
  const int n = side * side;
  x.resize(patch * patch, static_cast<Eigen::Index>(n) * static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& img = visual ? batch[b].visual : batch[b].tactile;
    if (img.size() != static_cast<std::size_t>(res * res)) {
      throw PreconditionError("sample image size does not match the policy config");
    }
    for (int py = 0; py < side; ++py) {
      for (int px = 0; px < side; ++px) {
        const Eigen::Index col = static_cast<Eigen::Index>(b) * n + py * side + px;
        for (int dy = 0; dy < patch; ++dy) {
          const double* row = img.data() + (py * patch + dy) * res + px * patch;
          for (int dx = 0; dx < patch; ++dx) x(dy * patch + dx, col) = row[dx];
        }
      }
    }
  }
}

void patch_forward(const Params& p, std::size_t w, std::size_t bias, std::size_t pos, std::size_t ow,
                   std::size_t ob, PatchCache& c, Eigen::Index batch) {
  const auto pos_m = p.mat(pos);
  const Eigen::Index n = pos_m.cols();
  MatrixXd pre = p.mat(w) * c.x;
  pre.colwise() += p.mat(bias).col(0);
  for (Eigen::Index b = 0; b < batch; ++b) pre.middleCols(b * n, n) += pos_m;
  c.h = tanh_of(pre);
  c.pooled.resize(c.h.rows(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) c.pooled.col(b) = c.h.middleCols(b * n, n).rowwise().mean();
  c.feat = p.mat(ow) * c.pooled;
  c.feat.colwise() += p.mat(ob).col(0);
}

void patch_backward(const Params& p, std::size_t w, std::size_t bias, std::size_t pos, std::size_t ow,
                    std::size_t ob, const PatchCache& c, const MatrixXd& d_feat, Params& g) {
  const Eigen::Index batch = d_feat.cols();
  const Eigen::Index n = p.mat(pos).cols();
  g.mat(ow) += d_feat * c.pooled.transpose();
  g.mat(ob) += d_feat.rowwise().sum();
  const MatrixXd d_pooled = p.mat(ow).transpose() * d_feat;
  MatrixXd d_pre(c.h.rows(), c.h.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    d_pre.middleCols(b * n, n) = (d_pooled.col(b) / static_cast<double>(n)).replicate(1, n);
  }
  d_pre.array() *= 1.0 - c.h.array().square();
  g.mat(w) += d_pre * c.x.transpose();
  g.mat(bias) += d_pre.rowwise().sum();
  auto gpos = g.mat(pos);
  for (Eigen::Index b = 0; b < batch; ++b) gpos += d_pre.middleCols(b * n, n);
}

MatrixXd kin_matrix(const std::vector<Sample>& batch) {
  MatrixXd k(4, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) k.col(static_cast<Eigen::Index>(b)) = batch[b].kin;
  return k;
}

struct Forward {
  PatchCache vis, tac;
  MatrixXd kin, ek;
  MatrixXd xe, g, mu, log_sigma, sigma, eps, z;
  MatrixXd d, h1, h2, actions, completion;
};

void decode(const Params& p, Forward& f) {
  const auto& c = p.config();
  const Eigen::Index batch = f.z.cols();
  f.d.resize(decoder_input(c), batch);
  f.d << f.vis.feat, f.tac.feat, f.ek, f.z;
  MatrixXd pre1 = p.mat(kDecW1) * f.d;
  pre1.colwise() += p.mat(kDecB1).col(0);
  f.h1 = tanh_of(pre1);
  MatrixXd pre2 = p.mat(kDecW2) * f.h1;
  pre2.colwise() += p.mat(kDecB2).col(0);
  f.h2 = tanh_of(pre2);
  f.actions = p.mat(kActW) * f.h2;
  f.actions.colwise() += p.mat(kActB).col(0);
  MatrixXd logits = p.mat(kCompW) * f.h2;
  logits.colwise() += p.mat(kCompB).col(0);
  f.completion = (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

void observe_features(const Params& p, const std::vector<Sample>& batch, const Ablation& ab, Forward& f) {
  const auto& c = p.config();
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (ab.no_vision) {
    f.vis.feat = MatrixXd::Zero(c.visual_feat, n);
  } else {
    gather_patches(batch, true, c.visual_res, c.visual_patch, f.vis.x);
    patch_forward(p, kVisW, kVisB, kVisPos, kVisOutW, kVisOutB, f.vis, n);
  }
  if (ab.no_tactile) {
    f.tac.feat = MatrixXd::Zero(c.tactile_feat, n);
  } else {
    gather_patches(batch, false, c.tactile_res, c.tactile_patch, f.tac.x);
    patch_forward(p, kTacW, kTacB, kTacPos, kTacOutW, kTacOutB, f.tac, n);
  }
  f.kin = kin_matrix(batch);
  f.ek = p.mat(kKinW) * f.kin;
  f.ek.colwise() += p.mat(kKinB).col(0);
}

}  // namespace

void PolicyConfig::validate() const {
  const int dims[] = {visual_res, visual_patch, tactile_res, tactile_patch, patch_embed, visual_feat,
                      tactile_feat, kin_embed, latent, enc_hidden, dec_hidden, chunk};
  for (int d : dims) {
    if (d < 1) throw PreconditionError("policy dimensions must be positive");
  }
  if (visual_res % visual_patch || tactile_res % tactile_patch) {
    throw PreconditionError("image resolution must be a multiple of the patch size");
  }
  if (lambda_reg < 0.0 || lambda_task < 0.0) throw PreconditionError("loss weights must be non-negative");
}

std::string PolicyConfig::to_json() const {
  nlohmann::ordered_json j;
  j["visual_res"] = visual_res;
  j["visual_patch"] = visual_patch;
  j["tactile_res"] = tactile_res;
  j["tactile_patch"] = tactile_patch;
  j["patch_embed"] = patch_embed;
  j["visual_feat"] = visual_feat;
  j["tactile_feat"] = tactile_feat;
  j["kin_embed"] = kin_embed;
  j["latent"] = latent;
  j["enc_hidden"] = enc_hidden;
  j["dec_hidden"] = dec_hidden;
  j["chunk"] = chunk;
  j["lambda_reg"] = lambda_reg;
  j["lambda_task"] = lambda_task;
  return j.dump();
}

PolicyConfig PolicyConfig::from_json(std::string_view text) {
  PolicyConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.visual_res = j.at("visual_res");
    c.visual_patch = j.at("visual_patch");
    c.tactile_res = j.at("tactile_res");
    c.tactile_patch = j.at("tactile_patch");
    c.patch_embed = j.at("patch_embed");
    c.visual_feat = j.at("visual_feat");
    c.tactile_feat = j.at("tactile_feat");
    c.kin_embed = j.at("kin_embed");
    c.latent = j.at("latent");
    c.enc_hidden = j.at("enc_hidden");
    c.dec_hidden = j.at("dec_hidden");
    c.chunk = j.at("chunk");
    c.lambda_reg = j.at("lambda_reg");
    c.lambda_task = j.at("lambda_task");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("policy config: ") + e.what());
  }
  c.validate();
  return c;
}

Ablation Ablation::parse(std::string_view name) {
  Ablation a;
  if (name == "none") return a;
  if (name == "vision") a.no_vision = true;
  else if (name == "tactile") a.no_tactile = true;
  else if (name == "center") a.no_center = true;
  else if (name == "task") a.no_task = true;
  else throw PreconditionError("unknown ablation '" + std::string(name) + "'");
  return a;
}

Params::Params(const PolicyConfig& config) : config_(config) {
  config.validate();
  Eigen::Index offset = 0;
  for (const auto& s : shapes(config)) {
    tensors_.push_back({s.name, s.rows, s.cols, offset});
    offset += static_cast<Eigen::Index>(s.rows) * s.cols;
  }
  data = VectorXd::Zero(offset);
}

const TensorInfo& Params::info(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw PreconditionError("no tensor named '" + std::string(name) + "'");
}

Params init_params(const PolicyConfig& config, std::uint64_t seed) {
  Params p(config);
  std::mt19937_64 rng(seed);
  const auto sh = shapes(config);
  for (std::size_t i = 0; i < sh.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sh[i].fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto m = p.mat(i);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  }
  return p;
}

double kl_loss(const VectorXd& mu, const VectorXd& log_sigma) {
  if (mu.size() != log_sigma.size()) throw PreconditionError("mu and log_sigma sizes differ");
  return 0.5 * (mu.array().square() + (2.0 * log_sigma.array()).exp() - 1.0 - 2.0 * log_sigma.array()).sum();
}

double center_loss(const MatrixXd& ahat, const MatrixXd& a, const VectorXd& weights) {
  if (ahat.rows() != a.rows() || ahat.cols() != a.cols() || weights.size() != a.rows() || a.rows() == 0) {
    throw PreconditionError("center_loss shape mismatch");
  }
  const VectorXd mae = (ahat - a).cwiseAbs().rowwise().mean();
  return weights.cwiseProduct(mae).mean();
}

double task_loss(const VectorXd& ihat, const VectorXd& i) {
  if (ihat.size() != i.size() || i.size() == 0) throw PreconditionError("task_loss shape mismatch");
  return (ihat - i).squaredNorm() / static_cast<double>(i.size());
}

Posterior encode(const Params& p, const Eigen::Vector4d& kin, const VectorXd& actions) {
  const auto& c = p.config();
  if (actions.size() != 4 * c.chunk) throw PreconditionError("action chunk size does not match the config");
  VectorXd ek = p.mat(kKinW) * kin + p.mat(kKinB).col(0);
  VectorXd xe(encoder_input(c));
  xe << actions, ek;
  const VectorXd g = (p.mat(kEncW1) * xe + p.mat(kEncB1).col(0)).array().tanh().matrix();
  const VectorXd o = p.mat(kEncW2) * g + p.mat(kEncB2).col(0);
  return {o.head(c.latent), o.tail(c.latent)};
}

namespace {

std::uint64_t content_hash(const Sample& s) {
  // FNV-1a over the kinematic state and the action chunk.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (int i = 0; i < 4; ++i) mix(s.kin(i));
  for (Eigen::Index i = 0; i < s.actions.size(); ++i) mix(s.actions(i));
  return h;
}

}  // namespace

LossBreakdown total_loss(const Params& p, const std::vector<Sample>& batch, const Ablation& ab,
                         std::uint64_t eps_seed, VectorXd* grad) {
  if (batch.empty()) throw PreconditionError("empty batch");
  const auto& c = p.config();
  const int k = c.chunk;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(n);
  const double lambda_task = ab.no_task ? 0.0 : c.lambda_task;

  MatrixXd target(4 * k, n);
  MatrixXd weights(k, n);
  MatrixXd labels(k, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& s = batch[static_cast<std::size_t>(b)];
    if (s.actions.size() != 4 * k || s.weights.size() != k || s.completion.size() != k) {
      throw PreconditionError("sample chunk size does not match the policy config");
    }
    target.col(b) = s.actions;
    weights.col(b) = ab.no_center ? VectorXd::Ones(k) : s.weights;
    labels.col(b) = s.completion;
  }

  Forward f;
  observe_features(p, batch, ab, f);
  f.xe.resize(encoder_input(c), n);
  f.xe << target, f.ek;
  MatrixXd pre_g = p.mat(kEncW1) * f.xe;
  pre_g.colwise() += p.mat(kEncB1).col(0);
  f.g = tanh_of(pre_g);
  MatrixXd o = p.mat(kEncW2) * f.g;
  o.colwise() += p.mat(kEncB2).col(0);
  f.mu = o.topRows(c.latent);
  f.log_sigma = o.bottomRows(c.latent);
  f.sigma = f.log_sigma.array().exp().matrix();
  f.eps.resize(c.latent, n);
  // Noise is keyed by sample content, so batch order does not matter.
  for (Eigen::Index b = 0; b < n; ++b) {
    std::mt19937_64 rng(mix_seed(eps_seed, content_hash(batch[static_cast<std::size_t>(b)])));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < c.latent; ++i) f.eps(i, b) = normal(rng);
  }
  f.z = f.mu + f.sigma.cwiseProduct(f.eps);
  decode(p, f);

  // Per-sample losses, then batch means.
  const MatrixXd diff = f.actions - target;
  double center = 0.0;
  double reg = 0.0;
  double task = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const MatrixXd ahat = f.actions.col(b).reshaped(4, k).transpose();
    const MatrixXd a = target.col(b).reshaped(4, k).transpose();
    center += center_loss(ahat, a, weights.col(b));
    reg += kl_loss(f.mu.col(b), f.log_sigma.col(b));
    task += task_loss(f.completion.col(b), labels.col(b));
  }
  LossBreakdown out;
  out.center = center * inv_b;
  out.reg = reg * inv_b;
  out.task = task * inv_b;
  out.total = out.center + c.lambda_reg * out.reg + lambda_task * out.task;
  if (!std::isfinite(out.total)) throw DivergenceError("non-finite loss");
  if (!grad) return out;

  Params g(c);
  MatrixXd d_act(4 * k, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (int j = 0; j < k; ++j) {
      for (int d = 0; d < 4; ++d) {
        const double r = diff(4 * j + d, b);
        const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        d_act(4 * j + d, b) = inv_b * weights(j, b) * sign / (4.0 * k);
      }
    }
  }
  const MatrixXd d_logit = (lambda_task * inv_b * 2.0 / k) *
                           ((f.completion - labels).array() * f.completion.array() *
                            (1.0 - f.completion.array())).matrix();
  g.mat(kActW) = d_act * f.h2.transpose();
  g.mat(kActB) = d_act.rowwise().sum();
  g.mat(kCompW) = d_logit * f.h2.transpose();
  g.mat(kCompB) = d_logit.rowwise().sum();
  MatrixXd d_h2 = p.mat(kActW).transpose() * d_act + p.mat(kCompW).transpose() * d_logit;
  d_h2.array() *= 1.0 - f.h2.array().square();
  g.mat(kDecW2) = d_h2 * f.h1.transpose();
  g.mat(kDecB2) = d_h2.rowwise().sum();
  MatrixXd d_h1 = p.mat(kDecW2).transpose() * d_h2;
  d_h1.array() *= 1.0 - f.h1.array().square();
  g.mat(kDecW1) = d_h1 * f.d.transpose();
  g.mat(kDecB1) = d_h1.rowwise().sum();
  const MatrixXd d_d = p.mat(kDecW1).transpose() * d_h1;

  Eigen::Index row = 0;
  const MatrixXd d_vis = d_d.middleRows(row, c.visual_feat);
  row += c.visual_feat;
  const MatrixXd d_tac = d_d.middleRows(row, c.tactile_feat);
  row += c.tactile_feat;
  MatrixXd d_ek = d_d.middleRows(row, c.kin_embed);
  row += c.kin_embed;
  const MatrixXd d_z = d_d.middleRows(row, c.latent);

  const MatrixXd d_mu = d_z + (c.lambda_reg * inv_b) * f.mu;
  const MatrixXd d_ls = d_z.cwiseProduct(f.sigma).cwiseProduct(f.eps) +
                        (c.lambda_reg * inv_b) * (f.sigma.array().square() - 1.0).matrix();
  MatrixXd d_o(2 * c.latent, n);
  d_o << d_mu, d_ls;
  g.mat(kEncW2) = d_o * f.g.transpose();
  g.mat(kEncB2) = d_o.rowwise().sum();
  MatrixXd d_g = p.mat(kEncW2).transpose() * d_o;
  d_g.array() *= 1.0 - f.g.array().square();
  g.mat(kEncW1) = d_g * f.xe.transpose();
  g.mat(kEncB1) = d_g.rowwise().sum();
  d_ek += (p.mat(kEncW1).transpose() * d_g).bottomRows(c.kin_embed);

  g.mat(kKinW) = d_ek * f.kin.transpose();
  g.mat(kKinB) = d_ek.rowwise().sum();
  if (!ab.no_vision) patch_backward(p, kVisW, kVisB, kVisPos, kVisOutW, kVisOutB, f.vis, d_vis, g);
  if (!ab.no_tactile) patch_backward(p, kTacW, kTacB, kTacPos, kTacOutW, kTacOutB, f.tac, d_tac, g);
  *grad = std::move(g.data);
  return out;
}

namespace {

std::vector<double> scaled_pixels(const Image& img) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[i] / 255.0 - 0.5;
  return out;
}

}  // namespace

ChunkPrediction infer(const Policy& policy, const Observation& obs) {
  const Params& p = policy.params;
  const auto& c = p.config();
  std::vector<Sample> batch(1);
  Sample& s = batch[0];
  s.visual = scaled_pixels(obs.visual);
  s.tactile = scaled_pixels(obs.tactile.image);
  const Eigen::Vector4d kin(obs.kinematic[0], obs.kinematic[1], obs.kinematic[2], obs.kinematic[3]);
  s.kin = (kin - policy.stats.kin_mean).cwiseQuotient(policy.stats.kin_std);

  Forward f;
  observe_features(p, batch, policy.ablation, f);
  f.z = MatrixXd::Zero(c.latent, 1);
  decode(p, f);

  ChunkPrediction out;
  out.actions.resize(c.chunk, 4);
  for (int j = 0; j < c.chunk; ++j) {
    const Eigen::Vector4d norm = f.actions.col(0).segment<4>(4 * j);
    Eigen::Vector4d a = kin + policy.stats.act_mean + norm.cwiseProduct(policy.stats.act_std);
    a(2) = wrap_angle(a(2));
    out.actions.row(j) = a.transpose();
  }
  out.completion = f.completion.col(0);
  return out;
}

GripperAction PolicyController::act(const WorldState& world, std::uint64_t obs_seed) {
  const int k = policy_.params.config().chunk;
  if (cursor_ < 0 || cursor_ >= k) {
    const Observation obs = observe(world, tactile_, obs_seed, policy_.params.config().visual_res);
    chunk_ = infer(policy_, obs);
    cursor_ = 0;
  }
  const auto a = chunk_.actions.row(cursor_++);
  return {{a(0), a(1), a(2)}, a(3)};
}

}  // namespace tracebench
