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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tracebench/eval.hpp"
#include "tracebench/labeling.hpp"

namespace tracebench {

struct PolicyConfig {
  int visual_res = 64;
  int visual_patch = 8;
  int tactile_res = 32;
  int tactile_patch = 4;
  int patch_embed = 16;
  int visual_feat = 32;
  int tactile_feat = 16;
  int kin_embed = 16;
  int latent = 8;
  int enc_hidden = 64;
  int dec_hidden = 128;
  int chunk = 20;
  double lambda_reg = 100.0;
  double lambda_task = 100.0;

  void validate() const;
  std::string to_json() const;
  static PolicyConfig from_json(std::string_view text);
  bool operator==(const PolicyConfig&) const = default;
};

struct Ablation {
  bool no_vision = false;
  bool no_tactile = false;
  bool no_center = false;  // w == 1
  bool no_task = false;    // lambda_task = 0

  static Ablation parse(std::string_view name);  // none|vision|tactile|center|task
};

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  Eigen::Index offset = 0;
  Eigen::Index size() const { return static_cast<Eigen::Index>(rows) * cols; }
};

// All weights in one flat vector; tensors are column-major views into it.
class Params {
 public:
  Params() = default;
  explicit Params(const PolicyConfig& config);

  const PolicyConfig& config() const { return config_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& info(std::string_view name) const;
  Eigen::Map<Eigen::MatrixXd> mat(std::size_t id) {
    const auto& t = tensors_[id];
    return {data.data() + t.offset, t.rows, t.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> mat(std::size_t id) const {
    const auto& t = tensors_[id];
    return {data.data() + t.offset, t.rows, t.cols};
  }
  Eigen::Index size() const { return data.size(); }

  Eigen::VectorXd data;

 private:
  PolicyConfig config_{};
  std::vector<TensorInfo> tensors_;
};

// Seeded uniform +-1/sqrt(fan_in) for every tensor.
Params init_params(const PolicyConfig& config, std::uint64_t seed);

// Per-dimension zero-mean/unit-variance statistics.
struct NormStats {
  Eigen::Vector4d kin_mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d kin_std = Eigen::Vector4d::Ones();
  Eigen::Vector4d act_mean = Eigen::Vector4d::Zero();  // of a_{t+j} - o^K_t
  Eigen::Vector4d act_std = Eigen::Vector4d::Ones();
  bool operator==(const NormStats&) const = default;
};

NormStats compute_norm_stats(const std::vector<LabeledEpisode>& episodes, int chunk);

// One training window in network units: images scaled to [-0.5, 0.5],
// kinematics and action offsets normalized.
struct Sample {
  std::vector<double> visual;   // visual_res^2, row-major
  std::vector<double> tactile;  // tactile_res^2
  Eigen::Vector4d kin = Eigen::Vector4d::Zero();
  Eigen::VectorXd actions;      // 4k, step-major
  Eigen::VectorXd weights;      // k
  Eigen::VectorXd completion;   // k
};

struct Augmentation {
  double brightness = 1.0;  // multiplicative
  double contrast = 1.0;    // about mid-gray
  double gamma = 1.0;
};

// Window starting at step t; the chunk is padded by repeating the last step.
Sample make_sample(const LabeledEpisode& episode, int t, const NormStats& stats, const PolicyConfig& config,
                   const Augmentation* augment = nullptr);

struct LossBreakdown {
  double center = 0.0;
  double reg = 0.0;
  double task = 0.0;
  double total = 0.0;
};

double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma);
// ahat, a: k x 4; weights: k.
double center_loss(const Eigen::MatrixXd& ahat, const Eigen::MatrixXd& a, const Eigen::VectorXd& weights);
double task_loss(const Eigen::VectorXd& ihat, const Eigen::VectorXd& i);

struct Posterior {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_sigma;
};
// Encoder on normalized kinematics and a normalized 4k action chunk.
Posterior encode(const Params& params, const Eigen::Vector4d& kin, const Eigen::VectorXd& actions);

// Batch-mean losses with the reparameterization noise drawn from eps_seed.
// Writes d(total)/d(params) into `grad` when given.
LossBreakdown total_loss(const Params& params, const std::vector<Sample>& batch, const Ablation& ablation,
                         std::uint64_t eps_seed, Eigen::VectorXd* grad = nullptr);

struct Policy {
  Params params;
  NormStats stats;
  Ablation ablation;
};

struct ChunkPrediction {
  Eigen::MatrixXd actions;      // k x 4, absolute targets (x, y, theta, aperture)
  Eigen::VectorXd completion;   // k, in (0, 1)
};

// Decodes with z = 0.
ChunkPrediction infer(const Policy& policy, const Observation& obs);

struct TrainHyper {
  int epochs = 2000;
  int batch = 8;
  double lr = 1e-4;
  std::uint64_t seed = 1;
  bool augment = true;
  int samples_per_episode = 24;  // random windows per training episode per epoch
  double val_fraction = 0.1;
  int val_windows = 32;
};

struct EpochStats {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown val;
};

struct TrainResult {
  Policy policy;               // lowest validation loss
  std::vector<EpochStats> curve;
  int best_epoch = 0;
};

// Throws DivergenceError on a non-finite loss.
TrainResult train(const std::vector<LabeledEpisode>& dataset, const PolicyConfig& config, const Ablation& ablation,
                  const TrainHyper& hyper, const std::function<void(const EpochStats&)>& on_epoch = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const Policy& policy);
Policy load_checkpoint(const std::filesystem::path& path);

// Executes each predicted chunk open-loop, then re-infers.
class PolicyController : public Controller {
 public:
  PolicyController(const Policy& policy, FrameSpec tactile) : policy_(policy), tactile_(tactile) {}
  GripperAction act(const WorldState& world, std::uint64_t obs_seed) override;

 private:
  const Policy& policy_;
  FrameSpec tactile_;
  ChunkPrediction chunk_;
  int cursor_ = -1;
};

}  // namespace tracebench
