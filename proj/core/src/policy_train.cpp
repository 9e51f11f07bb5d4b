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
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tracebench/error.hpp"
#include "tracebench/policy.hpp"
#include "tracebench/seed.hpp"

namespace tracebench {

using Eigen::VectorXd;

namespace {

constexpr double kStdFloor = 1e-6;
// Scale for a dimension that never varies in the data (the aperture): small
// enough that untrained outputs cannot open the fingers.
constexpr double kConstantDimScale = 1e-3;

Eigen::Vector4d kin_of(const EpisodeStep& s) {
  return {s.obs.kinematic[0], s.obs.kinematic[1], s.obs.kinematic[2], s.obs.kinematic[3]};
}

Eigen::Vector4d action_offset(const EpisodeStep& from, const EpisodeStep& to) {
  Eigen::Vector4d d(static_cast<double>(to.action[0]) - from.obs.kinematic[0],
                    static_cast<double>(to.action[1]) - from.obs.kinematic[1],
                    static_cast<double>(to.action[2]) - from.obs.kinematic[2],
                    static_cast<double>(to.action[3]) - from.obs.kinematic[3]);
  d(2) = wrap_angle(d(2));
  return d;
}

void finish_stats(const Eigen::Vector4d& sum, const Eigen::Vector4d& sq, double n, Eigen::Vector4d& mean,
                  Eigen::Vector4d& sd) {
  mean = sum / n;
  const Eigen::Vector4d var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  sd = var.cwiseSqrt();
  for (int i = 0; i < 4; ++i) {
    if (sd(i) < kStdFloor) sd(i) = kConstantDimScale;
  }
}

std::array<double, 256> pixel_lut(const Augmentation* aug) {
  std::array<double, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    double x = v / 255.0;
    if (aug) {
      x = std::pow(x, aug->gamma);
      x = (x - 0.5) * aug->contrast + 0.5;
      x = std::clamp(x * aug->brightness, 0.0, 1.0);
    }
    lut[static_cast<std::size_t>(v)] = x - 0.5;
  }
  return lut;
}

std::vector<double> apply_lut(const Image& img, const std::array<double, 256>& lut) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lut[img.pixels[i]];
  return out;
}

struct Adam {
  VectorXd m, v;
  long step = 0;
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  Adam(Eigen::Index n, double rate) : m(VectorXd::Zero(n)), v(VectorXd::Zero(n)), lr(rate) {}

  void update(VectorXd& params, const VectorXd& grad) {
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

NormStats compute_norm_stats(const std::vector<LabeledEpisode>& episodes, int chunk) {
  Eigen::Vector4d ks = Eigen::Vector4d::Zero(), kq = Eigen::Vector4d::Zero();
  Eigen::Vector4d as = Eigen::Vector4d::Zero(), aq = Eigen::Vector4d::Zero();
  double kn = 0.0;
  double an = 0.0;
  for (const auto& le : episodes) {
    const auto& steps = le.episode.steps;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const Eigen::Vector4d k = kin_of(steps[t]);
      ks += k;
      kq += k.cwiseProduct(k);
      kn += 1.0;
      for (int j = 0; j < chunk; ++j) {
        const std::size_t idx = std::min(t + static_cast<std::size_t>(j), steps.size() - 1);
        const Eigen::Vector4d d = action_offset(steps[t], steps[idx]);
        as += d;
        aq += d.cwiseProduct(d);
        an += 1.0;
      }
    }
  }
  if (kn == 0.0) throw PreconditionError("cannot compute statistics of an empty dataset");
  NormStats s;
  finish_stats(ks, kq, kn, s.kin_mean, s.kin_std);
  finish_stats(as, aq, an, s.act_mean, s.act_std);
  return s;
}

Sample make_sample(const LabeledEpisode& le, int t, const NormStats& stats, const PolicyConfig& config,
                   const Augmentation* augment) {
  const auto& steps = le.episode.steps;
  if (t < 0 || static_cast<std::size_t>(t) >= steps.size()) throw PreconditionError("window start out of range");
  const auto& step = steps[static_cast<std::size_t>(t)];
  if (step.obs.visual.width != config.visual_res || step.obs.visual.height != config.visual_res ||
      step.obs.tactile.width() != config.tactile_res || step.obs.tactile.height() != config.tactile_res) {
    throw PreconditionError("episode image sizes do not match the policy config");
  }
  const auto lut = pixel_lut(augment);
  Sample s;
  s.visual = apply_lut(step.obs.visual, lut);
  s.tactile = apply_lut(step.obs.tactile.image, lut);
  s.kin = (kin_of(step) - stats.kin_mean).cwiseQuotient(stats.kin_std);
  const int k = config.chunk;
  s.actions.resize(4 * k);
  s.weights.resize(k);
  s.completion.resize(k);
  for (int j = 0; j < k; ++j) {
    const std::size_t idx = std::min(static_cast<std::size_t>(t + j), steps.size() - 1);
    s.actions.segment<4>(4 * j) = (action_offset(step, steps[idx]) - stats.act_mean).cwiseQuotient(stats.act_std);
    s.weights(j) = le.weights[idx];
    s.completion(j) = le.completion[idx];
  }
  return s;
}

TrainResult train(const std::vector<LabeledEpisode>& dataset, const PolicyConfig& config, const Ablation& ablation,
                  const TrainHyper& hyper, const std::function<void(const EpochStats&)>& on_epoch) {
  if (dataset.empty()) throw PreconditionError("training needs a non-empty dataset");
  if (hyper.epochs < 0 || hyper.batch < 1 || !(hyper.lr > 0.0) || hyper.samples_per_episode < 1 ||
      hyper.val_windows < 1 || hyper.val_fraction < 0.0 || hyper.val_fraction >= 1.0) {
    throw PreconditionError("invalid training hyperparameters");
  }
  config.validate();

  // Split by episode.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(mix_seed(hyper.seed, 0));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<const LabeledEpisode*> train_eps, val_eps;
  if (dataset.size() < 2) {
    train_eps = val_eps = {&dataset.front()};
  } else {
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(hyper.val_fraction * static_cast<double>(dataset.size()))));
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val_eps : train_eps).push_back(&dataset[order[i]]);
  }
  std::vector<LabeledEpisode> train_copy;
  for (const auto* e : train_eps) train_copy.push_back(*e);

  TrainResult result;
  Policy& best = result.policy;
  best.ablation = ablation;
  best.stats = compute_norm_stats(train_copy, config.chunk);
  best.params = init_params(config, mix_seed(hyper.seed, 1));
  if (hyper.epochs == 0) return result;

  std::mt19937_64 val_rng(mix_seed(hyper.seed, 2));
  std::vector<Sample> val_batch;
  for (int i = 0; i < hyper.val_windows; ++i) {
    const auto* ep = val_eps[std::uniform_int_distribution<std::size_t>(0, val_eps.size() - 1)(val_rng)];
    const int t = std::uniform_int_distribution<int>(0, static_cast<int>(ep->episode.steps.size()) - 1)(val_rng);
    val_batch.push_back(make_sample(*ep, t, best.stats, config));
  }
  const std::uint64_t val_eps_seed = mix_seed(hyper.seed, 3);

  Params params = best.params;
  Adam adam(params.size(), hyper.lr);
  std::mt19937_64 rng(mix_seed(hyper.seed, 4));
  std::uniform_real_distribution<double> bright(0.8, 1.2);
  std::uniform_real_distribution<double> scale(0.8, 1.25);
  double best_val = std::numeric_limits<double>::infinity();
  VectorXd grad;
  std::vector<std::pair<std::size_t, int>> windows;
  std::vector<Sample> batch;

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    windows.clear();
    for (std::size_t e = 0; e < train_eps.size(); ++e) {
      const int len = static_cast<int>(train_eps[e]->episode.steps.size());
      for (int i = 0; i < hyper.samples_per_episode; ++i) {
        windows.emplace_back(e, std::uniform_int_distribution<int>(0, len - 1)(rng));
      }
    }
    std::shuffle(windows.begin(), windows.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    double seen = 0.0;
    for (std::size_t start = 0; start < windows.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(windows.size(), start + static_cast<std::size_t>(hyper.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        Augmentation aug;
        if (hyper.augment) aug = {bright(rng), scale(rng), scale(rng)};
        batch.push_back(make_sample(*train_eps[windows[i].first], windows[i].second, best.stats, config,
                                    hyper.augment ? &aug : nullptr));
      }
      LossBreakdown loss;
      try {
        loss = total_loss(params, batch, ablation, rng(), &grad);
      } catch (const DivergenceError&) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      if (!grad.allFinite()) throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch));
      adam.update(params.data, grad);
      const double w = static_cast<double>(end - start);
      stats.train.center += w * loss.center;
      stats.train.reg += w * loss.reg;
      stats.train.task += w * loss.task;
      stats.train.total += w * loss.total;
      seen += w;
    }
    stats.train.center /= seen;
    stats.train.reg /= seen;
    stats.train.task /= seen;
    stats.train.total /= seen;
    try {
      stats.val = total_loss(params, val_batch, ablation, val_eps_seed);
    } catch (const DivergenceError&) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (stats.val.total < best_val) {
      best_val = stats.val.total;
      best.params = params;
      result.best_epoch = epoch;
    }
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace tracebench
