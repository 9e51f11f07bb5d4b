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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "tracebench/dataset.hpp"
#include "tracebench/demos.hpp"
#include "tracebench/error.hpp"
#include "tracebench/policy.hpp"
#include "tracebench/seed.hpp"

using namespace tracebench;
namespace fs = std::filesystem;

namespace {

PolicyConfig small_config() {
  PolicyConfig c;
  c.visual_res = 64;
  c.patch_embed = 8;
  c.visual_feat = 8;
  c.tactile_feat = 8;
  c.kin_embed = 8;
  c.latent = 4;
  c.enc_hidden = 16;
  c.dec_hidden = 32;
  c.chunk = 5;
  return c;
}

const std::vector<LabeledEpisode>& demos() {
  static const auto eps = generate_demos(3, SimConfig{}, DemoOptions{}, 21);
  return eps;
}

std::vector<Sample> batch_of(const PolicyConfig& c, int n, int stride = 7) {
  const auto stats = compute_norm_stats(demos(), c.chunk);
  std::vector<Sample> b;
  for (int i = 0; i < n; ++i) b.push_back(make_sample(demos()[static_cast<std::size_t>(i) % 3], stride * i, stats, c));
  return b;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("kl closed form") {
    CHECK(kl_loss(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)) == 0.0);
    CHECK(kl_loss(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)) == doctest::Approx(0.5));
    // Frozen from tests/oracles/oracles.py (closed form there is numpy).
    Eigen::VectorXd mu(4), ls(4);
    mu << 2.040919, -2.555665, 0.418099, -0.56777;
    ls << -0.226325, -0.107799, -1.009993, -0.115966;
    CHECK(kl_loss(mu, ls) == doctest::Approx(6.2408833).epsilon(1e-6));
  }

  TEST_CASE("center loss") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(2, 4);
    CHECK(center_loss(a, a, Eigen::VectorXd::Constant(2, 0.3)) == 0.0);
    Eigen::MatrixXd b = a;
    b.row(0).array() += 0.2;
    b.row(1).array() -= 0.4;
    Eigen::VectorXd w(2);
    w << 1.0, 0.5;
    CHECK(center_loss(b, a, w) == doctest::Approx(0.2));
    const Eigen::MatrixXd c = Eigen::MatrixXd::Random(3, 4), d = Eigen::MatrixXd::Random(3, 4);
    CHECK(center_loss(c, d, Eigen::VectorXd::Ones(3)) == doctest::Approx((c - d).cwiseAbs().mean()));
    CHECK_THROWS_AS(center_loss(c, d, Eigen::VectorXd::Ones(2)), PreconditionError);
  }

  TEST_CASE("task loss") {
    Eigen::VectorXd i = Eigen::VectorXd::Random(6);
    CHECK(task_loss(i, i) == 0.0);
    CHECK(task_loss(i.array() + 0.1, i) == doctest::Approx(0.01));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXd p(20), q(20);
    for (int k = 0; k < 20; ++k) p(k) = u(rng), q(k) = u(rng);
    double naive = 0.0;
    for (int k = 0; k < 20; ++k) naive += (p(k) - q(k)) * (p(k) - q(k));
    CHECK(std::abs(task_loss(p, q) - naive / 20) < 1e-12);
    CHECK_THROWS_AS(task_loss(p, q.head(3)), PreconditionError);
  }

  TEST_CASE("encoder: zero weights, determinism, sensitivity") {
    const auto c = small_config();
    Params zero = init_params(c, 1);
    zero.data.setZero();
    const Eigen::VectorXd acts = Eigen::VectorXd::Random(4 * c.chunk);
    const auto z = encode(zero, Eigen::Vector4d(0.1, 0.2, 0.3, 0.0), acts);
    CHECK(z.mu.isZero());
    CHECK(z.log_sigma.isZero());

    const Params p = init_params(c, 2);
    const auto a = encode(p, Eigen::Vector4d(0.1, 0.2, 0.3, 0.0), acts);
    const auto b = encode(p, Eigen::Vector4d(0.1, 0.2, 0.3, 0.0), acts);
    CHECK(a.mu == b.mu);
    Eigen::VectorXd moved = acts;
    moved(3) += 1e-3;
    CHECK((encode(p, Eigen::Vector4d(0.1, 0.2, 0.3, 0.0), moved).mu - a.mu).norm() > 0.0);
  }

  TEST_CASE("perfect prediction has zero loss") {
    const auto c = small_config();
    Params p = init_params(c, 1);
    p.data.setZero();  // actions 0, completion sigmoid(0) = 0.5, posterior = prior
    auto batch = batch_of(c, 4);
    for (auto& s : batch) {
      s.actions.setZero();
      s.completion.setConstant(0.5);
    }
    const auto l = total_loss(p, batch, {}, 3);
    CHECK(l.total == 0.0);
  }

  TEST_CASE("loss identity, ablations, permutation") {
    const auto c = small_config();
    const Params p = init_params(c, 4);
    auto batch = batch_of(c, 6);
    const auto l = total_loss(p, batch, {}, 5);
    CHECK(l.total == l.center + 100.0 * l.reg + 100.0 * l.task);

    const auto no_task = total_loss(p, batch, Ablation::parse("task"), 5);
    CHECK(no_task.total == no_task.center + 100.0 * no_task.reg);

    auto ones = batch;
    for (auto& s : ones) s.weights.setOnes();
    CHECK(total_loss(p, batch, Ablation::parse("center"), 5).center == total_loss(p, ones, {}, 5).center);

    auto rev = batch;
    std::reverse(rev.begin(), rev.end());
    CHECK(total_loss(p, rev, {}, 5).total == doctest::Approx(l.total).epsilon(1e-9));

    CHECK_THROWS_AS(Ablation::parse("bogus"), PreconditionError);
    CHECK_THROWS_AS(total_loss(p, {}, {}, 1), PreconditionError);
  }

  TEST_CASE("vision and tactile ablations zero their inputs") {
    const auto c = small_config();
    const Params p = init_params(c, 4);
    auto batch = batch_of(c, 3);
    auto blank = batch;
    for (auto& s : blank) std::fill(s.visual.begin(), s.visual.end(), 0.0);
    CHECK(total_loss(p, batch, Ablation::parse("vision"), 2).total == total_loss(p, blank, Ablation::parse("vision"), 2).total);
    blank = batch;
    for (auto& s : blank) std::fill(s.tactile.begin(), s.tactile.end(), 0.0);
    CHECK(total_loss(p, batch, Ablation::parse("tactile"), 2).total ==
          total_loss(p, blank, Ablation::parse("tactile"), 2).total);
  }

  TEST_CASE("analytic gradient matches finite differences per tensor") {
    PolicyConfig c;
    c.visual_res = 16;
    c.tactile_res = 8;
    c.patch_embed = 4;
    c.visual_feat = 4;
    c.tactile_feat = 4;
    c.kin_embed = 4;
    c.latent = 2;
    c.enc_hidden = 8;
    c.dec_hidden = 8;
    c.chunk = 3;
    const Params p = init_params(c, 7);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<Sample> batch(3);
    for (auto& s : batch) {
      s.visual.assign(256, 0.0);
      for (auto& v : s.visual) v = u(rng);
      s.tactile.assign(64, 0.0);
      for (auto& v : s.tactile) v = u(rng);
      s.kin = Eigen::Vector4d::Random();
      s.actions = Eigen::VectorXd::Random(12);
      s.weights = Eigen::VectorXd::Constant(3, 0.7);
      s.completion = Eigen::VectorXd::Constant(3, 0.4);
    }
    Eigen::VectorXd g;
    total_loss(p, batch, {}, 1, &g);
    for (const auto& t : p.tensors()) {
      double worst = 0.0;
      for (Eigen::Index i = t.offset; i < t.offset + t.size(); i += std::max<Eigen::Index>(1, t.size() / 7)) {
        Params a = p, b = p;
        a.data(i) += 1e-4;
        b.data(i) -= 1e-4;
        const double fd = (total_loss(a, batch, {}, 1).total - total_loss(b, batch, {}, 1).total) / 2e-4;
        worst = std::max(worst, std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-8}));
      }
      INFO(t.name);
      CHECK(worst < 1e-4);
    }
  }

  TEST_CASE("init is uniform within one over sqrt fan-in") {
    const auto c = small_config();
    const Params p = init_params(c, 3);
    CHECK(p.data.allFinite());
    const auto& w = p.info("decoder.l1.weight");
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
    CHECK(p.data.segment(w.offset, w.size()).cwiseAbs().maxCoeff() <= bound);
    CHECK_THROWS_AS(p.info("nope"), PreconditionError);
  }

  TEST_CASE("infer is deterministic with completions in (0,1)") {
    const auto c = small_config();
    Policy pol{init_params(c, 5), compute_norm_stats(demos(), c.chunk), {}};
    const auto& obs = demos()[0].episode.steps[3].obs;
    const auto a = infer(pol, obs);
    const auto b = infer(pol, obs);
    CHECK(a.actions == b.actions);
    REQUIRE(a.actions.rows() == c.chunk);
    CHECK(a.completion.minCoeff() > 0.0);
    CHECK(a.completion.maxCoeff() < 1.0);
  }

  TEST_CASE("training: zero epochs, determinism, overfit") {
    const auto c = small_config();
    TrainHyper h;
    h.epochs = 0;
    const auto r0 = train({demos()[0]}, c, {}, h);
    CHECK(r0.curve.empty());
    CHECK(r0.policy.params.data == init_params(c, mix_seed(h.seed, 1)).data);

    h.epochs = 200;
    h.augment = false;
    h.lr = 3e-3;
    const auto r1 = train({demos()[0]}, c, {}, h);
    REQUIRE(r1.curve.size() == 200);
    CHECK(r1.curve.back().train.center <= 0.5 * r1.curve.front().train.center);

    h.epochs = 5;
    h.augment = true;
    h.lr = 1e-4;
    const auto a = train(demos(), c, {}, h);
    const auto b = train(demos(), c, {}, h);
    CHECK(a.curve.back().val.total == b.curve.back().val.total);
    CHECK(a.policy.params.data == b.policy.params.data);

    CHECK_THROWS_AS(train({}, c, {}, h), PreconditionError);
  }

  TEST_CASE("completion head is mostly non-decreasing on a held-out straight trace") {
    SimConfig sim;
    sim.layout = Layout::Straight;
    const auto eps = generate_demos(6, sim, DemoOptions{}, 2);
    const std::vector<LabeledEpisode> train_eps(eps.begin(), eps.end() - 1);
    auto c = small_config();
    TrainHyper h;
    h.epochs = 300;
    h.lr = 3e-3;
    const auto r = train(train_eps, c, {}, h);
    int ok = 0, total = 0;
    const auto& held = eps.back().episode;
    for (std::size_t t = 0; t < held.steps.size(); t += 5) {
      const auto pred = infer(r.policy, held.steps[t].obs);
      for (Eigen::Index j = 1; j < pred.completion.size(); ++j) {
        ok += pred.completion(j) >= pred.completion(j - 1);
        ++total;
      }
    }
    CHECK(ok >= 0.9 * total);
  }

  TEST_CASE("checkpoint round trip and corruption") {
    const auto c = small_config();
    Policy pol{init_params(c, 5), compute_norm_stats(demos(), c.chunk), Ablation::parse("center")};
    const fs::path path = fs::temp_directory_path() / "tracebench_test.ckpt";
    save_checkpoint(path, pol);
    const Policy back = load_checkpoint(path);
    CHECK(back.params.config() == c);
    CHECK(back.params.data.cast<float>() == pol.params.data.cast<float>());
    CHECK(back.ablation.no_center);
    CHECK((back.stats.act_std.cast<float>() == pol.stats.act_std.cast<float>()));

    auto bytes = read_file(path);
    auto bad = bytes;
    bad[0] = 'X';
    write_file(path, bad);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    bad = bytes;
    bad[4] = 7;
    write_file(path, bad);
    CHECK_THROWS_AS(load_checkpoint(path), VersionError);
    bad = bytes;
    bad.resize(bytes.size() - 10);
    write_file(path, bad);
    CHECK_THROWS_AS(load_checkpoint(path), TruncatedError);
    bad = bytes;
    bad.push_back(0);
    write_file(path, bad);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    fs::remove(path);
  }

  TEST_CASE("config json round trip and validation") {
    auto c = small_config();
    CHECK(PolicyConfig::from_json(c.to_json()) == c);
    c.visual_patch = 7;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
  }
}
