// Copyright 2026 The HCEP Authors.
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

#include <cmath>
#include <random>

#include "doctest.h"
#include "hcep/errors.hpp"
#include "hcep/losses.hpp"
#include "hcep/scene.hpp"
#include "support.hpp"

using namespace hcep;
using ad::Matrix;
using testing::random_matrix;
namespace oracle = testing::oracle;

namespace {

Matrix random_probs(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix random_binary(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double p = 0.4) {
  std::bernoulli_distribution b(p);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = b(rng) ? 1.0 : 0.0;
  return m;
}

struct Instance {
  std::vector<Matrix> logits, targets;
  std::vector<Eigen::VectorXd> conf;
};

Instance random_instance(std::mt19937_64& rng, const ConceptHierarchy& h, int npix) {
  Instance in;
  for (int l = 0; l < h.num_levels(); ++l) {
    const auto n = static_cast<Eigen::Index>(h.level(l).size());
    in.logits.push_back(random_matrix(rng, n, npix, 2.0));
    in.targets.push_back(random_binary(rng, n, npix));
    in.conf.push_back(random_probs(rng, n, 1).col(0));
  }
  return in;
}

std::vector<Matrix> sigmoid(const std::vector<Matrix>& z) {
  std::vector<Matrix> out;
  for (const auto& m : z) out.push_back(m.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }));
  return out;
}

}  // namespace

TEST_CASE("dice loss analytic cases") {
  Matrix a = Matrix::Zero(1, 400), b = Matrix::Zero(1, 400);
  a.block(0, 0, 1, 100).setOnes();
  CHECK(dice_loss(a, a, 1.0) == 0.0);
  b.block(0, 200, 1, 100).setOnes();
  CHECK(dice_loss(a, b, 0.0) == 1.0);
  b.setZero();
  b.block(0, 50, 1, 100).setOnes();
  CHECK(dice_loss(a, b, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dice_loss(Matrix::Zero(2, 4), Matrix::Zero(2, 4), 0.0) == 0.0);
  CHECK_THROWS_AS(dice_loss(a, Matrix::Zero(1, 3), 1.0), ShapeMismatchError);
}

TEST_CASE("bce loss analytic cases") {
  std::mt19937_64 rng(1);
  const Matrix t = random_binary(rng, 3, 16);
  const double eps = 1e-6;
  CHECK(bce_loss(t, t, eps) <= eps * std::abs(std::log(eps)) + 1e-15);
  CHECK(bce_loss(Matrix::Constant(3, 16, 0.5), t, eps) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(bce_loss(t, Matrix::Zero(3, 15), eps), ShapeMismatchError);
}

TEST_CASE("hierarchy consistency loss analytic cases") {
  const auto h = ConceptHierarchy::build({{1, "p", 0, std::nullopt}, {2, "a", 1, 1}, {3, "b", 1, 1}});
  LossConfig cfg;
  cfg.epsilon = 1e-12;
  std::vector<Matrix> probs{Matrix::Constant(1, 1, 0.8), (Matrix(2, 1) << 0.4, 0.1).finished()};
  CHECK(hierarchy_consistency_loss(probs, h, cfg) == doctest::Approx(0.8 * std::log(2.0)).epsilon(1e-9));
  CHECK(std::abs(hierarchy_consistency_loss(probs, h, cfg) - 0.554518) < 1e-6);
  probs[0].setZero();
  CHECK(hierarchy_consistency_loss(probs, h, cfg) == 0.0);

  std::mt19937_64 rng(2);
  const auto tiny = testing::tiny_hierarchy();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Matrix> p{Matrix::Zero(2, 16), random_probs(rng, 3, 16)};
    for (int x = 0; x < 16; ++x) {
      p[0](0, x) = std::max(p[1](0, x), p[1](1, x));
      p[0](1, x) = p[1](2, x);
    }
    CHECK(std::abs(hierarchy_consistency_loss(p, tiny, LossConfig{})) <= 1e-9);
  }
  CHECK_THROWS_AS(hierarchy_consistency_loss(std::vector<Matrix>{Matrix::Zero(2, 4)}, tiny, LossConfig{}),
                  ShapeMismatchError);
}

TEST_CASE("hierarchy consistency loss is non-negative and zero iff parents never exceed children") {
  std::mt19937_64 rng(3);
  const auto h = testing::tiny_hierarchy();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Matrix> p{random_probs(rng, 2, 9), random_probs(rng, 3, 9)};
    const double v = hierarchy_consistency_loss(p, h, LossConfig{});
    CHECK(v >= 0.0);
    // Push parents below their max child: the loss vanishes.
    for (int x = 0; x < 9; ++x) {
      p[0](0, x) = std::min(p[0](0, x), std::max(p[1](0, x), p[1](1, x)));
      p[0](1, x) = std::min(p[0](1, x), p[1](2, x));
    }
    CHECK(hierarchy_consistency_loss(p, h, LossConfig{}) <= 1e-9);
  }
}

TEST_CASE("confidence mse analytic cases") {
  Matrix logits(1, 4), gt(1, 4);
  logits << 1, 1, -1, -1;
  gt << 1, 1, 0, 0;
  CHECK(confidence_mse_loss(Eigen::VectorXd::Constant(1, 0.5), logits, gt) == 0.25);
  CHECK(confidence_mse_loss(Eigen::VectorXd::Constant(1, 1.0), logits, gt) == 0.0);
  CHECK_THROWS_AS(confidence_mse_loss(Eigen::VectorXd::Constant(2, 1.0), logits, gt), ShapeMismatchError);
}

TEST_CASE("every loss agrees with its scalar-loop oracle") {
  std::mt19937_64 rng(4);
  const auto h = testing::tiny_hierarchy();
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix p = random_probs(rng, 5, 16), t = random_binary(rng, 5, 16);
    CHECK(std::abs(dice_loss(p, t, 1.0) - oracle::dice_loss(p, t, 1.0)) < 1e-9);
    CHECK(std::abs(bce_loss(p, t, 1e-6) - oracle::bce_loss(p, t, 1e-6)) < 1e-9);
    const Matrix z = random_matrix(rng, 5, 16);
    const Eigen::VectorXd c = random_probs(rng, 5, 1).col(0);
    std::vector<double> cv(c.data(), c.data() + c.size());
    CHECK(std::abs(confidence_mse_loss(c, z, t) - oracle::mse_loss(cv, z, t)) < 1e-9);
    std::vector<Matrix> probs{random_probs(rng, 2, 16), random_probs(rng, 3, 16)};
    CHECK(std::abs(hierarchy_consistency_loss(probs, h, LossConfig{}) - oracle::hc_loss(probs, h, 1e-6)) < 1e-9);
  }
}

TEST_CASE("total loss decomposition, lambda scaling and pseudo-label masking") {
  std::mt19937_64 rng(5);
  const auto h = testing::tiny_hierarchy();
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng, h, 16);
    LossConfig cfg;
    const LossReport r = total_loss(in.logits, in.conf, in.targets, h, cfg);
    CHECK(std::abs(r.total - (r.dice + r.bce + r.mse + cfg.lambda1 * r.hc)) <= 1e-9);

    // Recompose from independently evaluated components.
    const auto probs = sigmoid(in.logits);
    double dice = 0, bce = 0, mse = 0;
    for (std::size_t l = 0; l < probs.size(); ++l) {
      dice += oracle::dice_loss(probs[l], in.targets[l], cfg.dice_smooth);
      bce += oracle::bce_loss(probs[l], in.targets[l], cfg.epsilon);
      mse += oracle::mse_loss(std::vector<double>(in.conf[l].data(), in.conf[l].data() + in.conf[l].size()),
                              in.logits[l], in.targets[l]);
    }
    const double hc = oracle::hc_loss(probs, h, cfg.epsilon);
    CHECK(std::abs(r.total - (dice + bce + mse + 0.5 * hc)) <= 1e-9);

    LossConfig zero = cfg;
    zero.lambda1 = 0.0;
    const LossReport z = total_loss(in.logits, in.conf, in.targets, h, zero);
    CHECK(z.total == z.dice + z.bce + z.mse);
    LossConfig triple = cfg;
    triple.lambda1 = 1.5;
    const LossReport s = total_loss(in.logits, in.conf, in.targets, h, triple);
    CHECK(s.dice == r.dice);
    CHECK(s.bce == r.bce);
    CHECK(s.mse == r.mse);
    CHECK(s.hc == r.hc);

    const LossReport unsup = total_loss(in.logits, in.conf, in.targets, h, cfg, false);
    CHECK(unsup.mse == 0.0);
    CHECK(unsup.dice == r.dice);
  }
}

TEST_CASE("total loss gradient w.r.t. logits and confidences matches finite differences") {
  std::mt19937_64 rng(6);
  const auto h = testing::tiny_hierarchy();
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, h, 16);
    LossGradients g;
    total_loss(in.logits, in.conf, in.targets, h, LossConfig{}, true, &g);
    for (std::size_t l = 0; l < in.logits.size(); ++l) {
      const Matrix numeric = testing::numeric_gradient(
          [&](const Matrix& x) {
            auto z = in.logits;
            z[l] = x;
            // The binarised Dice target is piecewise constant; hold it fixed.
            return total_loss(z, in.conf, in.targets, h, LossConfig{}).total -
                   total_loss(z, in.conf, in.targets, h, LossConfig{}).mse +
                   total_loss(in.logits, in.conf, in.targets, h, LossConfig{}).mse;
          },
          in.logits[l]);
      CHECK(testing::compare_gradient(g.logits[l], numeric).max_rel < 1e-4);
      const Matrix numeric_t = testing::numeric_gradient(
          [&](const Matrix& x) {
            auto c = in.conf;
            c[l] = x.col(0);
            return total_loss(in.logits, c, in.targets, h, LossConfig{}).total;
          },
          Matrix(in.conf[l]));
      CHECK(testing::compare_gradient(Matrix(g.confidence[l]), numeric_t).max_rel < 1e-4);
    }
  }
}

TEST_CASE("level targets are one-hot rows of the label map") {
  const auto h = reference_taxonomy();
  SceneConfig cfg;
  cfg.image_size = 16;
  const Sample s = generate_scene(cfg, h, 3);
  for (int l = 0; l < 2; ++l) {
    const Matrix t = level_targets(s, h, l);
    CHECK(t.rows() == static_cast<Eigen::Index>(h.level(l).size()));
    for (Eigen::Index x = 0; x < t.cols(); ++x) {
      const int id = s.level_maps[static_cast<std::size_t>(l)].ids[static_cast<std::size_t>(x)];
      CHECK(t.col(x).sum() == (id == 0 ? 0.0 : 1.0));
      if (id) CHECK(t(h.slot(id), x) == 1.0);
    }
  }
}

TEST_CASE("loss config validation") {
  LossConfig c;
  c.lambda1 = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LossConfig{};
  c.epsilon = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(LossConfig::from_json(LossConfig{}.to_json()).to_json() == LossConfig{}.to_json());
}
