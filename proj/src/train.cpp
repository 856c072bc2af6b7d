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

#include "hcep/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hcep/checkpoint.hpp"
#include "hcep/errors.hpp"
#include "hcep/kernels.hpp"

namespace hcep {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("decay_factor must be in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"decay_factor", decay_factor},
          {"batch_size", batch_size},       {"epochs", epochs},
          {"seed", seed},                   {"freeze_encoder_base", freeze_encoder_base}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.decay_factor = j.value("decay_factor", c.decay_factor);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.freeze_encoder_base = j.value("freeze_encoder_base", c.freeze_encoder_base);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed train config: ") + ex.what());
  }
  c.validate();
  return c;
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(cfg.decay_factor, epoch);
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,dice,bce,mse,hc,total\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.loss.dice << ',' << r.loss.bce << ',' << r.loss.mse << ',' << r.loss.hc << ','
        << r.loss.total << '\n';
  return out.str();
}

namespace {

class Adam {
 public:
  explicit Adam(const ParamStore& ps) : m_(zero_gradients(ps)), v_(zero_gradients(ps)) {}

  void step(ParamStore& ps, const Gradients& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (int s = 0; s < ps.size(); ++s) {
      Parameter& p = ps[s];
      if (!p.trainable) continue;
      const auto k = static_cast<std::size_t>(s);
      m_[k] = kBeta1 * m_[k] + (1.0 - kBeta1) * g[k];
      v_[k] = kBeta2 * v_[k] + (1.0 - kBeta2) * g[k].cwiseProduct(g[k]);
      p.value.array() -=
          lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  Gradients m_, v_;
  int t_ = 0;
};

}  // namespace

TrainLog fit(Model& model, std::span<const Sample> pool, const TrainConfig& cfg,
             const LossConfig& loss_cfg, const FitOptions& options) {
  cfg.validate();
  loss_cfg.validate();
  if (pool.empty()) throw EmptyPoolError("labeled pool is empty");
  model.freeze_encoder_base(cfg.freeze_encoder_base);
  TrainLog log;
  Adam adam(model.params());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  int step = options.step_offset;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = learning_rate_at(cfg, epoch);
    LossReport epoch_sum;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Sample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&pool[order[i]]);
      const BatchResult r = batch_loss_and_gradients(model, batch, loss_cfg, options.policy);
      if (!std::isfinite(r.loss.total))
        throw DivergenceError("total loss became non-finite at step " + std::to_string(step));
      log.rows.push_back({step, epoch, r.loss});
      adam.step(model.params(), r.grads, lr);
      epoch_sum += r.loss;
      ++batches;
      ++step;
    }
    if (!options.checkpoint_path.empty())
      save_checkpoint(options.checkpoint_path, model, {{"epoch", epoch + 1}, {"step", step}});
    if (options.on_epoch) options.on_epoch(epoch, epoch_sum.scaled(1.0 / batches));
  }
  return log;
}

std::vector<Sample> load_pool(const DatasetManifest& m, const std::vector<std::string>& ids) {
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(read_sample(m.label_root(id), id));
  return out;
}

}  // namespace hcep
