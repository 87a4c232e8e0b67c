#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairinfl/data.hpp"
#include "fairinfl/ndcore.hpp"
#include "fairinfl/surrogates.hpp"

namespace fairinfl {

struct TrainConfig {
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 50;
  int batch_size = 256;  // 0 = full batch
  double lambda = 1.0;
  std::uint64_t seed = 0;
  double init_scale = 1.0;  // per-layer scale init_scale / sqrt(fan_in)
  bool plain_sgd = false;   // test mode: exact -lr * mean-gradient steps

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double surrogate = 0.0;
  double test_acc = 0.0;      // NaN when no test set was given
  double dp_violation = 0.0;  // NaN when no test set was given
};

struct TrainLog {
  std::vector<EpochStats> epochs;

  void write_csv(const std::string& path) const;
};

// Uniform weights in [-s, s] with s = init_scale / sqrt(fan_in), zero biases.
ModelSnapshot init_model(int input_dim, int hidden_dim, const TrainConfig& cfg);

// Minibatch Adam on the (regularized) objective. Direction signs of the
// surrogate are re-resolved at the start of every epoch. ERM when kind is
// absent. Deterministic given cfg.seed.
std::pair<ModelSnapshot, TrainLog> train(const Dataset& data, int hidden_dim,
                                         const TrainConfig& cfg,
                                         std::optional<SurrogateKind> kind,
                                         const Dataset* test = nullptr,
                                         MineScore mine = MineScore::linear());

}  // namespace fairinfl
