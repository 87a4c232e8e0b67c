#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairinfl/data.hpp"
#include "fairinfl/influence.hpp"
#include "fairinfl/training.hpp"

namespace fairinfl {

enum class PruneStrategy { Random, ByFairness, ByAccuracy };

PruneStrategy parse_prune_strategy(std::string_view name);  // "random", "fairness", "accuracy"
std::string to_string(PruneStrategy strategy);

// Removal order over all examples: ByFairness ascending |fairness_score|,
// ByAccuracy descending |loss_score|, Random a seeded shuffle. Ties break by
// ascending index; order_flip reverses the whole order.
std::vector<std::size_t> rank_for_prune(PruneStrategy strategy, const InfluenceTable& table,
                                        std::uint64_t seed, bool order_flip = false);

// Drops the first ceil(n * (1 - keep_fraction)) indices of removal_order,
// preserving the original relative order of survivors.
Dataset prune(const Dataset& data, const std::vector<std::size_t>& removal_order,
              double keep_fraction);

struct SweepCell {
  PruneStrategy strategy = PruneStrategy::Random;
  double keep_fraction = 1.0;
  std::uint64_t seed = 0;
  std::optional<double> test_acc;
  std::optional<double> dp_violation;
  std::string error;  // non-empty when the cell failed
};

struct SweepSummary {
  PruneStrategy strategy = PruneStrategy::Random;
  double keep_fraction = 1.0;
  std::size_t completed = 0;
  double mean_acc = 0.0, std_acc = 0.0;
  double mean_violation = 0.0, std_violation = 0.0;
};

struct SweepReport {
  std::vector<SweepCell> cells;

  std::vector<SweepSummary> summarize() const;
  const SweepSummary* find(const std::vector<SweepSummary>& summaries, PruneStrategy strategy,
                           double keep_fraction) const;
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

struct SweepConfig {
  std::vector<double> fractions = {0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0};
  std::vector<PruneStrategy> strategies = {PruneStrategy::Random, PruneStrategy::ByFairness,
                                           PruneStrategy::ByAccuracy};
  std::vector<std::uint64_t> seeds = {0};
  TrainConfig train;
  int hidden_dim = 64;
  SurrogateKind surrogate = SurrogateKind::RelaxedDp;
  double train_fraction = 0.8;
  bool pretrain_erm = false;  // default: the scoring model is regularized too
  bool order_flip = false;
  LossAggregation loss_agg = LossAggregation::Aggregated;

  void validate() const;
};

// Per seed: split, pretrain on the full training split, score at the
// pretrained snapshot, then prune / retrain (relaxed DP regularizer) /
// evaluate for every (strategy, fraction). Failed cells are recorded, not
// fabricated.
SweepReport run_sweep(const Dataset& data, const SweepConfig& cfg);

}  // namespace fairinfl
