#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairinfl/data.hpp"
#include "fairinfl/ndcore.hpp"
#include "fairinfl/surrogates.hpp"

namespace fairinfl {

// Constants entering the first-order influence formulas: the learning rate
// eta of the counterfactual step, the regularizer lambda, and the population
// size carrying the 1/n weight.
struct InfluenceConfig {
  double eta = 0.001;
  double lambda = 1.0;
  std::size_t n = 1;

  void validate() const;
};

// How the per-example loss score is aggregated over targets.
enum class LossAggregation { Aggregated, SelfInfluence };

struct InfluenceRecord {
  std::size_t index = 0;
  int group = 0;
  int label = 0;
  double fairness_score = 0.0;
  double loss_score = 0.0;
};

struct InfluenceTable {
  std::vector<InfluenceRecord> records;

  void write_csv(const std::string& path) const;
  static InfluenceTable read_csv(const std::string& path);
};

// Empirical NTK: dot product of the per-parameter output gradients.
double ntk(const ModelSnapshot& snapshot, std::span<const double> x_i, std::span<const double> x_j);

// (eta/n) * Theta(i, j) * dl/dw at example i.
double influence_unconstrained(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                               const Dataset& data, std::size_t i, std::span<const double> x_j);

// S(i, j) = lambda * (eta/n) * Theta(i, j) * per_instance_coeff(i).
double fairness_score_pairwise(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                               const SurrogateSpec& spec, const Dataset& data, std::size_t i,
                               std::span<const double> x_j);

// Two-term decomposition: unconstrained influence plus the fairness term.
double influence_constrained(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                             const SurrogateSpec& spec, const Dataset& data, std::size_t i,
                             std::span<const double> x_j);

// First-order change of the loss at target (x_j, y_j). The lambda term is
// omitted when spec is null.
double loss_influence(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                      const SurrogateSpec* spec, const Dataset& data, std::size_t i,
                      std::span<const double> x_j, int y_j);

// S(i) = (1/n) sum_j coeff(j) * S(i, j), plus the loss score aggregated over
// the same targets (lambda = 0 in the loss term).
InfluenceTable aggregated_fairness_score(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                                         const SurrogateSpec& spec, const Dataset& data,
                                         LossAggregation loss_agg = LossAggregation::Aggregated);

// Parameters moved one gradient step as if example i were removed:
// theta0 + (eta/n) * grad of [loss_i + lambda * phi(f, i)]. The lambda term is
// omitted when spec is null.
ModelSnapshot one_counterfactual_step(const ModelSnapshot& snapshot, const SurrogateSpec* spec,
                                      const Dataset& data, std::size_t i,
                                      const InfluenceConfig& cfg);

// Samples num_pairs random (train, target) pairs, compares the predicted
// constrained influence against the actual output change after one
// counterfactual step, and returns the Pearson correlation.
double verify_first_order(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                          const SurrogateSpec* spec, const Dataset& data, std::size_t num_pairs,
                          std::uint64_t seed);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace fairinfl
