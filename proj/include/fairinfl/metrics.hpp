#pragma once

#include <optional>
#include <vector>

#include "fairinfl/data.hpp"
#include "fairinfl/ndcore.hpp"

namespace fairinfl {

// Empirical conditional rates per group under the prediction rule
// 2 * 1[f(x) >= 0] - 1. A rate whose conditioning cell is empty is reported
// as nullopt rather than 0.
struct GroupRates {
  std::vector<std::optional<double>> tpr;
  std::vector<std::optional<double>> fpr;
  std::vector<std::optional<double>> acceptance;
};

GroupRates group_rates(const ModelSnapshot& snapshot, const Dataset& data);

// Max over group pairs of the absolute acceptance-rate gap.
double fairness_violation(const ModelSnapshot& snapshot, const Dataset& data);

// Fraction of examples whose sign prediction matches the label.
double accuracy(const ModelSnapshot& snapshot, const Dataset& data);

}  // namespace fairinfl
