#pragma once

#include <cstddef>
#include <vector>

#include "fairinfl/data.hpp"
#include "fairinfl/ndcore.hpp"
#include "fairinfl/rng.hpp"
#include "fairinfl/training.hpp"

namespace testutil {

// Dataset with explicit rows; group_count inferred as max(group) + 1.
inline fairinfl::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                      const std::vector<int>& labels,
                                      const std::vector<int>& groups) {
  fairinfl::Dataset d;
  d.feature_dim = static_cast<int>(rows.front().size());
  for (const auto& r : rows) d.features.insert(d.features.end(), r.begin(), r.end());
  d.labels = labels;
  d.groups = groups;
  int m = 0;
  for (int g : groups) m = std::max(m, g + 1);
  d.group_count = std::max(m, 2);
  return d;
}

inline fairinfl::ModelSnapshot random_mlp(int input_dim, int hidden_dim, std::uint64_t seed) {
  fairinfl::TrainConfig cfg;
  cfg.seed = seed;
  return fairinfl::init_model(input_dim, hidden_dim, cfg);
}

// Central finite difference of the model output along parameter q.
inline double fd_output_gradient(const fairinfl::ModelSnapshot& snapshot,
                                 std::span<const double> x, std::size_t q, double step) {
  std::vector<double> flat = snapshot.flat_params();
  flat[q] += step;
  const double up = fairinfl::forward(snapshot.with_flat_params(flat), x);
  flat[q] -= 2.0 * step;
  const double down = fairinfl::forward(snapshot.with_flat_params(flat), x);
  return (up - down) / (2.0 * step);
}

}  // namespace testutil
