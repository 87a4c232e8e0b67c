#pragma once

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fairinfl/data.hpp"
#include "fairinfl/ndcore.hpp"

namespace fairinfl {

enum class SurrogateKind { RelaxedDp, EqualTpr, EqualFpr, EqualOdds, Covariance, Mine };

// Accepts "dp", "tpr", "fpr", "eo", "cov", "mine" (case-insensitive).
SurrogateKind parse_surrogate_kind(std::string_view name);
std::string to_string(SurrogateKind kind);
std::vector<std::string> surrogate_kind_names();

// Critic g(w, z) for the mutual-information surrogate, with its analytic
// derivative in w. Default is the linear critic g(w, z) = z * w.
struct MineScore {
  std::function<double(double w, double z)> value;
  std::function<double(double w, double z)> dvalue_dw;

  static MineScore linear();
};

// Empirical per-group statistics of a snapshot over a dataset. All expectation
// terms carry the 1/n weight over the full set (indicator form).
struct GroupStats {
  double zbar = 0.0;
  // cell_counts[z][0] counts y = -1, cell_counts[z][1] counts y = +1.
  std::vector<std::array<std::size_t, 2>> cell_counts;
  std::vector<double> mean_score;           // E[f . 1[z=a]]
  std::vector<std::array<double, 2>> mean_score_by_label;  // E[f . 1[z=a, y=b]]
};

GroupStats compute_group_stats(const ModelSnapshot& snapshot, const Dataset& data);

// A fairness surrogate with its direction signs resolved at a snapshot.
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::RelaxedDp;
  double lambda = 1.0;
  int sign_dp = +1;   // RelaxedDp
  int sign_tpr = +1;  // EqualTpr / EqualOdds
  int sign_fpr = +1;  // EqualFpr / EqualOdds
  int sign_cov = +1;  // Covariance: global beta
  double zbar = 0.0;                    // Covariance / Mine
  std::vector<double> group_fractions;  // Mine: Pr(z = g) over the training set
  MineScore mine;                       // Mine only
  bool resolved = false;
};

// Evaluates the signed quantity inside each absolute value at the snapshot and
// freezes the corresponding sign (ties resolve to +1).
SurrogateSpec resolve_direction(const ModelSnapshot& snapshot, const Dataset& data,
                                SurrogateKind kind, double lambda = 1.0,
                                MineScore mine = MineScore::linear());

// Derivative coefficient d phi(f, i) / df at w = f(x_i).
double per_instance_coeff(const SurrogateSpec& spec, int z, int y, double score);

// Per-instance surrogate term phi(f, i) at w = f(x_i).
double per_instance_value(const SurrogateSpec& spec, int z, int y, double score);

// phi(f) = (1/n) sum_i phi(f, i).
double surrogate_value(const SurrogateSpec& spec, const ModelSnapshot& snapshot,
                       const Dataset& data);

// Gradient of the per-instance surrogate term w.r.t. the parameters:
// per_instance_coeff * output_gradient.
FlatGrad surrogate_loss_gradient_contribution(const SurrogateSpec& spec,
                                              const ModelSnapshot& snapshot,
                                              const Dataset& data, std::size_t i);

}  // namespace fairinfl
