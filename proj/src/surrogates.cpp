#include "fairinfl/surrogates.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace fairinfl {

SurrogateKind parse_surrogate_kind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "dp") return SurrogateKind::RelaxedDp;
  if (s == "tpr") return SurrogateKind::EqualTpr;
  if (s == "fpr") return SurrogateKind::EqualFpr;
  if (s == "eo") return SurrogateKind::EqualOdds;
  if (s == "cov") return SurrogateKind::Covariance;
  if (s == "mine") return SurrogateKind::Mine;
  throw std::invalid_argument("unknown surrogate '" + std::string(name) +
                              "', expected one of dp, tpr, fpr, eo, cov, mine");
}

std::string to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::RelaxedDp: return "dp";
    case SurrogateKind::EqualTpr: return "tpr";
    case SurrogateKind::EqualFpr: return "fpr";
    case SurrogateKind::EqualOdds: return "eo";
    case SurrogateKind::Covariance: return "cov";
    case SurrogateKind::Mine: return "mine";
  }
  throw std::logic_error("unreachable");
}

std::vector<std::string> surrogate_kind_names() {
  return {"dp", "tpr", "fpr", "eo", "cov", "mine"};
}

MineScore MineScore::linear() {
  MineScore m;
  m.value = [](double w, double z) { return z * w; };
  m.dvalue_dw = [](double /*w*/, double z) { return z; };
  return m;
}

GroupStats compute_group_stats(const ModelSnapshot& snapshot, const Dataset& data) {
  data.validate();
  GroupStats stats;
  const std::size_t m = static_cast<std::size_t>(data.group_count);
  stats.cell_counts.assign(m, {0, 0});
  stats.mean_score.assign(m, 0.0);
  stats.mean_score_by_label.assign(m, {0.0, 0.0});
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int z = data.groups[i];
    const std::size_t yi = data.labels[i] == -1 ? 0 : 1;
    const double f = forward(snapshot, data.row(i));
    stats.zbar += z * inv_n;
    stats.cell_counts[z][yi] += 1;
    stats.mean_score[z] += f * inv_n;
    stats.mean_score_by_label[z][yi] += f * inv_n;
  }
  return stats;
}

namespace {

void require_binary_groups(const Dataset& data, SurrogateKind kind) {
  if (data.group_count != 2) {
    throw std::invalid_argument("surrogate '" + to_string(kind) +
                                "' requires a binary sensitive attribute, dataset has " +
                                std::to_string(data.group_count) + " groups");
  }
}

void require_cell(const GroupStats& stats, int z, int y, SurrogateKind kind) {
  const std::size_t yi = y == -1 ? 0 : 1;
  if (stats.cell_counts[z][yi] == 0) {
    throw std::runtime_error("surrogate '" + to_string(kind) + "' requires examples in cell (z=" +
                             std::to_string(z) + ", y=" + std::to_string(y) + "), found none");
  }
}

void require_group(const GroupStats& stats, int z, SurrogateKind kind) {
  if (stats.cell_counts[z][0] + stats.cell_counts[z][1] == 0) {
    throw std::runtime_error("surrogate '" + to_string(kind) + "' requires examples with z=" +
                             std::to_string(z) + ", found none");
  }
}

int sign_or_plus(double v) { return v < 0.0 ? -1 : +1; }

}  // namespace

SurrogateSpec resolve_direction(const ModelSnapshot& snapshot, const Dataset& data,
                                SurrogateKind kind, double lambda, MineScore mine) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  SurrogateSpec spec;
  spec.kind = kind;
  spec.lambda = lambda;
  const GroupStats stats = compute_group_stats(snapshot, data);
  spec.zbar = stats.zbar;

  switch (kind) {
    case SurrogateKind::RelaxedDp: {
      require_binary_groups(data, kind);
      require_group(stats, 0, kind);
      require_group(stats, 1, kind);
      spec.sign_dp = sign_or_plus(stats.mean_score[1] - stats.mean_score[0]);
      break;
    }
    case SurrogateKind::EqualTpr: {
      require_binary_groups(data, kind);
      require_cell(stats, 0, 1, kind);
      require_cell(stats, 1, 1, kind);
      spec.sign_tpr = sign_or_plus(stats.mean_score_by_label[1][1] - stats.mean_score_by_label[0][1]);
      break;
    }
    case SurrogateKind::EqualFpr: {
      require_binary_groups(data, kind);
      require_cell(stats, 0, -1, kind);
      require_cell(stats, 1, -1, kind);
      spec.sign_fpr = sign_or_plus(stats.mean_score_by_label[1][0] - stats.mean_score_by_label[0][0]);
      break;
    }
    case SurrogateKind::EqualOdds: {
      require_binary_groups(data, kind);
      require_cell(stats, 0, 1, kind);
      require_cell(stats, 1, 1, kind);
      require_cell(stats, 0, -1, kind);
      require_cell(stats, 1, -1, kind);
      spec.sign_tpr = sign_or_plus(stats.mean_score_by_label[1][1] - stats.mean_score_by_label[0][1]);
      spec.sign_fpr = sign_or_plus(stats.mean_score_by_label[1][0] - stats.mean_score_by_label[0][0]);
      break;
    }
    case SurrogateKind::Covariance: {
      require_binary_groups(data, kind);
      require_group(stats, 0, kind);
      require_group(stats, 1, kind);
      double cov = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        cov += (data.groups[i] - stats.zbar) * forward(snapshot, data.row(i));
      }
      spec.sign_cov = sign_or_plus(cov);
      break;
    }
    case SurrogateKind::Mine: {
      spec.group_fractions.assign(data.group_count, 0.0);
      for (int g : data.groups) spec.group_fractions[g] += 1.0 / static_cast<double>(data.size());
      if (!mine.value || !mine.dvalue_dw) {
        throw std::invalid_argument("mine surrogate requires a score function with its derivative");
      }
      spec.mine = std::move(mine);
      break;
    }
  }
  spec.resolved = true;
  return spec;
}

namespace {

void require_resolved(const SurrogateSpec& spec) {
  if (!spec.resolved) throw std::logic_error("surrogate spec not resolved");
}

double dp_coeff(const SurrogateSpec& spec, int z) {
  return spec.sign_dp * (z == 1 ? 1.0 : -1.0);
}

double tpr_coeff(const SurrogateSpec& spec, int z, int y) {
  if (y != 1) return 0.0;
  return spec.sign_tpr * (z == 1 ? 1.0 : -1.0);
}

double fpr_coeff(const SurrogateSpec& spec, int z, int y) {
  if (y != -1) return 0.0;
  return spec.sign_fpr * (z == 1 ? 1.0 : -1.0);
}

}  // namespace

double per_instance_coeff(const SurrogateSpec& spec, int z, int y, double score) {
  require_resolved(spec);
  switch (spec.kind) {
    case SurrogateKind::RelaxedDp: return dp_coeff(spec, z);
    case SurrogateKind::EqualTpr: return tpr_coeff(spec, z, y);
    case SurrogateKind::EqualFpr: return fpr_coeff(spec, z, y);
    case SurrogateKind::EqualOdds: return tpr_coeff(spec, z, y) + fpr_coeff(spec, z, y);
    case SurrogateKind::Covariance: return spec.sign_cov * (z - spec.zbar);
    case SurrogateKind::Mine: {
      double mean_d = 0.0;
      for (std::size_t g = 0; g < spec.group_fractions.size(); ++g) {
        mean_d += spec.group_fractions[g] * spec.mine.dvalue_dw(score, static_cast<double>(g));
      }
      return spec.mine.dvalue_dw(score, static_cast<double>(z)) - mean_d;
    }
  }
  throw std::logic_error("unreachable");
}

double per_instance_value(const SurrogateSpec& spec, int z, int y, double score) {
  require_resolved(spec);
  if (spec.kind == SurrogateKind::Mine) {
    double mean_g = 0.0;
    for (std::size_t g = 0; g < spec.group_fractions.size(); ++g) {
      mean_g += spec.group_fractions[g] * spec.mine.value(score, static_cast<double>(g));
    }
    return spec.mine.value(score, static_cast<double>(z)) - mean_g;
  }
  return per_instance_coeff(spec, z, y, score) * score;
}

double surrogate_value(const SurrogateSpec& spec, const ModelSnapshot& snapshot,
                       const Dataset& data) {
  require_resolved(spec);
  data.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += per_instance_value(spec, data.groups[i], data.labels[i], forward(snapshot, data.row(i)));
  }
  return total / static_cast<double>(data.size());
}

FlatGrad surrogate_loss_gradient_contribution(const SurrogateSpec& spec,
                                              const ModelSnapshot& snapshot,
                                              const Dataset& data, std::size_t i) {
  require_resolved(spec);
  if (i >= data.size()) throw std::out_of_range("example index out of range");
  const double w = forward(snapshot, data.row(i));
  const double c = per_instance_coeff(spec, data.groups[i], data.labels[i], w);
  FlatGrad g = output_gradient(snapshot, data.row(i));
  for (double& v : g.values) v *= c;
  return g;
}

}  // namespace fairinfl
