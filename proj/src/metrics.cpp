#include "fairinfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairinfl {

GroupRates group_rates(const ModelSnapshot& snapshot, const Dataset& data) {
  data.validate();
  const std::size_t m = static_cast<std::size_t>(data.group_count);
  std::vector<std::size_t> pos_cnt(m, 0), neg_cnt(m, 0), total(m, 0);
  std::vector<std::size_t> pos_acc(m, 0), neg_acc(m, 0), total_acc(m, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t z = static_cast<std::size_t>(data.groups[i]);
    const bool accept = forward(snapshot, data.row(i)) >= 0.0;
    total[z] += 1;
    if (accept) total_acc[z] += 1;
    if (data.labels[i] == 1) {
      pos_cnt[z] += 1;
      if (accept) pos_acc[z] += 1;
    } else {
      neg_cnt[z] += 1;
      if (accept) neg_acc[z] += 1;
    }
  }
  GroupRates rates;
  rates.tpr.resize(m);
  rates.fpr.resize(m);
  rates.acceptance.resize(m);
  for (std::size_t z = 0; z < m; ++z) {
    if (pos_cnt[z] > 0) rates.tpr[z] = static_cast<double>(pos_acc[z]) / pos_cnt[z];
    if (neg_cnt[z] > 0) rates.fpr[z] = static_cast<double>(neg_acc[z]) / neg_cnt[z];
    if (total[z] > 0) rates.acceptance[z] = static_cast<double>(total_acc[z]) / total[z];
  }
  return rates;
}

double fairness_violation(const ModelSnapshot& snapshot, const Dataset& data) {
  if (data.group_count < 2) throw std::invalid_argument("fairness_violation: need >= 2 groups");
  const GroupRates rates = group_rates(snapshot, data);
  for (int z = 0; z < data.group_count; ++z) {
    if (!rates.acceptance[z].has_value()) {
      throw std::runtime_error("fairness_violation: group " + std::to_string(z) + " is empty");
    }
  }
  double gap = 0.0;
  for (int a = 0; a < data.group_count; ++a) {
    for (int b = a + 1; b < data.group_count; ++b) {
      gap = std::max(gap, std::abs(*rates.acceptance[a] - *rates.acceptance[b]));
    }
  }
  return gap;
}

double accuracy(const ModelSnapshot& snapshot, const Dataset& data) {
  data.validate();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int pred = forward(snapshot, data.row(i)) >= 0.0 ? 1 : -1;
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace fairinfl
