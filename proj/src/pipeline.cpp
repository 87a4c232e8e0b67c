#include "fairinfl/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fairinfl/metrics.hpp"
#include "fairinfl/rng.hpp"

namespace fairinfl {

PruneStrategy parse_prune_strategy(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "random") return PruneStrategy::Random;
  if (s == "fairness") return PruneStrategy::ByFairness;
  if (s == "accuracy") return PruneStrategy::ByAccuracy;
  throw std::invalid_argument("unknown prune strategy '" + std::string(name) +
                              "', expected one of random, fairness, accuracy");
}

std::string to_string(PruneStrategy strategy) {
  switch (strategy) {
    case PruneStrategy::Random: return "random";
    case PruneStrategy::ByFairness: return "fairness";
    case PruneStrategy::ByAccuracy: return "accuracy";
  }
  throw std::logic_error("unreachable");
}

std::vector<std::size_t> rank_for_prune(PruneStrategy strategy, const InfluenceTable& table,
                                        std::uint64_t seed, bool order_flip) {
  if (table.records.empty()) throw std::invalid_argument("rank_for_prune: empty table");
  const std::size_t n = table.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (strategy) {
    case PruneStrategy::Random: {
      Rng rng(seed);
      rng.shuffle(order);
      break;
    }
    case PruneStrategy::ByFairness:
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = std::abs(table.records[a].fairness_score);
        const double sb = std::abs(table.records[b].fairness_score);
        return sa != sb ? sa < sb : a < b;
      });
      break;
    case PruneStrategy::ByAccuracy:
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = std::abs(table.records[a].loss_score);
        const double sb = std::abs(table.records[b].loss_score);
        return sa != sb ? sa > sb : a < b;
      });
      break;
  }
  if (order_flip) std::reverse(order.begin(), order.end());
  return order;
}

Dataset prune(const Dataset& data, const std::vector<std::size_t>& removal_order,
              double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("prune: keep_fraction must be in (0, 1]");
  }
  if (removal_order.size() != data.size()) {
    throw std::invalid_argument("prune: removal order does not cover the dataset");
  }
  const std::size_t n = data.size();
  const std::size_t n_remove =
      static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 - keep_fraction)));
  if (n_remove >= n) throw std::invalid_argument("prune: keep_fraction leaves no examples");
  std::vector<bool> removed(n, false);
  for (std::size_t k = 0; k < n_remove; ++k) removed[removal_order[k]] = true;
  std::vector<std::size_t> survivors;
  survivors.reserve(n - n_remove);
  for (std::size_t i = 0; i < n; ++i) {
    if (!removed[i]) survivors.push_back(i);
  }
  return subset(data, survivors);
}

void SweepConfig::validate() const {
  train.validate();
  if (fractions.empty() || strategies.empty() || seeds.empty()) {
    throw std::invalid_argument("sweep: fractions, strategies and seeds must be nonempty");
  }
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("sweep: fractions must lie in (0, 1]");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("sweep: train_fraction must lie in (0, 1)");
  }
  if (hidden_dim < 1) throw std::invalid_argument("sweep: hidden_dim must be >= 1");
}

SweepReport run_sweep(const Dataset& data, const SweepConfig& cfg) {
  cfg.validate();
  data.validate();
  SweepReport report;
  for (const std::uint64_t seed : cfg.seeds) {
    const auto [train_set, test_set] = split(data, cfg.train_fraction, seed);

    TrainConfig pre_cfg = cfg.train;
    pre_cfg.seed = seed;
    std::optional<SurrogateKind> pre_kind;
    if (!cfg.pretrain_erm) pre_kind = cfg.surrogate;
    const auto [pre_snapshot, pre_log] = train(train_set, cfg.hidden_dim, pre_cfg, pre_kind);

    InfluenceConfig icfg;
    icfg.eta = cfg.train.learning_rate;
    icfg.lambda = cfg.train.lambda;
    icfg.n = train_set.size();
    const SurrogateSpec spec =
        resolve_direction(pre_snapshot, train_set, cfg.surrogate, cfg.train.lambda);
    const InfluenceTable table =
        aggregated_fairness_score(icfg, pre_snapshot, spec, train_set, cfg.loss_agg);

    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
      const PruneStrategy strategy = cfg.strategies[s];
      const std::vector<std::size_t> order =
          rank_for_prune(strategy, table, mix_seed(seed, 100 + s), cfg.order_flip);
      for (double fraction : cfg.fractions) {
        SweepCell cell;
        cell.strategy = strategy;
        cell.keep_fraction = fraction;
        cell.seed = seed;
        try {
          const Dataset kept = prune(train_set, order, fraction);
          TrainConfig retrain_cfg = cfg.train;
          retrain_cfg.seed = seed;
          const auto [snapshot, log] =
              train(kept, cfg.hidden_dim, retrain_cfg, SurrogateKind::RelaxedDp);
          cell.test_acc = accuracy(snapshot, test_set);
          cell.dp_violation = fairness_violation(snapshot, test_set);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::vector<SweepSummary> SweepReport::summarize() const {
  std::vector<SweepSummary> out;
  for (const SweepCell& cell : cells) {
    SweepSummary* slot = nullptr;
    for (SweepSummary& s : out) {
      if (s.strategy == cell.strategy && s.keep_fraction == cell.keep_fraction) slot = &s;
    }
    if (slot == nullptr) {
      out.push_back({cell.strategy, cell.keep_fraction, 0, 0.0, 0.0, 0.0, 0.0});
      slot = &out.back();
    }
    if (cell.test_acc.has_value()) {
      // first pass accumulates sums; finalized below
      slot->completed += 1;
      slot->mean_acc += *cell.test_acc;
      slot->mean_violation += *cell.dp_violation;
    }
  }
  for (SweepSummary& s : out) {
    if (s.completed == 0) continue;
    s.mean_acc /= static_cast<double>(s.completed);
    s.mean_violation /= static_cast<double>(s.completed);
  }
  for (SweepSummary& s : out) {
    if (s.completed < 2) continue;
    double va = 0.0, vv = 0.0;
    for (const SweepCell& cell : cells) {
      if (cell.strategy != s.strategy || cell.keep_fraction != s.keep_fraction ||
          !cell.test_acc.has_value()) {
        continue;
      }
      va += (*cell.test_acc - s.mean_acc) * (*cell.test_acc - s.mean_acc);
      vv += (*cell.dp_violation - s.mean_violation) * (*cell.dp_violation - s.mean_violation);
    }
    s.std_acc = std::sqrt(va / static_cast<double>(s.completed - 1));
    s.std_violation = std::sqrt(vv / static_cast<double>(s.completed - 1));
  }
  return out;
}

const SweepSummary* SweepReport::find(const std::vector<SweepSummary>& summaries,
                                      PruneStrategy strategy, double keep_fraction) const {
  for (const SweepSummary& s : summaries) {
    if (s.strategy == strategy && std::abs(s.keep_fraction - keep_fraction) < 1e-12) return &s;
  }
  return nullptr;
}

void SweepReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "strategy,keep_fraction,seed,test_acc,dp_violation\n";
  for (const SweepCell& cell : cells) {
    if (!cell.test_acc.has_value()) continue;
    out << to_string(cell.strategy) << ',' << format_double(cell.keep_fraction) << ',' << cell.seed
        << ',' << format_double(*cell.test_acc) << ',' << format_double(*cell.dp_violation) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void SweepReport::write_json(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["cells"] = nlohmann::ordered_json::array();
  for (const SweepCell& cell : cells) {
    nlohmann::ordered_json c;
    c["strategy"] = to_string(cell.strategy);
    c["keep_fraction"] = cell.keep_fraction;
    c["seed"] = cell.seed;
    if (cell.test_acc.has_value()) {
      c["test_acc"] = *cell.test_acc;
      c["dp_violation"] = *cell.dp_violation;
    } else {
      c["test_acc"] = nullptr;
      c["dp_violation"] = nullptr;
      c["error"] = cell.error;
    }
    doc["cells"].push_back(std::move(c));
  }
  doc["summary"] = nlohmann::ordered_json::array();
  for (const SweepSummary& s : summarize()) {
    nlohmann::ordered_json j;
    j["strategy"] = to_string(s.strategy);
    j["keep_fraction"] = s.keep_fraction;
    j["completed"] = s.completed;
    j["mean_acc"] = s.mean_acc;
    j["std_acc"] = s.std_acc;
    j["mean_violation"] = s.mean_violation;
    j["std_violation"] = s.std_violation;
    doc["summary"].push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fairinfl
