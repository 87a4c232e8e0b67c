#include "fairinfl/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "fairinfl/metrics.hpp"
#include "fairinfl/rng.hpp"

namespace fairinfl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 0) throw std::invalid_argument("batch_size must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(init_scale >= 0.0)) throw std::invalid_argument("init_scale must be >= 0");
}

ModelSnapshot init_model(int input_dim, int hidden_dim, const TrainConfig& cfg) {
  cfg.validate();
  if (input_dim < 1 || hidden_dim < 1) throw std::invalid_argument("model dimensions must be >= 1");
  Rng rng(cfg.seed);
  MLPParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const double s1 = cfg.init_scale / std::sqrt(static_cast<double>(input_dim));
  const double s2 = cfg.init_scale / std::sqrt(static_cast<double>(hidden_dim));
  p.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
  for (double& w : p.w1) w = rng.uniform(-s1, s1);
  p.b1.assign(hidden_dim, 0.0);
  p.w2.resize(hidden_dim);
  for (double& w : p.w2) w = rng.uniform(-s2, s2);
  p.b2 = 0.0;
  return ModelSnapshot::mlp(std::move(p), "init");
}

std::pair<ModelSnapshot, TrainLog> train(const Dataset& data, int hidden_dim,
                                         const TrainConfig& cfg,
                                         std::optional<SurrogateKind> kind, const Dataset* test,
                                         MineScore mine) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.size();
  ModelSnapshot snapshot = init_model(data.feature_dim, hidden_dim, cfg);
  std::vector<double> flat = snapshot.flat_params();
  const std::size_t p = flat.size();

  std::vector<double> m1(p, 0.0), m2(p, 0.0), grad(p), acc(p);
  long adam_t = 0;

  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = cfg.batch_size == 0 ? n : static_cast<std::size_t>(cfg.batch_size);

  TrainLog log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SurrogateSpec spec;
    if (kind.has_value()) {
      spec = resolve_direction(snapshot, data, *kind, cfg.lambda, mine);
    }
    shuffle_rng.shuffle(order);

    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(acc.begin(), acc.end(), 0.0);
      double batch_obj = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const double w = forward(snapshot, data.row(i));
        double scale = loss_score_derivative(w, data.labels[i]);
        batch_obj += logistic_loss(w, data.labels[i]);
        if (kind.has_value()) {
          scale += cfg.lambda * per_instance_coeff(spec, data.groups[i], data.labels[i], w);
          batch_obj += cfg.lambda * per_instance_value(spec, data.groups[i], data.labels[i], w);
        }
        output_gradient_into(snapshot, data.row(i), grad);
        for (std::size_t q = 0; q < p; ++q) acc[q] += scale * grad[q];
      }
      batch_obj *= inv_b;
      if (!std::isfinite(batch_obj)) {
        throw std::runtime_error("training diverged: non-finite objective at epoch " +
                                 std::to_string(epoch) + ", batch starting at " +
                                 std::to_string(start));
      }
      if (cfg.plain_sgd) {
        for (std::size_t q = 0; q < p; ++q) flat[q] -= cfg.learning_rate * inv_b * acc[q];
      } else {
        ++adam_t;
        const double corr1 = 1.0 - std::pow(cfg.adam_beta1, adam_t);
        const double corr2 = 1.0 - std::pow(cfg.adam_beta2, adam_t);
        for (std::size_t q = 0; q < p; ++q) {
          const double g = inv_b * acc[q];
          m1[q] = cfg.adam_beta1 * m1[q] + (1.0 - cfg.adam_beta1) * g;
          m2[q] = cfg.adam_beta2 * m2[q] + (1.0 - cfg.adam_beta2) * g * g;
          flat[q] -= cfg.learning_rate * (m1[q] / corr1) / (std::sqrt(m2[q] / corr2) + cfg.adam_eps);
        }
      }
      snapshot = snapshot.with_flat_params(flat, "epoch " + std::to_string(epoch));
    }

    EpochStats stats;
    stats.epoch = epoch;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss += logistic_loss(forward(snapshot, data.row(i)), data.labels[i]);
    }
    stats.loss = loss / static_cast<double>(n);
    stats.surrogate = kind.has_value() ? surrogate_value(spec, snapshot, data) : 0.0;
    if (test != nullptr) {
      stats.test_acc = accuracy(snapshot, *test);
      stats.dp_violation =
          test->group_count >= 2 ? fairness_violation(snapshot, *test) : std::nan("");
    } else {
      stats.test_acc = std::nan("");
      stats.dp_violation = std::nan("");
    }
    log.epochs.push_back(stats);
  }
  return {std::move(snapshot), std::move(log)};
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,loss,surrogate,test_acc,dp_violation\n";
  for (const EpochStats& e : epochs) {
    out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.surrogate) << ','
        << format_double(e.test_acc) << ',' << format_double(e.dp_violation) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fairinfl
