#include "fairinfl/influence.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fairinfl/rng.hpp"

namespace fairinfl {

void InfluenceConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
}

double ntk(const ModelSnapshot& snapshot, std::span<const double> x_i,
           std::span<const double> x_j) {
  return output_gradient(snapshot, x_i).dot(output_gradient(snapshot, x_j));
}

namespace {

void check_example(const Dataset& data, std::size_t i) {
  if (i >= data.size()) throw std::out_of_range("training example index out of range");
}

}  // namespace

double influence_unconstrained(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                               const Dataset& data, std::size_t i, std::span<const double> x_j) {
  cfg.validate();
  check_example(data, i);
  const double dl = loss_score_derivative(forward(snapshot, data.row(i)), data.labels[i]);
  return cfg.eta / static_cast<double>(cfg.n) * ntk(snapshot, data.row(i), x_j) * dl;
}

double fairness_score_pairwise(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                               const SurrogateSpec& spec, const Dataset& data, std::size_t i,
                               std::span<const double> x_j) {
  cfg.validate();
  check_example(data, i);
  if (!spec.resolved) throw std::logic_error("surrogate spec not resolved");
  const double w = forward(snapshot, data.row(i));
  const double c = per_instance_coeff(spec, data.groups[i], data.labels[i], w);
  return cfg.lambda * cfg.eta / static_cast<double>(cfg.n) * ntk(snapshot, data.row(i), x_j) * c;
}

double influence_constrained(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                             const SurrogateSpec& spec, const Dataset& data, std::size_t i,
                             std::span<const double> x_j) {
  return influence_unconstrained(cfg, snapshot, data, i, x_j) +
         fairness_score_pairwise(cfg, snapshot, spec, data, i, x_j);
}

double loss_influence(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                      const SurrogateSpec* spec, const Dataset& data, std::size_t i,
                      std::span<const double> x_j, int y_j) {
  cfg.validate();
  check_example(data, i);
  const double w_i = forward(snapshot, data.row(i));
  const double dl_i = loss_score_derivative(w_i, data.labels[i]);
  const double dl_j = loss_score_derivative(forward(snapshot, x_j), y_j);
  double term = dl_i;
  if (spec != nullptr) {
    if (!spec->resolved) throw std::logic_error("surrogate spec not resolved");
    term += cfg.lambda * per_instance_coeff(*spec, data.groups[i], data.labels[i], w_i);
  }
  return cfg.eta / static_cast<double>(cfg.n) * dl_j * ntk(snapshot, data.row(i), x_j) * term;
}

InfluenceTable aggregated_fairness_score(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                                         const SurrogateSpec& spec, const Dataset& data,
                                         LossAggregation loss_agg) {
  cfg.validate();
  data.validate();
  if (!spec.resolved) throw std::logic_error("surrogate spec not resolved");
  const std::size_t n = data.size();
  const std::size_t p = static_cast<std::size_t>(snapshot.param_count());

  // The double sum over targets factorizes: S(i) propto coeff_i * (g_i . v)
  // with v = sum_j coeff_j g_j, and likewise for the loss score with the loss
  // derivatives. Two streaming passes over per-example gradients, O(p) memory.
  std::vector<double> coeff(n), dloss(n);
  std::vector<double> v(p, 0.0), u(p, 0.0);
  std::vector<double> grad(p);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = forward(snapshot, data.row(j));
    coeff[j] = per_instance_coeff(spec, data.groups[j], data.labels[j], w);
    dloss[j] = loss_score_derivative(w, data.labels[j]);
    output_gradient_into(snapshot, data.row(j), grad);
    for (std::size_t q = 0; q < p; ++q) {
      v[q] += coeff[j] * grad[q];
      u[q] += dloss[j] * grad[q];
    }
  }

  const double nn = static_cast<double>(cfg.n) * static_cast<double>(n);
  InfluenceTable table;
  table.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    output_gradient_into(snapshot, data.row(i), grad);
    double dot_v = 0.0, dot_u = 0.0, dot_self = 0.0;
    for (std::size_t q = 0; q < p; ++q) {
      dot_v += grad[q] * v[q];
      dot_u += grad[q] * u[q];
      dot_self += grad[q] * grad[q];
    }
    InfluenceRecord& rec = table.records[i];
    rec.index = i;
    rec.group = data.groups[i];
    rec.label = data.labels[i];
    rec.fairness_score = cfg.lambda * cfg.eta / nn * coeff[i] * dot_v;
    if (loss_agg == LossAggregation::Aggregated) {
      rec.loss_score = cfg.eta / nn * dloss[i] * dot_u;
    } else {
      rec.loss_score = cfg.eta / static_cast<double>(cfg.n) * dloss[i] * dloss[i] * dot_self;
    }
    if (!std::isfinite(rec.fairness_score) || !std::isfinite(rec.loss_score)) {
      throw std::runtime_error("non-finite influence score at example " + std::to_string(i));
    }
  }
  return table;
}

ModelSnapshot one_counterfactual_step(const ModelSnapshot& snapshot, const SurrogateSpec* spec,
                                      const Dataset& data, std::size_t i,
                                      const InfluenceConfig& cfg) {
  cfg.validate();
  check_example(data, i);
  const double w = forward(snapshot, data.row(i));
  double scale = loss_score_derivative(w, data.labels[i]);
  if (spec != nullptr) {
    if (!spec->resolved) throw std::logic_error("surrogate spec not resolved");
    scale += cfg.lambda * per_instance_coeff(*spec, data.groups[i], data.labels[i], w);
  }
  scale *= cfg.eta / static_cast<double>(cfg.n);
  const FlatGrad grad = output_gradient(snapshot, data.row(i));
  std::vector<double> flat = snapshot.flat_params();
  for (std::size_t q = 0; q < flat.size(); ++q) flat[q] += scale * grad.values[q];
  return snapshot.with_flat_params(flat, "counterfactual");
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("pearson_correlation: need two equally sized samples");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw std::runtime_error("pearson_correlation: degenerate sample with zero variance");
  }
  return sab / std::sqrt(saa * sbb);
}

double verify_first_order(const InfluenceConfig& cfg, const ModelSnapshot& snapshot,
                          const SurrogateSpec* spec, const Dataset& data, std::size_t num_pairs,
                          std::uint64_t seed) {
  cfg.validate();
  data.validate();
  if (num_pairs < 2) throw std::invalid_argument("verify_first_order: num_pairs must be >= 2");
  Rng rng(seed);
  std::vector<double> predicted(num_pairs), actual(num_pairs);
  for (std::size_t k = 0; k < num_pairs; ++k) {
    const std::size_t i = static_cast<std::size_t>(rng.below(data.size()));
    const std::size_t j = static_cast<std::size_t>(rng.below(data.size()));
    if (spec != nullptr) {
      predicted[k] = influence_constrained(cfg, snapshot, *spec, data, i, data.row(j));
    } else {
      predicted[k] = influence_unconstrained(cfg, snapshot, data, i, data.row(j));
    }
    const ModelSnapshot stepped = one_counterfactual_step(snapshot, spec, data, i, cfg);
    actual[k] = forward(stepped, data.row(j)) - forward(snapshot, data.row(j));
  }
  try {
    return pearson_correlation(predicted, actual);
  } catch (const std::runtime_error&) {
    throw std::runtime_error(
        "verify_first_order: all sampled influences are equal; snapshot is uninformative");
  }
}

void InfluenceTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "index,z,y,fairness_score,loss_score\n";
  for (const InfluenceRecord& r : records) {
    out << r.index << ',' << r.group << ',' << r.label << ','
        << format_double(r.fairness_score) << ',' << format_double(r.loss_score) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

InfluenceTable InfluenceTable::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "index,z,y,fairness_score,loss_score") {
    throw std::runtime_error("influence csv: bad header in " + path);
  }
  InfluenceTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    InfluenceRecord r;
    char c1, c2, c3, c4;
    if (!(ss >> r.index >> c1 >> r.group >> c2 >> r.label >> c3 >> r.fairness_score >> c4 >>
          r.loss_score) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw std::runtime_error("influence csv: malformed row at line " + std::to_string(line_no));
    }
    table.records.push_back(r);
  }
  return table;
}

}  // namespace fairinfl
