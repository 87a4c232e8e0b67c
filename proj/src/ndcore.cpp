#include "fairinfl/ndcore.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace fairinfl {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite entry in ") + what);
  }
}

void check_input_dim(const ModelSnapshot& snapshot, std::span<const double> x) {
  if (static_cast<int>(x.size()) != snapshot.input_dim()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(snapshot.input_dim()));
  }
}

}  // namespace

void MLPParams::validate() const {
  if (input_dim < 1 || hidden_dim < 1) throw std::invalid_argument("MLPParams: dimensions must be >= 1");
  if (w1.size() != static_cast<std::size_t>(hidden_dim) * input_dim ||
      b1.size() != static_cast<std::size_t>(hidden_dim) ||
      w2.size() != static_cast<std::size_t>(hidden_dim)) {
    throw std::invalid_argument("MLPParams: layer shapes inconsistent with (d, h)");
  }
  require_finite(w1, "w1");
  require_finite(b1, "b1");
  require_finite(w2, "w2");
  if (!std::isfinite(b2)) throw std::invalid_argument("non-finite entry in b2");
}

void AffineParams::validate() const {
  if (w.empty()) throw std::invalid_argument("AffineParams: weight vector is empty");
  require_finite(w, "w");
  if (!std::isfinite(b)) throw std::invalid_argument("non-finite entry in b");
}

ModelSnapshot ModelSnapshot::mlp(MLPParams params, std::string tag) {
  params.validate();
  ModelSnapshot s;
  s.affine_ = false;
  s.mlp_ = std::move(params);
  s.tag_ = std::move(tag);
  return s;
}

ModelSnapshot ModelSnapshot::affine(AffineParams params, std::string tag) {
  params.validate();
  ModelSnapshot s;
  s.affine_ = true;
  s.aff_ = std::move(params);
  s.tag_ = std::move(tag);
  return s;
}

int ModelSnapshot::input_dim() const { return affine_ ? aff_.input_dim() : mlp_.input_dim; }
int ModelSnapshot::hidden_dim() const { return affine_ ? 0 : mlp_.hidden_dim; }
int ModelSnapshot::param_count() const { return affine_ ? aff_.param_count() : mlp_.param_count(); }

const MLPParams& ModelSnapshot::mlp_params() const {
  if (affine_) throw std::logic_error("snapshot holds an affine model");
  return mlp_;
}

const AffineParams& ModelSnapshot::affine_params() const {
  if (!affine_) throw std::logic_error("snapshot holds an MLP model");
  return aff_;
}

std::vector<double> ModelSnapshot::flat_params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  if (affine_) {
    flat.insert(flat.end(), aff_.w.begin(), aff_.w.end());
    flat.push_back(aff_.b);
  } else {
    flat.insert(flat.end(), mlp_.w1.begin(), mlp_.w1.end());
    flat.insert(flat.end(), mlp_.b1.begin(), mlp_.b1.end());
    flat.insert(flat.end(), mlp_.w2.begin(), mlp_.w2.end());
    flat.push_back(mlp_.b2);
  }
  return flat;
}

ModelSnapshot ModelSnapshot::with_flat_params(std::span<const double> flat, std::string tag) const {
  if (static_cast<int>(flat.size()) != param_count()) {
    throw std::invalid_argument("flat parameter vector has wrong length");
  }
  if (affine_) {
    AffineParams p;
    p.w.assign(flat.begin(), flat.end() - 1);
    p.b = flat.back();
    return affine(std::move(p), std::move(tag));
  }
  MLPParams p;
  p.input_dim = mlp_.input_dim;
  p.hidden_dim = mlp_.hidden_dim;
  const std::size_t hd = static_cast<std::size_t>(mlp_.hidden_dim) * mlp_.input_dim;
  const std::size_t h = static_cast<std::size_t>(mlp_.hidden_dim);
  p.w1.assign(flat.begin(), flat.begin() + hd);
  p.b1.assign(flat.begin() + hd, flat.begin() + hd + h);
  p.w2.assign(flat.begin() + hd + h, flat.begin() + hd + 2 * h);
  p.b2 = flat.back();
  return mlp(std::move(p), std::move(tag));
}

double FlatGrad::dot(const FlatGrad& other) const {
  if (values.size() != other.values.size()) {
    throw std::invalid_argument("FlatGrad::dot: length mismatch");
  }
  double s = 0.0;
  for (std::size_t p = 0; p < values.size(); ++p) s += values[p] * other.values[p];
  return s;
}

double forward(const ModelSnapshot& snapshot, std::span<const double> x) {
  check_input_dim(snapshot, x);
  if (snapshot.is_affine()) {
    const AffineParams& p = snapshot.affine_params();
    double s = p.b;
    for (std::size_t j = 0; j < p.w.size(); ++j) s += p.w[j] * x[j];
    return s;
  }
  const MLPParams& p = snapshot.mlp_params();
  double out = p.b2;
  for (int k = 0; k < p.hidden_dim; ++k) {
    double a = p.b1[k];
    const double* row = p.w1.data() + static_cast<std::size_t>(k) * p.input_dim;
    for (int j = 0; j < p.input_dim; ++j) a += row[j] * x[j];
    if (a > 0.0) out += p.w2[k] * a;
  }
  return out;
}

void output_gradient_into(const ModelSnapshot& snapshot, std::span<const double> x,
                          std::span<double> out) {
  check_input_dim(snapshot, x);
  if (out.size() != static_cast<std::size_t>(snapshot.param_count())) {
    throw std::invalid_argument("gradient buffer has wrong length");
  }
  if (snapshot.is_affine()) {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j];
    out[x.size()] = 1.0;
    return;
  }
  const MLPParams& p = snapshot.mlp_params();
  const std::size_t hd = static_cast<std::size_t>(p.hidden_dim) * p.input_dim;
  const std::size_t h = static_cast<std::size_t>(p.hidden_dim);
  for (int k = 0; k < p.hidden_dim; ++k) {
    double a = p.b1[k];
    const double* row = p.w1.data() + static_cast<std::size_t>(k) * p.input_dim;
    for (int j = 0; j < p.input_dim; ++j) a += row[j] * x[j];
    // Subgradient at the ReLU kink: pre-activation exactly 0 gates to 0.
    const bool active = a > 0.0;
    double* gw1 = out.data() + static_cast<std::size_t>(k) * p.input_dim;
    if (active) {
      for (int j = 0; j < p.input_dim; ++j) gw1[j] = p.w2[k] * x[j];
      out[hd + k] = p.w2[k];
      out[hd + h + k] = a;
    } else {
      for (int j = 0; j < p.input_dim; ++j) gw1[j] = 0.0;
      out[hd + k] = 0.0;
      out[hd + h + k] = 0.0;
    }
  }
  out[hd + 2 * h] = 1.0;
}

FlatGrad output_gradient(const ModelSnapshot& snapshot, std::span<const double> x) {
  FlatGrad g;
  g.values.resize(snapshot.param_count());
  output_gradient_into(snapshot, x, g.values);
  return g;
}

namespace {

void check_label(int label) {
  if (label != -1 && label != 1) {
    throw std::invalid_argument("label must be -1 or +1, got " + std::to_string(label));
  }
}

}  // namespace

double logistic_loss(double score, int label) {
  check_label(label);
  const double m = -static_cast<double>(label) * score;
  // log(1 + exp(m)) = max(m, 0) + log1p(exp(-|m|))
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

double loss_score_derivative(double score, int label) {
  check_label(label);
  const double m = -static_cast<double>(label) * score;
  // -y * sigmoid(m), evaluated stably for large |m|.
  const double sig = m >= 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
  return -static_cast<double>(label) * sig;
}

}  // namespace fairinfl
