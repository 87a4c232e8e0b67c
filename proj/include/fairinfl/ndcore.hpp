#pragma once

#include <span>
#include <string>
#include <vector>

namespace fairinfl {

// Parameters of a two-layer ReLU MLP, f(x) = w2 . relu(W1 x + b1) + b2.
// Flattening order: W1 row-major, then b1, then w2, then b2.
struct MLPParams {
  int input_dim = 0;
  int hidden_dim = 0;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // hidden_dim
  double b2 = 0.0;

  int param_count() const { return hidden_dim * input_dim + 2 * hidden_dim + 1; }
  void validate() const;  // dimensions consistent, all entries finite
};

// Affine model f(x) = w . x + b with parameters flattened as (w, b).
struct AffineParams {
  std::vector<double> w;
  double b = 0.0;

  int input_dim() const { return static_cast<int>(w.size()); }
  int param_count() const { return static_cast<int>(w.size()) + 1; }
  void validate() const;
};

// Frozen parameter vector; the reference point of all influence computations.
class ModelSnapshot {
 public:
  static ModelSnapshot mlp(MLPParams params, std::string tag = "");
  static ModelSnapshot affine(AffineParams params, std::string tag = "");

  bool is_affine() const { return affine_; }
  int input_dim() const;
  int hidden_dim() const;  // 0 for affine models
  int param_count() const;
  const std::string& tag() const { return tag_; }

  const MLPParams& mlp_params() const;
  const AffineParams& affine_params() const;

  std::vector<double> flat_params() const;
  // Same architecture with a new parameter vector.
  ModelSnapshot with_flat_params(std::span<const double> flat, std::string tag = "") const;

 private:
  ModelSnapshot() = default;
  bool affine_ = false;
  MLPParams mlp_;
  AffineParams aff_;
  std::string tag_;
};

// Per-example gradient of the scalar model output, aligned with the
// flattening order of the snapshot it came from.
struct FlatGrad {
  std::vector<double> values;

  double dot(const FlatGrad& other) const;
};

double forward(const ModelSnapshot& snapshot, std::span<const double> x);

FlatGrad output_gradient(const ModelSnapshot& snapshot, std::span<const double> x);
// Writes the gradient into a caller-provided buffer of length param_count().
void output_gradient_into(const ModelSnapshot& snapshot, std::span<const double> x,
                          std::span<double> out);

// Logistic loss log(1 + exp(-y w)) on labels in {-1, +1}, overflow-safe.
double logistic_loss(double score, int label);

// d loss / d score = -y * sigmoid(-y w).
double loss_score_derivative(double score, int label);

}  // namespace fairinfl
