#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fairinfl {

// Tabular dataset: features [n x d] row-major, labels in {-1, +1},
// group memberships in {0 .. group_count-1}.
struct Dataset {
  int feature_dim = 0;
  int group_count = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<int> groups;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * feature_dim, static_cast<std::size_t>(feature_dim)};
  }
  void validate() const;
};

// One-dimensional Gaussian mixture with one mean per (z, y) cell,
// constrained to mu[0][-1] < mu[1][-1] < 0 < mu[0][+1] < mu[1][+1].
struct SyntheticParams {
  double mu_z0_neg = -2.0;
  double mu_z1_neg = -0.5;
  double mu_z0_pos = 0.5;
  double mu_z1_pos = 2.0;
  double sigma = 0.7;
  int n_per_cell = 1000;

  void validate() const;
};

// Higher-dimensional synthetic benchmark used as a stand-in for real tabular
// data: the (z, y) cell means shift a fixed signal direction inside a noisy
// d-dimensional space, and a fraction of labels is flipped.
struct BenchmarkParams {
  int n = 4000;
  int feature_dim = 10;
  double mu_z0_neg = -2.0;
  double mu_z1_neg = -0.5;
  double mu_z0_pos = 0.5;
  double mu_z1_pos = 2.0;
  double sigma = 0.7;
  double noise_sigma = 1.0;   // isotropic noise on the non-signal coordinates
  double label_noise = 0.15;  // fraction of labels flipped after generation
  int clusters = 8;           // Gaussian mixture components shared by all cells
  double spread = 1.5;        // standard deviation of the cluster centers

  void validate() const;
};

Dataset generate_synthetic(const SyntheticParams& params, std::uint64_t seed);
Dataset generate_benchmark(const BenchmarkParams& params, std::uint64_t seed);

// CSV schema: header feature_0,...,feature_{d-1},label,group.
// With coerce_labels, labels given as {0,1} are mapped to {-1,+1}.
Dataset load_csv(const std::string& path, bool coerce_labels = false);
void save_csv(const Dataset& data, const std::string& path);

// Samples with replacement so every (y, z) cell reaches the max cell count.
Dataset balance_resample(const Dataset& data, std::uint64_t seed);

// Random permutation; first floor(n * train_fraction) rows become the train part.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices);

// Decimal formatting used by every CSV writer: shortest 17-significant-digit
// representation that round-trips a double.
std::string format_double(double value);

}  // namespace fairinfl
