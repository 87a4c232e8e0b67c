#include "fairinfl/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fairinfl/rng.hpp"

namespace fairinfl {

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("Dataset: empty");
  if (feature_dim < 1) throw std::invalid_argument("Dataset: feature_dim must be >= 1");
  if (groups.size() != n || features.size() != n * static_cast<std::size_t>(feature_dim)) {
    throw std::invalid_argument("Dataset: misaligned rows");
  }
  if (group_count < 1) throw std::invalid_argument("Dataset: group_count must be >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != -1 && labels[i] != 1) {
      throw std::invalid_argument("Dataset: label at row " + std::to_string(i) + " not in {-1,+1}");
    }
    if (groups[i] < 0 || groups[i] >= group_count) {
      throw std::invalid_argument("Dataset: group at row " + std::to_string(i) + " out of range");
    }
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature");
  }
}

void SyntheticParams::validate() const {
  if (!(mu_z0_neg < mu_z1_neg && mu_z1_neg < 0.0 && 0.0 < mu_z0_pos && mu_z0_pos < mu_z1_pos)) {
    throw std::invalid_argument("SyntheticParams: means must satisfy mu(0,-1) < mu(1,-1) < 0 < mu(0,+1) < mu(1,+1)");
  }
  if (sigma <= 0.0) throw std::invalid_argument("SyntheticParams: sigma must be positive");
  if (n_per_cell < 1) throw std::invalid_argument("SyntheticParams: n_per_cell must be >= 1");
}

void BenchmarkParams::validate() const {
  if (n < 4) throw std::invalid_argument("BenchmarkParams: n must be >= 4");
  if (feature_dim < 1) throw std::invalid_argument("BenchmarkParams: feature_dim must be >= 1");
  if (!(mu_z0_neg < mu_z1_neg && mu_z1_neg < 0.0 && 0.0 < mu_z0_pos && mu_z0_pos < mu_z1_pos)) {
    throw std::invalid_argument("BenchmarkParams: means must satisfy mu(0,-1) < mu(1,-1) < 0 < mu(0,+1) < mu(1,+1)");
  }
  if (sigma <= 0.0 || noise_sigma < 0.0) throw std::invalid_argument("BenchmarkParams: bad sigma");
  if (label_noise < 0.0 || label_noise >= 0.5) {
    throw std::invalid_argument("BenchmarkParams: label_noise must be in [0, 0.5)");
  }
  if (clusters < 1) throw std::invalid_argument("BenchmarkParams: clusters must be >= 1");
  if (spread < 0.0) throw std::invalid_argument("BenchmarkParams: spread must be >= 0");
}

namespace {

double cell_mean(double z0n, double z1n, double z0p, double z1p, int z, int y) {
  if (y == -1) return z == 0 ? z0n : z1n;
  return z == 0 ? z0p : z1p;
}

}  // namespace

Dataset generate_synthetic(const SyntheticParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  Dataset data;
  data.feature_dim = 1;
  data.group_count = 2;
  const std::array<int, 2> ys = {-1, 1};
  for (int z = 0; z < 2; ++z) {
    for (int y : ys) {
      const double mu = cell_mean(params.mu_z0_neg, params.mu_z1_neg, params.mu_z0_pos,
                                  params.mu_z1_pos, z, y);
      for (int k = 0; k < params.n_per_cell; ++k) {
        data.features.push_back(mu + params.sigma * rng.normal());
        data.labels.push_back(y);
        data.groups.push_back(z);
      }
    }
  }
  data.validate();
  return data;
}

Dataset generate_benchmark(const BenchmarkParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  Dataset data;
  data.feature_dim = params.feature_dim;
  data.group_count = 2;
  const int d = params.feature_dim;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  // A mixture of Gaussian clusters whose offsets are shared by all four
  // (z, y) cells; only the cell's shift along the all-ones direction differs.
  // Locally every cluster repeats the one-directional group/label geometry,
  // so the fairness-accuracy tension survives, while the multimodal layout
  // keeps the class boundary from being a single hyperplane.
  std::vector<double> offsets(static_cast<std::size_t>(params.clusters) * d);
  for (double& v : offsets) v = params.spread * rng.normal();

  const std::array<int, 2> ys = {-1, 1};
  for (int i = 0; i < params.n; ++i) {
    const int z = static_cast<int>(i % 4) / 2;
    const int y = ys[i % 2];
    const double mu = cell_mean(params.mu_z0_neg, params.mu_z1_neg, params.mu_z0_pos,
                                params.mu_z1_pos, z, y);
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.clusters)));
    const double* offset = offsets.data() + static_cast<std::size_t>(c) * d;
    const double signal = (mu + params.sigma * rng.normal()) * inv_sqrt_d;
    for (int j = 0; j < d; ++j) {
      data.features.push_back(offset[j] + signal + params.noise_sigma * rng.normal());
    }
    const bool flip = rng.uniform() < params.label_noise;
    data.labels.push_back(flip ? -y : y);
    data.groups.push_back(z);
  }
  data.validate();
  return data;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double_field(const std::string& s, std::size_t line_no) {
  if (s.empty()) throw std::runtime_error("csv: missing value at line " + std::to_string(line_no));
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("csv: malformed number '" + s + "' at line " + std::to_string(line_no));
  }
  if (pos != s.size()) {
    throw std::runtime_error("csv: malformed number '" + s + "' at line " + std::to_string(line_no));
  }
  return v;
}

long parse_int_field(const std::string& s, std::size_t line_no) {
  if (s.empty()) throw std::runtime_error("csv: missing value at line " + std::to_string(line_no));
  std::size_t pos = 0;
  long v;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("csv: malformed integer '" + s + "' at line " + std::to_string(line_no));
  }
  if (pos != s.size()) {
    throw std::runtime_error("csv: malformed integer '" + s + "' at line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, bool coerce_labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  const std::vector<std::string> header = split_line(line);
  if (header.size() < 3) throw std::runtime_error("csv: header needs at least one feature, label, group");
  const int d = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < d; ++j) {
    const std::string expected = "feature_" + std::to_string(j);
    if (header[j] != expected) {
      throw std::runtime_error("csv: unknown column '" + header[j] + "', expected '" + expected + "'");
    }
  }
  if (header[d] != "label" || header[d + 1] != "group") {
    throw std::runtime_error("csv: trailing columns must be 'label,group'");
  }

  Dataset data;
  data.feature_dim = d;
  std::size_t line_no = 1;
  int max_group = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("csv: row with " + std::to_string(fields.size()) + " fields at line " +
                               std::to_string(line_no) + ", expected " + std::to_string(header.size()));
    }
    for (int j = 0; j < d; ++j) data.features.push_back(parse_double_field(fields[j], line_no));
    long y = parse_int_field(fields[d], line_no);
    if (coerce_labels && (y == 0 || y == 1)) y = 2 * y - 1;
    if (y != -1 && y != 1) {
      throw std::runtime_error("csv: label " + std::to_string(y) + " at line " + std::to_string(line_no) +
                               " not in {-1,+1}");
    }
    const long g = parse_int_field(fields[d + 1], line_no);
    if (g < 0) throw std::runtime_error("csv: negative group at line " + std::to_string(line_no));
    data.labels.push_back(static_cast<int>(y));
    data.groups.push_back(static_cast<int>(g));
    max_group = std::max(max_group, static_cast<int>(g));
  }
  data.group_count = max_group + 1;
  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int j = 0; j < data.feature_dim; ++j) out << "feature_" << j << ',';
  out << "label,group\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.feature_dim; ++j) {
      out << format_double(data.features[i * data.feature_dim + j]) << ',';
    }
    out << data.labels[i] << ',' << data.groups[i] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("subset: empty index set");
  Dataset out;
  out.feature_dim = data.feature_dim;
  out.group_count = data.group_count;
  for (std::size_t i : indices) {
    if (i >= data.size()) throw std::out_of_range("subset: index out of range");
    const auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(data.labels[i]);
    out.groups.push_back(data.groups[i]);
  }
  return out;
}

Dataset balance_resample(const Dataset& data, std::uint64_t seed) {
  data.validate();
  // Cells keyed by (y, z) in fixed order: y in {-1,+1} outer, z ascending inner.
  std::vector<std::vector<std::size_t>> cells(2 * static_cast<std::size_t>(data.group_count));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t yi = data.labels[i] == -1 ? 0 : 1;
    cells[yi * data.group_count + data.groups[i]].push_back(i);
  }
  std::size_t max_count = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].empty()) {
      const int y = c < static_cast<std::size_t>(data.group_count) ? -1 : 1;
      const int z = static_cast<int>(c % data.group_count);
      throw std::runtime_error("balance_resample: empty cell (y=" + std::to_string(y) +
                               ", z=" + std::to_string(z) + ")");
    }
    max_count = std::max(max_count, cells[c].size());
  }
  Rng rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(cells.size() * max_count);
  for (const auto& cell : cells) {
    for (std::size_t k = 0; k < max_count; ++k) {
      picked.push_back(cell[rng.below(cell.size())]);
    }
  }
  return subset(data, picked);
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  data.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(perm);
  const std::size_t n_train = static_cast<std::size_t>(std::floor(data.size() * train_fraction));
  if (n_train == 0 || n_train == data.size()) {
    throw std::invalid_argument("split: a part would be empty");
  }
  const std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + n_train);
  const std::vector<std::size_t> test_idx(perm.begin() + n_train, perm.end());
  return {subset(data, train_idx), subset(data, test_idx)};
}

}  // namespace fairinfl
