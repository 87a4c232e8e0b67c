#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "fairinfl/influence.hpp"
#include "fairinfl/rng.hpp"
#include "helpers.hpp"

using namespace fairinfl;

namespace {

ModelSnapshot unit_affine(int d) {
  AffineParams p;
  p.w.assign(d, 1.0);
  p.b = 0.0;
  return ModelSnapshot::affine(p);
}

Dataset full_cells_2d() {
  return testutil::make_dataset({{-2.0, 0.1},
                                 {1.0, -0.4},
                                 {-1.0, 0.8},
                                 {2.0, 0.3},
                                 {-2.1, -0.2},
                                 {0.9, 0.6},
                                 {-0.9, -0.7},
                                 {2.1, 0.2}},
                                {-1, 1, -1, 1, -1, 1, -1, 1}, {0, 0, 1, 1, 0, 0, 1, 1});
}

}  // namespace

TEST_CASE("affine kernel has the closed form x_i . x_j + 1") {
  const ModelSnapshot net = unit_affine(2);
  const std::vector<double> xi = {1.0, 2.0};
  const std::vector<double> xj = {3.0, -1.0};
  CHECK(ntk(net, xi, xj) == 2.0);  // 1*3 + 2*(-1) + 1, exactly

  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + static_cast<int>(rng.below(6));
    std::vector<double> a(d), b(d), w(d);
    for (int q = 0; q < d; ++q) {
      a[q] = rng.uniform(-3.0, 3.0);
      b[q] = rng.uniform(-3.0, 3.0);
      w[q] = rng.uniform(-1.0, 1.0);
    }
    AffineParams p;
    p.w = w;
    p.b = rng.uniform(-1.0, 1.0);
    double dot = 1.0;
    for (int q = 0; q < d; ++q) dot += a[q] * b[q];
    CHECK(ntk(ModelSnapshot::affine(p), a, b) == doctest::Approx(dot).epsilon(1e-15));
  }
}

TEST_CASE("kernel is symmetric") {
  Rng rng(12);
  const ModelSnapshot net = testutil::random_mlp(3, 8, 4);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> a(3), b(3);
    for (int q = 0; q < 3; ++q) {
      a[q] = rng.uniform(-2.0, 2.0);
      b[q] = rng.uniform(-2.0, 2.0);
    }
    CHECK(std::abs(ntk(net, a, b) - ntk(net, b, a)) <= 1e-12);
  }
}

TEST_CASE("kernel Gram matrix is positive semidefinite") {
  // Gram of gradient vectors; check v^T K v >= 0 for random directions and
  // diagonal dominance of the quadratic form.
  Rng rng(23);
  const ModelSnapshot net = testutil::random_mlp(4, 6, 77);
  const int n = 10;
  std::vector<std::vector<double>> xs(n, std::vector<double>(4));
  for (auto& x : xs) {
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
  }
  std::vector<double> K(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) K[i * n + j] = ntk(net, xs[i], xs[j]);
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(n);
    for (double& c : v) c = rng.uniform(-1.0, 1.0);
    double q = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) q += v[i] * K[i * n + j] * v[j];
    }
    CHECK(q >= -1e-8);
  }
}

TEST_CASE("pairwise influence formulas: hand substitution") {
  // Affine model w = (1), b = 0 over 1-d inputs. At x_i = 1, y_i = +1 the loss
  // derivative is -sigmoid(-1); the kernel against x_j = 3 is 1*3 + 1 = 4.
  const ModelSnapshot net = unit_affine(1);
  const Dataset d = testutil::make_dataset({{1.0}, {-1.0}, {2.0}, {-2.0}},
                                           {1, -1, 1, -1}, {1, 1, 0, 0});
  InfluenceConfig cfg;
  cfg.eta = 1.0;
  cfg.lambda = 2.0;
  cfg.n = 100;
  const std::vector<double> xj = {3.0};
  const double dl = -1.0 / (1.0 + std::exp(1.0));
  CHECK(influence_unconstrained(cfg, net, d, 0, xj) ==
        doctest::Approx(0.01 * 4.0 * dl).epsilon(1e-14));

  SurrogateSpec spec = resolve_direction(net, d, SurrogateKind::RelaxedDp, cfg.lambda);
  REQUIRE(spec.sign_dp == 1);  // the group means tie here, so the sign defaults to +1
  CHECK(fairness_score_pairwise(cfg, net, spec, d, 0, xj) ==
        doctest::Approx(2.0 * 0.01 * 4.0 * 1.0).epsilon(1e-14));
  CHECK(influence_constrained(cfg, net, spec, d, 0, xj) ==
        doctest::Approx(0.01 * 4.0 * dl + 0.08).epsilon(1e-14));

  // Loss influence at target (x_j, +1) multiplies by the target derivative.
  const double dlj = -1.0 / (1.0 + std::exp(3.0));
  CHECK(loss_influence(cfg, net, nullptr, d, 0, xj, 1) ==
        doctest::Approx(0.01 * dlj * 4.0 * dl).epsilon(1e-14));
  CHECK(loss_influence(cfg, net, &spec, d, 0, xj, 1) ==
        doctest::Approx(0.01 * dlj * 4.0 * (dl + 2.0)).epsilon(1e-14));
}

TEST_CASE("lambda = 0 collapses the constrained score") {
  const Dataset d = full_cells_2d();
  const ModelSnapshot net = testutil::random_mlp(2, 4, 2);
  InfluenceConfig cfg;
  cfg.eta = 0.01;
  cfg.lambda = 0.0;
  cfg.n = d.size();
  const SurrogateSpec spec = resolve_direction(net, d, SurrogateKind::RelaxedDp, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(fairness_score_pairwise(cfg, net, spec, d, i, d.row(0)) == 0.0);
    CHECK(influence_constrained(cfg, net, spec, d, i, d.row(0)) ==
          influence_unconstrained(cfg, net, d, i, d.row(0)));
  }
}

TEST_CASE("aggregated scores match the brute-force double sum") {
  const Dataset d = testutil::make_dataset(
      {{0.5, -1.0}, {1.5, 0.2}, {-0.7, 0.9}, {2.0, -0.3}, {-1.2, 0.4}},
      {1, -1, 1, -1, 1}, {0, 1, 1, 0, 1});
  InfluenceConfig cfg;
  cfg.eta = 0.05;
  cfg.lambda = 1.5;
  cfg.n = 37;  // deliberately different from the target-set size

  for (SurrogateKind kind : {SurrogateKind::RelaxedDp, SurrogateKind::Covariance,
                             SurrogateKind::Mine}) {
    for (bool use_mlp : {false, true}) {
      const ModelSnapshot net =
          use_mlp ? testutil::random_mlp(2, 3, 5) : unit_affine(2);
      const SurrogateSpec spec = resolve_direction(net, d, kind, cfg.lambda);
      const InfluenceTable table = aggregated_fairness_score(cfg, net, spec, d);
      const std::size_t n = d.size();
      for (std::size_t i = 0; i < n; ++i) {
        double fair = 0.0, loss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double cj = per_instance_coeff(spec, d.groups[j], d.labels[j],
                                               forward(net, d.row(j)));
          fair += cj * fairness_score_pairwise(cfg, net, spec, d, i, d.row(j));
          loss += loss_influence(cfg, net, nullptr, d, i, d.row(j), d.labels[j]);
        }
        fair /= static_cast<double>(n);
        loss /= static_cast<double>(n);
        CHECK(std::abs(table.records[i].fairness_score - fair) < 1e-10);
        CHECK(std::abs(table.records[i].loss_score - loss) < 1e-10);
      }
    }
  }
}

TEST_CASE("self-influence loss aggregation uses the diagonal only") {
  const Dataset d = full_cells_2d();
  const ModelSnapshot net = testutil::random_mlp(2, 3, 9);
  InfluenceConfig cfg;
  cfg.eta = 0.1;
  cfg.lambda = 1.0;
  cfg.n = d.size();
  const SurrogateSpec spec = resolve_direction(net, d, SurrogateKind::RelaxedDp);
  const InfluenceTable table =
      aggregated_fairness_score(cfg, net, spec, d, LossAggregation::SelfInfluence);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dl = loss_score_derivative(forward(net, d.row(i)), d.labels[i]);
    const double expected = cfg.eta / static_cast<double>(cfg.n) * dl * dl *
                            ntk(net, d.row(i), d.row(i));
    CHECK(table.records[i].loss_score == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("first-order prediction is exact for affine models") {
  const Dataset d = full_cells_2d();
  const ModelSnapshot net = unit_affine(2);
  InfluenceConfig cfg;
  cfg.eta = 0.5;
  cfg.lambda = 1.0;
  cfg.n = d.size();
  const SurrogateSpec spec = resolve_direction(net, d, SurrogateKind::RelaxedDp);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const ModelSnapshot stepped = one_counterfactual_step(net, &spec, d, i, cfg);
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double actual = forward(stepped, d.row(j)) - forward(net, d.row(j));
      const double predicted = influence_constrained(cfg, net, spec, d, i, d.row(j));
      CHECK(std::abs(actual - predicted) < 1e-9);
    }
  }
  CHECK(verify_first_order(cfg, net, &spec, d, 64, 3) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("influence scales linearly in the step size") {
  const Dataset d = full_cells_2d();
  const ModelSnapshot net = testutil::random_mlp(2, 5, 6);
  InfluenceConfig a;
  a.eta = 0.001;
  a.lambda = 1.0;
  a.n = d.size();
  InfluenceConfig b = a;
  b.eta = 0.007;
  const SurrogateSpec spec = resolve_direction(net, d, SurrogateKind::RelaxedDp);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(influence_constrained(b, net, spec, d, i, d.row(1)) ==
          doctest::Approx(7.0 * influence_constrained(a, net, spec, d, i, d.row(1)))
              .epsilon(1e-12));
  }
}

TEST_CASE("influence table csv round trip") {
  InfluenceTable t;
  t.records.push_back({0, 1, -1, 0.125, -3.5e-7});
  t.records.push_back({1, 0, 1, -1.0 / 3.0, 0.0});
  const std::string path =
      (std::filesystem::temp_directory_path() / "fairinfl_table.csv").string();
  t.write_csv(path);
  const InfluenceTable back = InfluenceTable::read_csv(path);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].fairness_score == t.records[0].fairness_score);
  CHECK(back.records[1].fairness_score == t.records[1].fairness_score);
  CHECK(back.records[0].loss_score == t.records[0].loss_score);
  CHECK(back.records[1].group == 0);
  CHECK(back.records[0].label == -1);
  std::remove(path.c_str());
}

TEST_CASE("pearson correlation basics") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> up = {2.0, 4.0, 6.0, 8.0};
  const std::vector<double> down = {4.0, 3.0, 2.0, 1.0};
  CHECK(pearson_correlation(a, up) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_correlation(a, down) == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<double> flat = {5.0, 5.0, 5.0, 5.0};
  CHECK_THROWS_WITH_AS(pearson_correlation(a, flat), doctest::Contains("zero variance"),
                       std::runtime_error);
}

TEST_CASE("config validation") {
  InfluenceConfig cfg;
  cfg.eta = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg.eta = 0.1;
  cfg.lambda = -1.0;
  CHECK_THROWS(cfg.validate());
  cfg.lambda = 0.0;
  cfg.n = 0;
  CHECK_THROWS(cfg.validate());
}
