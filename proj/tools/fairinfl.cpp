// Command-line surface: synth, train, score, verify, sweep.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairinfl/data.hpp"
#include "fairinfl/influence.hpp"
#include "fairinfl/metrics.hpp"
#include "fairinfl/ndcore.hpp"
#include "fairinfl/pipeline.hpp"
#include "fairinfl/surrogates.hpp"
#include "fairinfl/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string data;
  std::string snapshot;
  std::string surrogate = "dp";
  double lambda = 1.0;
  double lr = 0.001;
  int epochs = 50;
  int batch = 256;
  int hidden = 64;
  double init_scale = 1.0;
  double split = 0.8;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<double> fractions = {0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::string> strategies = {"random", "fairness", "accuracy"};
  std::string out = ".";
  bool coerce_labels = false;
  bool order_flip = false;
  bool pretrain_erm = false;
  std::string loss_agg = "aggregated";
  // synth
  int n_per_cell = 1000;
  std::vector<double> mu = {-2.0, -0.5, 0.5, 2.0};
  double sigma = 0.7;
  bool benchmark = false;
  int n = 4000;
  int dim = 10;
  double noise_sigma = 1.0;
  double label_noise = 0.15;
  int clusters = 8;
  double spread = 1.5;
  // verify
  std::size_t pairs = 1000;
  double threshold = 0.95;
};

// Applies a flat JSON config document. Every key mirrors a flag name; unknown
// keys are rejected. Values already set on the command line win.
void apply_config_file(const std::string& path, RunConfig& cfg, CLI::App* cmd) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw CLI::ValidationError("--config", "expected a flat JSON object");

  auto flag_given = [&](const std::string& flag) {
    const CLI::Option* opt = cmd->get_option_no_throw("--" + flag);
    return opt != nullptr && opt->count() > 0;
  };

  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "data") { if (!flag_given(key)) cfg.data = value.get<std::string>(); }
      else if (key == "snapshot") { if (!flag_given(key)) cfg.snapshot = value.get<std::string>(); }
      else if (key == "surrogate") { if (!flag_given(key)) cfg.surrogate = value.get<std::string>(); }
      else if (key == "lambda") { if (!flag_given(key)) cfg.lambda = value.get<double>(); }
      else if (key == "lr") { if (!flag_given(key)) cfg.lr = value.get<double>(); }
      else if (key == "epochs") { if (!flag_given(key)) cfg.epochs = value.get<int>(); }
      else if (key == "batch") { if (!flag_given(key)) cfg.batch = value.get<int>(); }
      else if (key == "hidden") { if (!flag_given(key)) cfg.hidden = value.get<int>(); }
      else if (key == "init-scale") { if (!flag_given(key)) cfg.init_scale = value.get<double>(); }
      else if (key == "split") { if (!flag_given(key)) cfg.split = value.get<double>(); }
      else if (key == "seed") { if (!flag_given(key)) cfg.seeds = value.get<std::vector<std::uint64_t>>(); }
      else if (key == "fractions") { if (!flag_given(key)) cfg.fractions = value.get<std::vector<double>>(); }
      else if (key == "strategies") { if (!flag_given(key)) cfg.strategies = value.get<std::vector<std::string>>(); }
      else if (key == "out") { if (!flag_given(key)) cfg.out = value.get<std::string>(); }
      else if (key == "coerce-labels") { if (!flag_given(key)) cfg.coerce_labels = value.get<bool>(); }
      else if (key == "order-flip") { if (!flag_given(key)) cfg.order_flip = value.get<bool>(); }
      else if (key == "pretrain-erm") { if (!flag_given(key)) cfg.pretrain_erm = value.get<bool>(); }
      else if (key == "loss-agg") { if (!flag_given(key)) cfg.loss_agg = value.get<std::string>(); }
      else if (key == "n-per-cell") { if (!flag_given(key)) cfg.n_per_cell = value.get<int>(); }
      else if (key == "mu") { if (!flag_given(key)) cfg.mu = value.get<std::vector<double>>(); }
      else if (key == "sigma") { if (!flag_given(key)) cfg.sigma = value.get<double>(); }
      else if (key == "benchmark") { if (!flag_given(key)) cfg.benchmark = value.get<bool>(); }
      else if (key == "n") { if (!flag_given(key)) cfg.n = value.get<int>(); }
      else if (key == "d") { if (!flag_given(key)) cfg.dim = value.get<int>(); }
      else if (key == "noise-sigma") { if (!flag_given(key)) cfg.noise_sigma = value.get<double>(); }
      else if (key == "label-noise") { if (!flag_given(key)) cfg.label_noise = value.get<double>(); }
      else if (key == "clusters") { if (!flag_given(key)) cfg.clusters = value.get<int>(); }
      else if (key == "spread") { if (!flag_given(key)) cfg.spread = value.get<double>(); }
      else if (key == "pairs") { if (!flag_given(key)) cfg.pairs = value.get<std::size_t>(); }
      else if (key == "threshold") { if (!flag_given(key)) cfg.threshold = value.get<double>(); }
      else throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ValidationError("--config", "key '" + key + "': " + e.what());
    }
  }
}

void validate_config(const RunConfig& cfg) {
  fairinfl::parse_surrogate_kind(cfg.surrogate);
  for (const std::string& s : cfg.strategies) fairinfl::parse_prune_strategy(s);
  if (cfg.loss_agg != "aggregated" && cfg.loss_agg != "self") {
    throw CLI::ValidationError("--loss-agg", "expected 'aggregated' or 'self'");
  }
  if (cfg.seeds.empty()) throw CLI::ValidationError("--seed", "at least one seed required");
  if (cfg.mu.size() != 4) throw CLI::ValidationError("--mu", "expected 4 comma-separated means");
  if (!(cfg.lambda >= 0.0)) throw CLI::ValidationError("--lambda", "must be >= 0");
  if (!(cfg.lr > 0.0)) throw CLI::ValidationError("--lr", "must be positive");
  if (cfg.epochs < 1) throw CLI::ValidationError("--epochs", "must be >= 1");
  if (cfg.batch < 0) throw CLI::ValidationError("--batch", "must be >= 0");
  if (cfg.hidden < 1) throw CLI::ValidationError("--hidden", "must be >= 1");
  if (!(cfg.split >= 0.0 && cfg.split < 1.0)) throw CLI::ValidationError("--split", "must be in [0, 1)");
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw CLI::ValidationError("--threshold", "must be in (0, 1]");
}

ordered_json config_to_json(const std::string& command, const RunConfig& cfg) {
  ordered_json j;
  j["command"] = command;
  j["data"] = cfg.data;
  j["snapshot"] = cfg.snapshot;
  j["surrogate"] = cfg.surrogate;
  j["lambda"] = cfg.lambda;
  j["lr"] = cfg.lr;
  j["epochs"] = cfg.epochs;
  j["batch"] = cfg.batch;
  j["hidden"] = cfg.hidden;
  j["init-scale"] = cfg.init_scale;
  j["split"] = cfg.split;
  j["seed"] = cfg.seeds;
  j["fractions"] = cfg.fractions;
  j["strategies"] = cfg.strategies;
  j["coerce-labels"] = cfg.coerce_labels;
  j["order-flip"] = cfg.order_flip;
  j["pretrain-erm"] = cfg.pretrain_erm;
  j["loss-agg"] = cfg.loss_agg;
  j["n-per-cell"] = cfg.n_per_cell;
  j["mu"] = cfg.mu;
  j["sigma"] = cfg.sigma;
  j["benchmark"] = cfg.benchmark;
  j["n"] = cfg.n;
  j["d"] = cfg.dim;
  j["noise-sigma"] = cfg.noise_sigma;
  j["label-noise"] = cfg.label_noise;
  j["clusters"] = cfg.clusters;
  j["spread"] = cfg.spread;
  j["pairs"] = cfg.pairs;
  j["threshold"] = cfg.threshold;
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Tracks artifacts so that a failing command leaves no partial outputs behind.
class ArtifactSet {
 public:
  explicit ArtifactSet(const std::string& out_dir) : dir_(out_dir) {
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) {
    const std::string p = (dir_ / name).string();
    written_.push_back(p);
    return p;
  }
  void write_manifest(const std::string& command, const RunConfig& cfg) {
    const ordered_json config = config_to_json(command, cfg);
    ordered_json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["config_hash"] = fnv1a_hex(config.dump());
    manifest["seeds"] = cfg.seeds;
    std::ofstream out(path("manifest.json"));
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest");
  }
  void rollback() {
    for (const std::string& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

void write_snapshot_json(const fairinfl::ModelSnapshot& snapshot, const std::string& path) {
  ordered_json j;
  if (snapshot.is_affine()) {
    const auto& p = snapshot.affine_params();
    j["arch"] = "affine";
    j["w"] = p.w;
    j["b"] = p.b;
  } else {
    const auto& p = snapshot.mlp_params();
    j["arch"] = "mlp";
    j["d"] = p.input_dim;
    j["h"] = p.hidden_dim;
    j["w1"] = p.w1;
    j["b1"] = p.b1;
    j["w2"] = p.w2;
    j["b2"] = p.b2;
  }
  j["tag"] = snapshot.tag();
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path);
}

fairinfl::ModelSnapshot read_snapshot_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const ordered_json j = ordered_json::parse(in);
  const std::string tag = j.value("tag", "");
  if (j.at("arch") == "affine") {
    fairinfl::AffineParams p;
    p.w = j.at("w").get<std::vector<double>>();
    p.b = j.at("b").get<double>();
    return fairinfl::ModelSnapshot::affine(std::move(p), tag);
  }
  fairinfl::MLPParams p;
  p.input_dim = j.at("d").get<int>();
  p.hidden_dim = j.at("h").get<int>();
  p.w1 = j.at("w1").get<std::vector<double>>();
  p.b1 = j.at("b1").get<std::vector<double>>();
  p.w2 = j.at("w2").get<std::vector<double>>();
  p.b2 = j.at("b2").get<double>();
  return fairinfl::ModelSnapshot::mlp(std::move(p), tag);
}

fairinfl::Dataset load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw std::runtime_error("--data is required for this command");
  return fairinfl::load_csv(cfg.data, cfg.coerce_labels);
}

fairinfl::TrainConfig make_train_config(const RunConfig& cfg) {
  fairinfl::TrainConfig tc;
  tc.learning_rate = cfg.lr;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch;
  tc.lambda = cfg.lambda;
  tc.seed = cfg.seeds.front();
  tc.init_scale = cfg.init_scale;
  return tc;
}

int cmd_synth(const RunConfig& cfg, ArtifactSet& artifacts) {
  fairinfl::Dataset data;
  if (cfg.benchmark) {
    fairinfl::BenchmarkParams p;
    p.n = cfg.n;
    p.feature_dim = cfg.dim;
    p.mu_z0_neg = cfg.mu[0];
    p.mu_z1_neg = cfg.mu[1];
    p.mu_z0_pos = cfg.mu[2];
    p.mu_z1_pos = cfg.mu[3];
    p.sigma = cfg.sigma;
    p.noise_sigma = cfg.noise_sigma;
    p.label_noise = cfg.label_noise;
    p.clusters = cfg.clusters;
    p.spread = cfg.spread;
    data = fairinfl::generate_benchmark(p, cfg.seeds.front());
  } else {
    fairinfl::SyntheticParams p;
    p.mu_z0_neg = cfg.mu[0];
    p.mu_z1_neg = cfg.mu[1];
    p.mu_z0_pos = cfg.mu[2];
    p.mu_z1_pos = cfg.mu[3];
    p.sigma = cfg.sigma;
    p.n_per_cell = cfg.n_per_cell;
    data = fairinfl::generate_synthetic(p, cfg.seeds.front());
  }
  fairinfl::save_csv(data, artifacts.path("dataset.csv"));
  artifacts.write_manifest("synth", cfg);
  std::cout << "wrote dataset with " << data.size() << " rows\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, ArtifactSet& artifacts) {
  const fairinfl::Dataset data = load_data(cfg);
  const fairinfl::TrainConfig tc = make_train_config(cfg);
  std::optional<fairinfl::SurrogateKind> kind;
  if (cfg.lambda > 0.0) kind = fairinfl::parse_surrogate_kind(cfg.surrogate);

  fairinfl::Dataset train_set = data;
  std::optional<fairinfl::Dataset> test_set;
  if (cfg.split > 0.0) {
    auto parts = fairinfl::split(data, cfg.split, cfg.seeds.front());
    train_set = std::move(parts.first);
    test_set = std::move(parts.second);
  }
  const auto [snapshot, log] = fairinfl::train(train_set, cfg.hidden, tc, kind,
                                               test_set ? &*test_set : nullptr);
  write_snapshot_json(snapshot, artifacts.path("snapshot.json"));
  log.write_csv(artifacts.path("trainlog.csv"));
  artifacts.write_manifest("train", cfg);
  std::cout << "final loss " << fairinfl::format_double(log.epochs.back().loss) << '\n';
  return 0;
}

int cmd_score(const RunConfig& cfg, ArtifactSet& artifacts) {
  const fairinfl::Dataset data = load_data(cfg);
  if (cfg.snapshot.empty()) throw std::runtime_error("--snapshot is required for score");
  const fairinfl::ModelSnapshot snapshot = read_snapshot_json(cfg.snapshot);
  const fairinfl::SurrogateKind kind = fairinfl::parse_surrogate_kind(cfg.surrogate);
  const fairinfl::SurrogateSpec spec =
      fairinfl::resolve_direction(snapshot, data, kind, cfg.lambda);
  fairinfl::InfluenceConfig icfg;
  icfg.eta = cfg.lr;
  icfg.lambda = cfg.lambda;
  icfg.n = data.size();
  const auto agg = cfg.loss_agg == "self" ? fairinfl::LossAggregation::SelfInfluence
                                          : fairinfl::LossAggregation::Aggregated;
  const fairinfl::InfluenceTable table =
      fairinfl::aggregated_fairness_score(icfg, snapshot, spec, data, agg);
  table.write_csv(artifacts.path("influence.csv"));
  artifacts.write_manifest("score", cfg);
  std::cout << "scored " << table.records.size() << " examples\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg, ArtifactSet& artifacts) {
  const fairinfl::Dataset data = load_data(cfg);
  fairinfl::ModelSnapshot snapshot = [&] {
    if (!cfg.snapshot.empty()) return read_snapshot_json(cfg.snapshot);
    const fairinfl::TrainConfig tc = make_train_config(cfg);
    return fairinfl::train(data, cfg.hidden, tc, fairinfl::parse_surrogate_kind(cfg.surrogate))
        .first;
  }();
  const fairinfl::SurrogateKind kind = fairinfl::parse_surrogate_kind(cfg.surrogate);
  const fairinfl::SurrogateSpec spec =
      fairinfl::resolve_direction(snapshot, data, kind, cfg.lambda);
  fairinfl::InfluenceConfig icfg;
  icfg.eta = cfg.lr;
  icfg.lambda = cfg.lambda;
  icfg.n = data.size();
  const double corr =
      fairinfl::verify_first_order(icfg, snapshot, &spec, data, cfg.pairs, cfg.seeds.front());
  ordered_json j;
  j["correlation"] = corr;
  j["threshold"] = cfg.threshold;
  j["pairs"] = cfg.pairs;
  j["pass"] = corr >= cfg.threshold;
  {
    std::ofstream out(artifacts.path("verify.json"));
    out << j.dump(2) << '\n';
  }
  artifacts.write_manifest("verify", cfg);
  std::cout << "first-order correlation " << fairinfl::format_double(corr) << " (threshold "
            << fairinfl::format_double(cfg.threshold) << ")\n";
  return corr >= cfg.threshold ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, ArtifactSet& artifacts) {
  const fairinfl::Dataset data = load_data(cfg);
  fairinfl::SweepConfig sc;
  sc.fractions = cfg.fractions;
  sc.strategies.clear();
  for (const std::string& s : cfg.strategies) sc.strategies.push_back(fairinfl::parse_prune_strategy(s));
  sc.seeds = cfg.seeds;
  sc.train = make_train_config(cfg);
  sc.hidden_dim = cfg.hidden;
  sc.surrogate = fairinfl::parse_surrogate_kind(cfg.surrogate);
  sc.train_fraction = cfg.split > 0.0 ? cfg.split : 0.8;
  sc.pretrain_erm = cfg.pretrain_erm;
  sc.order_flip = cfg.order_flip;
  sc.loss_agg = cfg.loss_agg == "self" ? fairinfl::LossAggregation::SelfInfluence
                                       : fairinfl::LossAggregation::Aggregated;
  const fairinfl::SweepReport report = fairinfl::run_sweep(data, sc);
  report.write_csv(artifacts.path("sweep.csv"));
  report.write_json(artifacts.path("sweep.json"));
  artifacts.write_manifest("sweep", cfg);
  std::cout << "swept " << report.cells.size() << " cells\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness influence scores, data pruning and retraining sweeps"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override file values)");
    cmd->add_option("--data", cfg.data, "dataset CSV path");
    cmd->add_option("--surrogate", cfg.surrogate, "dp|tpr|fpr|eo|cov|mine");
    cmd->add_option("--lambda", cfg.lambda, "fairness regularizer weight");
    cmd->add_option("--lr", cfg.lr, "learning rate (also eta in influence formulas)");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--batch", cfg.batch, "batch size (0 = full batch)");
    cmd->add_option("--hidden", cfg.hidden, "hidden width");
    cmd->add_option("--init-scale", cfg.init_scale, "weight init scale");
    cmd->add_option("--split", cfg.split, "train fraction (0 disables the holdout)");
    cmd->add_option("--seed", cfg.seeds, "random seed(s)");
    cmd->add_option("--fractions", cfg.fractions, "keep fractions")->delimiter(',');
    cmd->add_option("--strategies", cfg.strategies, "prune strategies")->delimiter(',');
    cmd->add_option("--out", cfg.out, "output directory");
    cmd->add_flag("--coerce-labels", cfg.coerce_labels, "map {0,1} labels to {-1,+1}");
    cmd->add_flag("--order-flip", cfg.order_flip, "reverse the removal order");
    cmd->add_flag("--pretrain-erm", cfg.pretrain_erm, "score with an ERM-pretrained model");
    cmd->add_option("--loss-agg", cfg.loss_agg, "aggregated|self");
    return cmd;
  };

  CLI::App* synth = add_common(app.add_subcommand("synth", "generate a synthetic dataset CSV"));
  synth->add_option("--n-per-cell", cfg.n_per_cell, "examples per (z,y) cell");
  synth->add_option("--mu", cfg.mu, "cell means mu(0,-1),mu(1,-1),mu(0,+1),mu(1,+1)")->delimiter(',');
  synth->add_option("--sigma", cfg.sigma, "cell standard deviation");
  synth->add_flag("--benchmark", cfg.benchmark, "d-dimensional benchmark generator");
  synth->add_option("--n", cfg.n, "benchmark: total examples");
  synth->add_option("--d", cfg.dim, "benchmark: feature dimension");
  synth->add_option("--noise-sigma", cfg.noise_sigma, "benchmark: per-coordinate noise");
  synth->add_option("--label-noise", cfg.label_noise, "benchmark: label flip fraction");
  synth->add_option("--clusters", cfg.clusters, "benchmark: shared mixture components");
  synth->add_option("--spread", cfg.spread, "benchmark: cluster center spread");

  CLI::App* train_cmd = add_common(app.add_subcommand("train", "train a model, write snapshot + log"));
  CLI::App* score = add_common(app.add_subcommand("score", "write the per-example influence table"));
  score->add_option("--snapshot", cfg.snapshot, "snapshot JSON path");
  CLI::App* verify = add_common(app.add_subcommand("verify", "first-order fidelity check"));
  verify->add_option("--snapshot", cfg.snapshot, "snapshot JSON path (trains one when absent)");
  verify->add_option("--pairs", cfg.pairs, "number of sampled (train, target) pairs");
  verify->add_option("--threshold", cfg.threshold, "exit 0 iff correlation >= threshold");
  CLI::App* sweep = add_common(app.add_subcommand("sweep", "prune/retrain sweep, write report"));
  (void)train_cmd;
  (void)sweep;

  CLI11_PARSE(app, argc, argv);
  CLI::App* cmd = app.get_subcommands().front();

  try {
    if (!config_path.empty()) apply_config_file(config_path, cfg, cmd);
    validate_config(cfg);
  } catch (const CLI::Error& e) {
    std::cerr << e.get_name() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  }

  ArtifactSet artifacts(cfg.out);
  try {
    const std::string name = cmd->get_name();
    if (name == "synth") return cmd_synth(cfg, artifacts);
    if (name == "train") return cmd_train(cfg, artifacts);
    if (name == "score") return cmd_score(cfg, artifacts);
    if (name == "verify") return cmd_verify(cfg, artifacts);
    if (name == "sweep") return cmd_sweep(cfg, artifacts);
    std::cerr << "unknown command " << name << '\n';
    return 2;
  } catch (const std::exception& e) {
    artifacts.rollback();
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
