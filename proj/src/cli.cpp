#include "afmvc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "afmvc/bound_lab.hpp"
#include "afmvc/checkpoint.hpp"
#include "afmvc/metrics.hpp"
#include "afmvc/synth.hpp"
#include "afmvc/trainer.hpp"

namespace afmvc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTraining = 3;
constexpr int kExitBoundDomain = 4;

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("AFMVC_OUT"); env && *env) return env;
  return ".";
}

struct RunMetrics {
  double acc, nmi, bal;
};

RunMetrics metrics_for(const std::vector<int>& assignments, const MultiViewDataset& ds) {
  const MetricsReport rep = evaluate_clustering(
      assignments, ds.labels ? *ds.labels : std::vector<int>{}, ds.sensitive);
  return {rep.acc, rep.nmi, rep.bal};
}

json metrics_json(const RunMetrics& m) {
  json j;
  j["acc"] = m.acc;
  j["nmi"] = m.nmi;
  j["bal"] = m.bal;
  return j;
}

struct MeanStd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std_dev = std::numeric_limits<double>::quiet_NaN();
};

MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty() || std::any_of(xs.begin(), xs.end(), [](double x) { return std::isnan(x); })) {
    return {};
  }
  MeanStd r;
  r.mean = 0.0;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - r.mean) * (x - r.mean);
  r.std_dev = std::sqrt(var / static_cast<double>(xs.size()));
  return r;
}

void write_csv_line(std::ofstream& out, const std::string& label, const MeanStd& m) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g", label.c_str(), m.mean, m.std_dev);
  out << buf << '\n';
}

// Runs one seed of training and writes trace/assignments/results files.
RunMetrics run_one_training(const MultiViewDataset& ds, const TrainConfig& config,
                            const std::string& out_dir, bool save_ckpt) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainedModel model = train(ds, config);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string tag = std::to_string(config.seed);
  const std::string trace_path = (fs::path(out_dir) / ("trace-" + tag + ".csv")).string();
  write_trace_csv(trace_path, model.trace);
  export_assignments_csv((fs::path(out_dir) / ("assignments-" + tag + ".csv")).string(),
                         model.assignments);
  if (save_ckpt) {
    save_model_checkpoint((fs::path(out_dir) / ("model-" + tag + ".ckpt")).string(), model,
                          config.hash());
  }

  const RunMetrics m = metrics_for(model.assignments, ds);
  json j;
  j["config"] = json::parse(config.to_json_string());
  j["dataset"] = ds.name;
  j["trace_path"] = trace_path;
  j["metrics"] = metrics_json(m);
  j["wall_clock_seconds"] = wall;
  std::ofstream out((fs::path(out_dir) / ("results-" + tag + ".json")).string());
  out << j.dump(2) << '\n';
  return m;
}

void write_aggregate(const std::string& path, const std::vector<RunMetrics>& runs) {
  std::vector<double> accs, nmis, bals;
  for (const auto& r : runs) {
    accs.push_back(r.acc);
    nmis.push_back(r.nmi);
    bals.push_back(r.bal);
  }
  std::ofstream out(path);
  out << "metric,mean,std\n";
  write_csv_line(out, "acc", mean_std(accs));
  write_csv_line(out, "nmi", mean_std(nmis));
  write_csv_line(out, "bal", mean_std(bals));
}

struct CommonOpts {
  std::string manifest_path;
  std::string config_path;
  std::string out_dir;
  int repeats = 1;
  bool save_ckpt = false;
};

// flag > config file > default
void add_config_options(CLI::App* cmd, CommonOpts& opts, TrainConfig& overrides) {
  cmd->add_option("--manifest", opts.manifest_path, "dataset manifest (JSON)")->required();
  cmd->add_option("--config", opts.config_path, "training config file (JSON)");
  cmd->add_option("--out", opts.out_dir, "output directory (default: $AFMVC_OUT or .)");
  cmd->add_option("--repeats", opts.repeats, "number of seeds to run")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda-c", overrides.lambda_c, "consensus loss weight");
  cmd->add_option("--lambda-f", overrides.lambda_f, "fairness loss weight");
  cmd->add_option("--epochs", overrides.epochs, "joint training epochs");
  cmd->add_option("--update-interval", overrides.update_interval, "consensus refresh period");
  cmd->add_option("--beta", overrides.beta, "reversal schedule growth rate");
  cmd->add_option("--alpha", overrides.alpha, "Student-t degrees of freedom");
  cmd->add_option("--batch-size", overrides.batch_size, "mini-batch size");
  cmd->add_option("--pretrain-epochs", overrides.pretrain_epochs, "autoencoder pretraining epochs");
  cmd->add_option("--lr", overrides.lr, "Adam learning rate");
  cmd->add_option("--seed", overrides.seed, "base seed");
  cmd->add_option("--k", overrides.k, "cluster count (defaults to the manifest's K)");
  cmd->add_option("--latent-dim", overrides.arch.latent_dim, "encoder latent width");
  cmd->add_option("--encoder-hidden", overrides.arch.encoder_hidden, "encoder hidden widths");
  cmd->add_option("--disc-hidden", overrides.arch.disc_hidden, "discriminator hidden widths");
  cmd->add_flag("--save-checkpoint", opts.save_ckpt, "write a model checkpoint per run");
}

TrainConfig assemble_config(const CLI::App* cmd, const CommonOpts& opts,
                            const TrainConfig& overrides, const DatasetManifest& manifest) {
  TrainConfig config;
  if (!opts.config_path.empty()) config = TrainConfig::from_json_file(opts.config_path);
  if (config.k == 0) config.k = manifest.k;
  const auto picked = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  if (picked("--lambda-c")) config.lambda_c = overrides.lambda_c;
  if (picked("--lambda-f")) config.lambda_f = overrides.lambda_f;
  if (picked("--epochs")) config.epochs = overrides.epochs;
  if (picked("--update-interval")) config.update_interval = overrides.update_interval;
  if (picked("--beta")) config.beta = overrides.beta;
  if (picked("--alpha")) config.alpha = overrides.alpha;
  if (picked("--batch-size")) config.batch_size = overrides.batch_size;
  if (picked("--pretrain-epochs")) config.pretrain_epochs = overrides.pretrain_epochs;
  if (picked("--lr")) config.lr = overrides.lr;
  if (picked("--seed")) config.seed = overrides.seed;
  if (picked("--k")) config.k = overrides.k;
  if (picked("--latent-dim")) config.arch.latent_dim = overrides.arch.latent_dim;
  if (picked("--encoder-hidden")) config.arch.encoder_hidden = overrides.arch.encoder_hidden;
  if (picked("--disc-hidden")) config.arch.disc_hidden = overrides.arch.disc_hidden;
  return config;
}

int cmd_train(const CLI::App* cmd, const CommonOpts& opts, const TrainConfig& overrides) {
  MultiViewDataset ds;
  TrainConfig config;
  std::string out_dir;
  try {
    const DatasetManifest manifest = DatasetManifest::from_json_file(opts.manifest_path);
    ds = load_dataset(manifest);
    config = assemble_config(cmd, opts, overrides, manifest);
    config.validate();
    out_dir = resolve_out_dir(opts.out_dir);
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    std::vector<RunMetrics> runs;
    for (int r = 0; r < opts.repeats; ++r) {
      TrainConfig run_config = config;
      run_config.seed = config.seed + static_cast<std::uint64_t>(r);
      runs.push_back(run_one_training(ds, run_config, out_dir, opts.save_ckpt));
    }
    write_aggregate((fs::path(out_dir) / "aggregate.csv").string(), runs);
    std::cout << "train: " << opts.repeats << " run(s) complete; aggregate in " << out_dir
              << "/aggregate.csv\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return kExitTraining;
  }
}

int cmd_evaluate(const CommonOpts& opts, const std::string& assignments_path) {
  try {
    const DatasetManifest manifest = DatasetManifest::from_json_file(opts.manifest_path);
    const MultiViewDataset ds = load_dataset(manifest);
    const std::vector<int> assignments = read_assignments_csv(assignments_path);
    require(static_cast<int>(assignments.size()) == ds.num_instances(),
            "evaluate: assignment count does not match dataset size");
    const RunMetrics m = metrics_for(assignments, ds);
    const std::string out_dir = resolve_out_dir(opts.out_dir);
    fs::create_directories(out_dir);
    json j;
    j["dataset"] = ds.name;
    j["assignments_path"] = assignments_path;
    j["metrics"] = metrics_json(m);
    std::ofstream out((fs::path(out_dir) / "evaluation.json").string());
    out << j.dump(2) << '\n';
    std::printf("ACC %.4f  NMI %.4f  BAL %.4f\n", m.acc, m.nmi, m.bal);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_ablate(const CLI::App* cmd, const CommonOpts& opts, const TrainConfig& overrides) {
  MultiViewDataset ds;
  TrainConfig config;
  std::string out_dir;
  try {
    const DatasetManifest manifest = DatasetManifest::from_json_file(opts.manifest_path);
    ds = load_dataset(manifest);
    config = assemble_config(cmd, opts, overrides, manifest);
    config.validate();
    out_dir = resolve_out_dir(opts.out_dir);
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const AblationVariant variants[] = {AblationVariant::A, AblationVariant::B,
                                        AblationVariant::C, AblationVariant::D};
    std::ofstream out((fs::path(out_dir) / "ablation.csv").string());
    out << "# loss components per variant (x = enabled)\n";
    out << "# variant A: L_R x  L_F .  L_C x\n";
    out << "# variant B: L_R .  L_F x  L_C x\n";
    out << "# variant C: L_R x  L_F x  L_C .\n";
    out << "# variant D: L_R x  L_F x  L_C x\n";
    out << "variant,acc_mean,acc_std,nmi_mean,nmi_std,bal_mean,bal_std\n";
    for (AblationVariant v : variants) {
      std::vector<double> accs, nmis, bals;
      for (int r = 0; r < opts.repeats; ++r) {
        TrainConfig run_config = config;
        run_config.seed = config.seed + static_cast<std::uint64_t>(r);
        const TrainedModel model = ablate(ds, run_config, v);
        const RunMetrics m = metrics_for(model.assignments, ds);
        accs.push_back(m.acc);
        nmis.push_back(m.nmi);
        bals.push_back(m.bal);
      }
      const MeanStd am = mean_std(accs), nm = mean_std(nmis), bm = mean_std(bals);
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                    ablation_variant_name(v).c_str(), am.mean, am.std_dev, nm.mean, nm.std_dev,
                    bm.mean, bm.std_dev);
      out << buf << '\n';
    }
    std::cout << "ablate: table written to " << out_dir << "/ablation.csv\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return kExitTraining;
  }
}

int cmd_sweep(const CLI::App* cmd, const CommonOpts& opts, const TrainConfig& overrides,
              const std::vector<double>& grid_in) {
  MultiViewDataset ds;
  TrainConfig config;
  std::string out_dir;
  std::vector<double> grid = grid_in;
  try {
    const DatasetManifest manifest = DatasetManifest::from_json_file(opts.manifest_path);
    ds = load_dataset(manifest);
    config = assemble_config(cmd, opts, overrides, manifest);
    config.validate();
    out_dir = resolve_out_dir(opts.out_dir);
    fs::create_directories(out_dir);
    if (grid.empty()) grid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const std::size_t g = grid.size();
    Matrix acc(g, g), nmi_m(g, g), bal(g, g);
    for (std::size_t i = 0; i < g; ++i) {
      for (std::size_t j = 0; j < g; ++j) {
        std::vector<double> accs, nmis, bals;
        for (int r = 0; r < opts.repeats; ++r) {
          TrainConfig cell = config;
          cell.lambda_c = grid[i];
          cell.lambda_f = grid[j];
          cell.seed = config.seed + static_cast<std::uint64_t>(r);
          const TrainedModel model = train(ds, cell);
          const RunMetrics m = metrics_for(model.assignments, ds);
          accs.push_back(m.acc);
          nmis.push_back(m.nmi);
          bals.push_back(m.bal);
        }
        acc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mean_std(accs).mean;
        nmi_m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mean_std(nmis).mean;
        bal(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mean_std(bals).mean;
      }
    }
    const auto write_grid = [&](const std::string& name, const Matrix& m) {
      std::ofstream out((fs::path(out_dir) / ("sweep_" + name + ".csv")).string());
      char buf[64];
      out << "lambda_c\\lambda_f";
      for (double lf : grid) {
        std::snprintf(buf, sizeof(buf), ",%.17g", lf);
        out << buf;
      }
      out << '\n';
      for (std::size_t i = 0; i < g; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", grid[i]);
        out << buf;
        for (std::size_t j = 0; j < g; ++j) {
          std::snprintf(buf, sizeof(buf), ",%.17g", m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
          out << buf;
        }
        out << '\n';
      }
    };
    write_grid("acc", acc);
    write_grid("nmi", nmi_m);
    write_grid("bal", bal);

    // spread of BAL across the grid, as a robustness summary
    const double bal_mean = bal.mean();
    const double bal_var = (bal.array() - bal_mean).square().mean();
    std::ofstream summary((fs::path(out_dir) / "sweep_summary.csv").string());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "bal_mean,bal_variance\n%.17g,%.17g\n", bal_mean, bal_var);
    summary << buf;
    std::cout << "sweep: " << g * g << " cells per metric written to " << out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return kExitTraining;
  }
}

int cmd_bound_check(const std::string& out_flag, int k, int g, std::vector<double> epsilons,
                    int trials, std::uint64_t seed) {
  try {
    if (epsilons.empty()) epsilons = {0.2, 0.1, 0.05, 0.01};
    const std::string out_dir = resolve_out_dir(out_flag);
    fs::create_directories(out_dir);
    const auto rows = bound_sweep(k, g, epsilons, trials, seed);
    write_bound_report_csv((fs::path(out_dir) / "bound_report.csv").string(), rows);
    for (const auto& row : rows) {
      std::printf("epsilon %.4g: max_I %.6f  mean_I %.6f  pinsker_pass %.4f  leading_term %.6f\n",
                  row.epsilon, row.max_i, row.mean_i, row.pinsker_pass_rate, row.leading_term);
      if (std::abs(row.epsilon - 0.1) < 1e-12) {
        std::printf("  -> at epsilon = 0.1 the closed-form leading term is %.4f "
                    "(mutual information stays below ~0.167)\n",
                    row.leading_term);
      }
    }
    return kExitOk;
  } catch (const std::domain_error& e) {
    std::cerr << "bound-lab domain error: " << e.what() << "\n";
    return kExitBoundDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_synth_data(const std::string& type, const std::string& out_flag, int n, int k, int dim,
                   double separation, double rho, std::uint64_t seed) {
  try {
    const std::string out_dir = resolve_out_dir(out_flag);
    fs::create_directories(out_dir);
    MultiViewDataset ds;
    int manifest_k = k;
    if (type == "blobs") {
      BlobSpec spec;
      spec.n = n;
      spec.k = k;
      spec.dim = dim;
      spec.separation = separation;
      spec.seed = seed;
      ds = make_blob_dataset(spec);
    } else if (type == "biased") {
      BiasedSpec spec;
      spec.n = n;
      spec.rho = rho;
      spec.seed = seed;
      ds = make_biased_dataset(spec);
      manifest_k = 2;
    } else {
      throw std::invalid_argument("synth-data: unknown type '" + type + "'");
    }
    const std::string manifest_path = write_dataset_files(ds, out_dir, manifest_k);
    std::cout << "synth-data: wrote " << manifest_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"adversarial fair multi-view clustering toolkit"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, ablate_opts, sweep_opts;
  TrainConfig train_ov, ablate_ov, sweep_ov;

  CLI::App* train_cmd = app.add_subcommand("train", "train the full model on a dataset manifest");
  add_config_options(train_cmd, train_opts, train_ov);

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "score an assignments CSV against a dataset");
  std::string assignments_path;
  eval_cmd->add_option("--manifest", eval_opts.manifest_path, "dataset manifest (JSON)")->required();
  eval_cmd->add_option("--assignments", assignments_path, "assignments CSV")->required();
  eval_cmd->add_option("--out", eval_opts.out_dir, "output directory");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run loss-combination variants A-D");
  add_config_options(ablate_cmd, ablate_opts, ablate_ov);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "grid over lambda_c x lambda_f");
  add_config_options(sweep_cmd, sweep_opts, sweep_ov);
  std::vector<double> sweep_grid;
  sweep_cmd->add_option("--grid", sweep_grid, "grid values (shared by both axes)");

  CLI::App* bound_cmd = app.add_subcommand("bound-check", "numerical mutual-information bound lab");
  std::string bound_out;
  int bound_k = 2, bound_g = 2, bound_trials = 10000;
  std::uint64_t bound_seed = 0;
  std::vector<double> bound_eps;
  bound_cmd->add_option("--out", bound_out, "output directory");
  bound_cmd->add_option("--k", bound_k, "cluster count");
  bound_cmd->add_option("--g", bound_g, "group count");
  bound_cmd->add_option("--epsilons", bound_eps, "KL levels to sweep");
  bound_cmd->add_option("--trials", bound_trials, "samples per level");
  bound_cmd->add_option("--seed", bound_seed, "sampling seed");

  CLI::App* synth_cmd = app.add_subcommand("synth-data", "generate synthetic datasets");
  std::string synth_type = "blobs", synth_out;
  int synth_n = 1000, synth_k = 4, synth_dim = 8;
  double synth_sep = 6.0, synth_rho = 0.9;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--type", synth_type, "blobs | biased");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--n", synth_n, "instance count");
  synth_cmd->add_option("--k", synth_k, "component count (blobs)");
  synth_cmd->add_option("--dim", synth_dim, "base feature count (blobs)");
  synth_cmd->add_option("--separation", synth_sep, "component separation (blobs)");
  synth_cmd->add_option("--rho", synth_rho, "sensitive/cluster correlation (biased)");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (train_cmd->parsed()) return cmd_train(train_cmd, train_opts, train_ov);
  if (eval_cmd->parsed()) return cmd_evaluate(eval_opts, assignments_path);
  if (ablate_cmd->parsed()) return cmd_ablate(ablate_cmd, ablate_opts, ablate_ov);
  if (sweep_cmd->parsed()) return cmd_sweep(sweep_cmd, sweep_opts, sweep_ov, sweep_grid);
  if (bound_cmd->parsed())
    return cmd_bound_check(bound_out, bound_k, bound_g, bound_eps, bound_trials, bound_seed);
  if (synth_cmd->parsed())
    return cmd_synth_data(synth_type, synth_out, synth_n, synth_k, synth_dim, synth_sep, synth_rho,
                          synth_seed);
  std::cerr << "usage error: no subcommand\n";
  return kExitUsage;
}

}  // namespace afmvc
