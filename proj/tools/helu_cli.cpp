#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "helu/commands.hpp"
#include "helu/config.hpp"
#include "helu/experiments.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> activation;
  std::optional<double> alpha;
  std::optional<int> seeds;
  std::optional<int> jobs;
  std::optional<std::string> out;
  bool float32 = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key=value config file");
  cmd->add_option("--set", f.overrides, "override a config key, e.g. --set train.lr=0.1");
  cmd->add_option("--activation", f.activation, "relu | helu:<alpha> | elu | sigmoid | swish | gelu | gelu-tanh");
  cmd->add_option("--alpha", f.alpha, "use HeLU with this alpha");
  cmd->add_option("--seeds", f.seeds, "number of seeds per sweep cell");
  cmd->add_option("--jobs", f.jobs, "parallel workers");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--float32", f.float32, "32-bit floats (bench)");
}

helu::ExperimentConfig resolve(const CommonFlags& f) {
  helu::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = helu::load_config(f.config_path, cfg);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(fmt::format("--set expects key=value, got '{}'", kv));
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.activation) cfg.set("activation", *f.activation);
  if (f.alpha) cfg.set("activation", helu::to_string(helu::ActivationSpec::helu(*f.alpha)));
  if (f.seeds) cfg.seeds = *f.seeds;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.out) cfg.output_dir = *f.out;
  return cfg;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HeLU activation experiments: training, sweeps, gradient checks, kernel benchmarks"};
  app.require_subcommand(1);

  CommonFlags train_f, sweep_f, grad_f, bench_f, hist_f;

  auto* train = app.add_subcommand("train", "train one model");
  add_common(train, train_f);

  auto* sweep = app.add_subcommand("sweep", "activation/alpha grid x seeds");
  add_common(sweep, sweep_f);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the backward rule");
  add_common(grad, grad_f);
  std::size_t points = 1000;
  std::uint64_t grad_seed = 0;
  grad->add_option("--points", points, "sample points in [-5, 5]");
  grad->add_option("--seed", grad_seed, "sampling seed");

  auto* bench = app.add_subcommand("bench", "activation kernel microbenchmark");
  add_common(bench, bench_f);
  std::vector<std::string> kernels{"relu", "helu:0.05", "gelu-tanh", "gelu"};
  std::size_t n = 1'000'000;
  int reps = 30;
  bench->add_option("--kernels", kernels, "activations to time")->delimiter(',');
  bench->add_option("--n", n, "elements per call");
  bench->add_option("--reps", reps, "timed repetitions");

  auto* hist = app.add_subcommand("hist", "pre-activation histogram of a checkpoint");
  add_common(hist, hist_f);
  std::string checkpoint;
  std::size_t bins = helu::kDefaultHistogramBins;
  hist->add_option("--checkpoint", checkpoint, "model.ckpt from train")->required();
  hist->add_option("--bins", bins, "number of bins over [-5, 5]");

  auto* exps = app.add_subcommand("experiments", "canned studies");
  exps->require_subcommand(1);
  auto* dying = exps->add_subcommand("dying-relu", "dead-unit induction: relu vs helu:0.05 vs gelu");
  auto* asweep = exps->add_subcommand("alpha-sweep", "accuracy across alpha on spirals");
  int exp_seeds = 10, exp_jobs = 1, exp_epochs = 40;
  double exp_lr = 0.1;
  std::string exp_out = "out";
  for (auto* c : {dying, asweep}) {
    c->add_option("--seeds", exp_seeds, "paired seeds");
    c->add_option("--jobs", exp_jobs, "parallel workers");
    c->add_option("--out", exp_out, "root output directory");
  }
  dying->add_option("--lr", exp_lr, "learning rate of the stress phase");
  asweep->add_option("--epochs", exp_epochs, "training epochs per run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return helu::cmd_train(resolve(train_f), std::cout);
    if (*sweep) return helu::cmd_sweep(resolve(sweep_f), std::cout);
    if (*grad) {
      const auto cfg = resolve(grad_f);
      return helu::cmd_gradcheck(cfg.activation_spec(), points, grad_seed, cfg.output_dir, std::cout);
    }
    if (*bench) {
      const auto cfg = resolve(bench_f);
      std::vector<helu::ActivationSpec> specs;
      for (const auto& k : kernels) specs.push_back(helu::parse_activation(k));
      return helu::cmd_bench(specs, n, reps, bench_f.float32 ? 32 : 64, cfg.output_dir, std::cout);
    }
    if (*hist) {
      const auto cfg = resolve(hist_f);
      return helu::cmd_hist(checkpoint, cfg, bins, cfg.output_dir, std::cout);
    }
    if (*dying) {
      helu::DyingReluOptions opts;
      opts.seeds = exp_seeds;
      opts.jobs = exp_jobs;
      opts.lr_aggressive = exp_lr;
      const auto report = helu::exp_dying_relu(opts);
      const auto dir = std::filesystem::path(exp_out) / "dying-relu" / timestamp();
      helu::write_report(report, dir);
      for (const auto& a : report.arms) {
        std::cout << fmt::format("{:<10} dead {:.4f} +- {:.4f}  acc {:.4f} +- {:.4f}\n", helu::to_string(a.activation),
                                 a.dead.mean, a.dead.std, a.acc.mean, a.acc.std);
      }
      std::cout << fmt::format("protocol {} -> {}\n", report.protocol, dir.string());
      return report.relu_has_dead_units() && report.helu_not_worse_than_relu() && report.alpha_zero_matches_relu() ? 0 : 1;
    }
    if (*asweep) {
      helu::AlphaSweepOptions opts;
      opts.seeds = exp_seeds;
      opts.jobs = exp_jobs;
      opts.epochs = exp_epochs;
      const auto report = helu::exp_alpha_sensitivity(opts);
      const auto dir = std::filesystem::path(exp_out) / "alpha-sweep" / timestamp();
      helu::write_report(report, dir);
      std::cout << fmt::format("{:<10} acc {:.4f} +- {:.4f}\n", "relu", report.relu.acc.mean, report.relu.acc.std);
      for (const auto& a : report.helu) {
        std::cout << fmt::format("{:<10} acc {:.4f} +- {:.4f}\n", helu::to_string(a.activation), a.acc.mean, a.acc.std);
      }
      std::cout << fmt::format("best {} non-inferior={} large-alpha-collapse={} -> {}\n",
                               helu::to_string(report.helu[report.best_arm()].activation), report.non_inferior(),
                               report.large_alpha_collapses(), dir.string());
      return report.non_inferior() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
