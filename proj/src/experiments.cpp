#include "helu/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include <fmt/format.h>

#include "helu/data.hpp"
#include "helu/io.hpp"
#include "helu/rng.hpp"
#include "json.hpp"

namespace helu {

namespace {

struct Job {
  std::size_t arm = 0;
  std::size_t seed_index = 0;
};

struct JobResult {
  double dead = 0.0;
  double acc = 0.0;
  TrainingTrace trace;
};

/// Runs fn over arms x seeds on `jobs` threads and folds results into arms.
std::vector<ArmResult> run_grid(const std::vector<ActivationSpec>& arms, int n_seeds, std::uint64_t base_seed, int jobs,
                                const std::function<JobResult(const ActivationSpec&, std::uint64_t)>& fn) {
  const auto seeds = static_cast<std::size_t>(n_seeds);
  const std::size_t total = arms.size() * seeds;
  std::vector<JobResult> results(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < total; t = next++) {
      const std::size_t i = t / seeds, j = t % seeds;
      results[t] = fn(arms[i], derive_seed(base_seed, {j}));
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(jobs, static_cast<int>(total)); ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<ArmResult> out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    ArmResult a;
    a.activation = arms[i];
    for (std::size_t j = 0; j < seeds; ++j) {
      auto& r = results[i * seeds + j];
      a.seeds.push_back(derive_seed(base_seed, {j}));
      a.dead_fraction.push_back(r.dead);
      a.test_acc.push_back(r.acc);
      a.traces.push_back(std::move(r.trace));
    }
    a.dead = summarize_values(a.dead_fraction);
    a.acc = summarize_values(a.test_acc);
    out.push_back(std::move(a));
  }
  return out;
}

void append(TrainingTrace& into, TrainingTrace&& more) {
  for (auto& e : more.epochs) into.epochs.push_back(e);
  for (auto& r : more.dead_reports) into.dead_reports.push_back(std::move(r));
}

std::string runs_csv(const std::vector<const ArmResult*>& arms) {
  std::string out = "activation,seed,dead_fraction,test_acc\n";
  for (const auto* a : arms)
    for (std::size_t j = 0; j < a->seeds.size(); ++j)
      out += fmt::format("{},{},{},{}\n", to_string(a->activation), a->seeds[j], a->dead_fraction[j], a->test_acc[j]);
  return out;
}

std::string summary_csv(const std::vector<const ArmResult*>& arms) {
  std::string out = "activation,n,mean_dead_fraction,std_dead_fraction,mean_test_acc,std_test_acc\n";
  for (const auto* a : arms) {
    out += fmt::format("{},{},{},{},{},{}\n", to_string(a->activation), a->acc.n, a->dead.mean, a->dead.std, a->acc.mean,
                       a->acc.std);
  }
  return out;
}

nlohmann::json arm_json(const ArmResult& a) {
  nlohmann::json j;
  j["activation"] = to_string(a.activation);
  j["n"] = a.acc.n;
  j["seeds"] = a.seeds;
  j["dead_fraction"] = a.dead_fraction;
  j["test_acc"] = a.test_acc;
  j["mean_dead_fraction"] = a.dead.mean;
  j["std_dead_fraction"] = a.dead.std;
  j["mean_test_acc"] = a.acc.mean;
  j["std_test_acc"] = a.acc.std;
  return j;
}

}  // namespace

const ArmResult& DyingReluReport::arm(const std::string& name) const {
  for (const auto& a : arms)
    if (to_string(a.activation) == name) return a;
  throw std::out_of_range(fmt::format("no arm '{}'", name));
}

bool DyingReluReport::relu_has_dead_units() const { return arm("relu").dead.mean > 0.0; }

bool DyingReluReport::helu_not_worse_than_relu() const { return arm("helu:0.05").dead.mean <= arm("relu").dead.mean; }

bool DyingReluReport::alpha_zero_matches_relu() const {
  const auto& relu = arm("relu");
  const auto& zero = arm("helu:0");
  for (std::size_t s = 0; s < relu.traces.size(); ++s) {
    if (trace_csv(relu.traces[s]) != trace_csv(zero.traces[s])) return false;
  }
  return relu.dead_fraction == zero.dead_fraction && relu.test_acc == zero.test_acc;
}

DyingReluReport exp_dying_relu(const DyingReluOptions& options) {
  const Dataset all = gen_blobs(800, 8, 4, 1.0, 7);
  const auto [train_set, test_set] = split(all, 0.75, 7);
  const std::vector<std::size_t> widths{8, 32, 32, 4};

  auto run = [&](const ActivationSpec& spec, std::uint64_t seed) {
    MlpModel model = init_mlp(widths, spec, seed);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 32;
    cfg.epochs = options.warmup_epochs;
    TrainOptions opts;
    opts.eval = &test_set;
    TrainingTrace trace = train(model, train_set, cfg, opts);

    for (std::size_t l = 0; l < model.hidden_layers(); ++l)
      for (double& b : model.layers[l].bias.values()) b -= options.bias_shift;

    cfg.learning_rate = options.lr_aggressive;
    cfg.epochs = options.stress_epochs;
    opts.epoch_offset = options.warmup_epochs;
    append(trace, train(model, train_set, cfg, opts));

    JobResult r;
    r.dead = trace.epochs.back().dead_fraction;
    r.acc = trace.epochs.back().test_acc;
    r.trace = std::move(trace);
    return r;
  };

  DyingReluReport report;
  report.options = options;
  const std::vector<ActivationSpec> arms{ActivationSpec::relu(), ActivationSpec::helu(0.05), ActivationSpec::gelu(),
                                         ActivationSpec::helu(0.0)};
  report.arms = run_grid(arms, options.seeds, options.base_seed, options.jobs, run);
  return report;
}

std::size_t AlphaSweepReport::best_arm() const {
  std::size_t best = helu.size();
  for (std::size_t i = 0; i < helu.size(); ++i) {
    if (helu[i].activation.alpha <= 0.0) continue;
    if (best == helu.size() || helu[i].acc.mean > helu[best].acc.mean) best = i;
  }
  if (best == helu.size()) throw std::logic_error("alpha sweep has no alpha > 0 arm");
  return best;
}

double AlphaSweepReport::pooled_std() const {
  const auto& b = helu[best_arm()].acc;
  const auto& r = relu.acc;
  const double dof = static_cast<double>(b.n + r.n) - 2.0;
  if (dof <= 0.0) return 0.0;
  return std::sqrt(((static_cast<double>(b.n) - 1.0) * b.std * b.std + (static_cast<double>(r.n) - 1.0) * r.std * r.std) / dof);
}

bool AlphaSweepReport::non_inferior() const { return helu[best_arm()].acc.mean >= relu.acc.mean - 2.0 * pooled_std(); }

bool AlphaSweepReport::large_alpha_collapses() const {
  std::size_t largest = 0;
  for (std::size_t i = 1; i < helu.size(); ++i)
    if (helu[i].activation.alpha > helu[largest].activation.alpha) largest = i;
  return helu[largest].acc.mean < helu[best_arm()].acc.mean;
}

AlphaSweepReport exp_alpha_sensitivity(const AlphaSweepOptions& options) {
  const Dataset all = gen_spirals(600, 3, 0.2, 11);
  const auto [train_set, test_set] = split(all, 0.75, 11);
  const std::vector<std::size_t> widths{2, 64, 64, 3};

  auto run = [&](const ActivationSpec& spec, std::uint64_t seed) {
    MlpModel model = init_mlp(widths, spec, seed);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.learning_rate = options.learning_rate;
    cfg.epochs = options.epochs;
    TrainOptions opts;
    opts.eval = &test_set;
    JobResult r;
    r.trace = train(model, train_set, cfg, opts);
    r.dead = r.trace.epochs.back().dead_fraction;
    r.acc = r.trace.epochs.back().test_acc;
    return r;
  };

  std::vector<ActivationSpec> arms{ActivationSpec::relu()};
  for (double a : options.alphas) arms.push_back(ActivationSpec::helu(a));
  auto results = run_grid(arms, options.seeds, options.base_seed, options.jobs, run);

  AlphaSweepReport report;
  report.options = options;
  report.relu = std::move(results.front());
  report.helu.assign(std::make_move_iterator(results.begin() + 1), std::make_move_iterator(results.end()));
  return report;
}

void write_report(const DyingReluReport& report, const std::filesystem::path& dir) {
  std::vector<const ArmResult*> arms;
  for (const auto& a : report.arms) arms.push_back(&a);
  nlohmann::json j;
  j["experiment"] = "dying-relu";
  j["protocol"] = report.protocol;
  j["note"] = "death-induction protocol constructed for this artifact; not a published procedure";
  j["options"] = {{"seeds", report.options.seeds},
                  {"lr_aggressive", report.options.lr_aggressive},
                  {"bias_shift", report.options.bias_shift},
                  {"warmup_epochs", report.options.warmup_epochs},
                  {"stress_epochs", report.options.stress_epochs},
                  {"base_seed", report.options.base_seed}};
  for (const auto& a : report.arms) j["arms"].push_back(arm_json(a));
  j["relu_has_dead_units"] = report.relu_has_dead_units();
  j["helu_not_worse_than_relu"] = report.helu_not_worse_than_relu();
  j["alpha_zero_matches_relu"] = report.alpha_zero_matches_relu();
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");
  write_file_atomic(dir / "runs.csv", runs_csv(arms));
  write_file_atomic(dir / "summary.csv", summary_csv(arms));
}

void write_report(const AlphaSweepReport& report, const std::filesystem::path& dir) {
  std::vector<const ArmResult*> arms{&report.relu};
  for (const auto& a : report.helu) arms.push_back(&a);
  nlohmann::json j;
  j["experiment"] = "alpha-sweep";
  j["options"] = {{"alphas", report.options.alphas},
                  {"seeds", report.options.seeds},
                  {"epochs", report.options.epochs},
                  {"learning_rate", report.options.learning_rate},
                  {"base_seed", report.options.base_seed}};
  j["relu"] = arm_json(report.relu);
  for (const auto& a : report.helu) j["helu"].push_back(arm_json(a));
  j["best_arm"] = to_string(report.helu[report.best_arm()].activation);
  j["pooled_std"] = report.pooled_std();
  j["non_inferior"] = report.non_inferior();
  j["large_alpha_collapses"] = report.large_alpha_collapses();
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");
  write_file_atomic(dir / "runs.csv", runs_csv(arms));
  write_file_atomic(dir / "summary.csv", summary_csv(arms));
}

}  // namespace helu
