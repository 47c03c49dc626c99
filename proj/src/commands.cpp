#include "helu/commands.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "helu/bench.hpp"
#include "helu/diagnostics.hpp"
#include "helu/gradcheck.hpp"
#include "helu/io.hpp"
#include "helu/rng.hpp"
#include "json.hpp"

namespace helu {

namespace fs = std::filesystem;

RunResult run_training(const ExperimentConfig& config, const ActivationSpec& activation, std::uint64_t seed) {
  auto [train_set, test_set] = make_datasets(config.data);
  std::vector<std::size_t> widths{train_set.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(static_cast<std::size_t>(std::max(train_set.n_classes, test_set.n_classes)));

  RunResult r;
  r.activation = activation;
  r.seed = seed;
  r.model = init_mlp(widths, activation, seed);
  TrainConfig tc = config.train;
  tc.seed = seed;
  TrainOptions opts;
  opts.eval = &test_set;
  r.trace = train(r.model, train_set, tc, opts);
  const auto& last = r.trace.epochs.back();
  r.final_loss = last.loss;
  r.train_acc = last.train_acc;
  r.test_acc = last.test_acc;
  r.dead_fraction = last.dead_fraction;
  r.band_fraction = last.band_fraction;
  return r;
}

Summary summarize_values(const std::vector<double>& v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "epoch,loss,train_acc,test_acc,dead_fraction,band_fraction\n";
  for (const auto& e : trace.epochs) {
    out += fmt::format("{},{},{},{},{},{}\n", e.epoch, e.loss, e.train_acc, e.test_acc, e.dead_fraction, e.band_fraction);
  }
  return out;
}

int cmd_train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const fs::path out(config.output_dir);
  const auto spec = config.activation_spec();
  log << fmt::format("train: activation={} seed={} -> {}\n", to_string(spec), config.train.seed, out.string());

  auto [train_set, test_set] = make_datasets(config.data);
  RunResult r = run_training(config, spec, config.train.seed);

  std::string dead_csv = "epoch,layer,dead_fraction,band_fraction\n";
  const double band_alpha = spec.kind == ActivationKind::HeLU ? spec.alpha : 0.0;
  const auto pre = collect_pre_activations(r.model, train_set.features);
  std::vector<double> band_per_layer;
  for (const auto& z : pre) band_per_layer.push_back(grad_mask_occupancy(z, band_alpha).band);
  auto final_report = dead_fraction(pre, spec, r.trace.epochs.back().epoch);
  for (const auto& row : to_csv_rows(final_report, band_per_layer, r.band_fraction)) dead_csv += row + "\n";

  nlohmann::json metrics;
  metrics["activation"] = to_string(spec);
  metrics["seed"] = config.train.seed;
  metrics["final_loss"] = r.final_loss;
  metrics["train_acc"] = r.train_acc;
  metrics["test_acc"] = r.test_acc;
  metrics["dead_fraction"] = r.dead_fraction;
  metrics["band_fraction"] = r.band_fraction;
  metrics["per_layer_dead_fraction"] = final_report.per_layer_dead_fraction;
  metrics["config"] = config.to_text();

  write_file_atomic(out / "config.txt", config.to_text());
  write_file_atomic(out / "trace.csv", trace_csv(r.trace));
  write_file_atomic(out / "dead_neurons.csv", dead_csv);
  write_file_atomic(out / "metrics.json", metrics.dump(2) + "\n");
  save_checkpoint(r.model, out / "model.ckpt");
  log << fmt::format("train: loss={:.4f} train_acc={:.4f} test_acc={:.4f} dead={:.4f}\n", r.final_loss, r.train_acc,
                     r.test_acc, r.dead_fraction);
  return 0;
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const fs::path out(config.output_dir);
  const auto grid = config.sweep_grid();
  const auto seeds = static_cast<std::size_t>(config.seeds);
  const std::size_t total = grid.size() * seeds;
  std::vector<RunResult> results(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < total; t = next++) {
      const std::size_t i = t / seeds, j = t % seeds;
      results[t] = run_training(config, grid[i], derive_seed(config.train.seed, {i, j}));
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), total);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::string runs = "arm,activation,seed_index,seed,final_loss,train_acc,test_acc,dead_fraction,band_fraction\n";
  std::string summary =
      "arm,activation,n,mean_test_acc,std_test_acc,mean_train_acc,std_train_acc,mean_final_loss,std_final_loss,"
      "mean_dead_fraction,std_dead_fraction,flag\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> test, tr, loss, dead;
    for (std::size_t j = 0; j < seeds; ++j) {
      const auto& r = results[i * seeds + j];
      runs += fmt::format("{},{},{},{},{},{},{},{},{}\n", i, to_string(grid[i]), j, r.seed, r.final_loss, r.train_acc,
                          r.test_acc, r.dead_fraction, r.band_fraction);
      test.push_back(r.test_acc);
      tr.push_back(r.train_acc);
      loss.push_back(r.final_loss);
      dead.push_back(r.dead_fraction);
    }
    const auto st = summarize_values(test), sr = summarize_values(tr), sl = summarize_values(loss),
               sd = summarize_values(dead);
    summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", i, to_string(grid[i]), st.n, st.mean, st.std, sr.mean,
                           sr.std, sl.mean, sl.std, sd.mean, sd.std, st.n == 1 ? "n=1" : "");
    log << fmt::format("sweep: {:<14} test_acc {:.4f} +- {:.4f} (n={})\n", to_string(grid[i]), st.mean, st.std, st.n);
  }
  write_file_atomic(out / "config.txt", config.to_text());
  write_file_atomic(out / "runs.csv", runs);
  write_file_atomic(out / "summary.csv", summary);
  return 0;
}

int cmd_gradcheck(const ActivationSpec& spec, std::size_t n_points, std::uint64_t seed, const fs::path& out_dir,
                  std::ostream& log) {
  const auto report = run_gradcheck(spec, n_points, seed);
  std::string csv = "z,finite_difference,backward,rel_error,status\n";
  for (const auto& p : report.points) {
    csv += fmt::format("{},{},{},{},{}\n", p.z, p.finite_difference, p.backward, p.rel_error, to_string(p.status));
  }
  nlohmann::json j;
  j["activation"] = to_string(spec);
  j["seed"] = seed;
  j["n_points"] = n_points;
  j["step"] = report.options.step;
  j["tolerance"] = report.options.tolerance;
  j["kink_radius"] = report.options.kink_radius;
  j["ok"] = report.ok;
  j["expected_mismatch"] = report.expected_mismatch;
  j["mismatch"] = report.mismatch;
  j["max_rel_error"] = report.max_rel_error;
  j["passed"] = report.passed();
  write_file_atomic(out_dir / "gradcheck.csv", csv);
  write_file_atomic(out_dir / "gradcheck.json", j.dump(2) + "\n");

  log << fmt::format("gradcheck {}: {} ok, {} EXPECTED-MISMATCH, {} MISMATCH, max rel err {:.3e}\n", to_string(spec),
                     report.ok, report.expected_mismatch, report.mismatch, report.max_rel_error);
  for (const auto& p : report.points) {
    if (p.status == GradStatus::Mismatch) {
      log << fmt::format("  MISMATCH z={} fd={} backward={}\n", p.z, p.finite_difference, p.backward);
    }
  }
  return report.passed() ? 0 : 1;
}

int cmd_bench(const std::vector<ActivationSpec>& kernels, std::size_t n, int reps, int float_width,
              const fs::path& out_dir, std::ostream& log) {
  std::string csv = bench_csv_header() + "\n";
  std::string jsonl;
  int status = 0;
  try {
    for (const auto& rec : bench_forward_suite(kernels, n, reps, float_width)) {
      csv += to_csv_row(rec) + "\n";
      jsonl += to_json(rec) + "\n";
      log << fmt::format("bench {:<12} fp{} median {:.4f} ns/elem  {:.3f} Gelem/s\n", rec.kernel, rec.float_width,
                         rec.ns_per_element.median, rec.throughput_gelem_per_s);
    }
  } catch (const MeasurementError& e) {
    log << fmt::format("bench: {}\n", e.what());
    status = 1;
  }
  write_file_atomic(out_dir / "bench.csv", csv);
  write_file_atomic(out_dir / "bench.jsonl", jsonl);
  return status;
}

int cmd_hist(const fs::path& checkpoint, const ExperimentConfig& config, std::size_t n_bins, const fs::path& out_dir,
             std::ostream& log) {
  const auto spec = config.activation_spec();
  const MlpModel model = load_checkpoint(checkpoint, spec);
  auto [train_set, test_set] = make_datasets(config.data);
  std::vector<Tensor> pre = collect_pre_activations(model, train_set.features);
  const auto test_pre = collect_pre_activations(model, test_set.features);
  pre.insert(pre.end(), test_pre.begin(), test_pre.end());

  const double alpha = spec.kind == ActivationKind::HeLU ? spec.alpha : 0.0;
  const auto h = histogram(pre, n_bins, kDefaultHistogramLo, kDefaultHistogramHi, alpha);
  const auto occ = grad_mask_occupancy(pre, alpha);

  std::string csv = "bin_lo,bin_hi,count,in_band\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const bool band = h.bin_edges[b + 1] > -alpha && h.bin_edges[b] < 0.0 && alpha > 0.0;
    csv += fmt::format("{},{},{},{}\n", h.bin_edges[b], h.bin_edges[b + 1], h.counts[b], band ? 1 : 0);
  }
  nlohmann::json j = nlohmann::json::parse(to_json(h));
  j["live_fraction"] = occ.live;
  j["dead_fraction"] = occ.dead;
  j["checkpoint"] = checkpoint.string();
  j["config"] = config.to_text();
  const std::string gp =
      "set datafile separator ','\n"
      "set style fill solid 0.6\n"
      "set xlabel 'pre-activation'\n"
      "set ylabel 'count'\n"
      "plot 'histogram.csv' every ::1 using (($1+$2)/2):($4==0?$3:1/0):($2-$1) with boxes lc rgb 'gray' title 'outside band', \\\n"
      "     '' every ::1 using (($1+$2)/2):($4==1?$3:1/0):($2-$1) with boxes lc rgb 'red' title 'hysteresis band'\n";

  write_file_atomic(out_dir / "histogram.csv", csv);
  write_file_atomic(out_dir / "histogram.json", j.dump(2) + "\n");
  write_file_atomic(out_dir / "histogram.gp", gp);
  write_file_atomic(out_dir / "config.txt", config.to_text());
  log << fmt::format("hist: {} values, live {:.4f} band {:.4f} dead {:.4f} (alpha={})\n",
                     std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}), occ.live, occ.band, occ.dead,
                     alpha);
  return 0;
}

}  // namespace helu
