#include "helu/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <new>
#include <numeric>

#include <fmt/format.h>

#include "helu/errors.hpp"
#include "helu/nn.hpp"
#include "helu/rng.hpp"
#include "json.hpp"

namespace helu {

namespace {

using Clock = std::chrono::steady_clock;

template <typename T>
inline void clobber(T* p) {
  asm volatile("" : : "r"(p) : "memory");
}

double clock_resolution_ns() {
  double best = 1e18;
  for (int i = 0; i < 200; ++i) {
    const auto t0 = Clock::now();
    auto t1 = Clock::now();
    while (t1 == t0) t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  return best;
}

// Page-aligned so the input/output placement does not depend on heap state.
template <typename T>
class PageBuffer {
 public:
  explicit PageBuffer(std::size_t n)
      : n_(n), data_(static_cast<T*>(std::aligned_alloc(kPage, (n * sizeof(T) + kPage - 1) / kPage * kPage))) {
    if (!data_) throw std::bad_alloc();
    std::fill_n(data_.get(), n_, T(0));
  }
  T* data() { return data_.get(); }
  const T* data() const { return data_.get(); }
  std::size_t size() const { return n_; }
  T* begin() { return data(); }
  T* end() { return data() + n_; }
  const T* begin() const { return data(); }
  const T* end() const { return data() + n_; }

 private:
  static constexpr std::size_t kPage = 4096;
  struct Free {
    void operator()(T* p) const { std::free(p); }
  };
  std::size_t n_;
  std::unique_ptr<T, Free> data_;
};

template <typename T, typename Kernel>
std::function<double()> timed_pass(const PageBuffer<T>& in, PageBuffer<T>& out, Kernel kernel) {
  return [&in, &out, kernel] {
    const std::size_t n = in.size();
    const T* src = in.data();
    T* dst = out.data();
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < n; ++i) dst[i] = kernel(src[i]);
    clobber(dst);
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::nano>(t1 - t0).count();
  };
}

template <typename T>
std::function<double()> forward_pass_timer(const ActivationSpec& spec, const PageBuffer<T>& in, PageBuffer<T>& out) {
  const T alpha = static_cast<T>(spec.alpha);
  switch (spec.kind) {
    case ActivationKind::ReLU:
    case ActivationKind::HeLU:
      return timed_pass(in, out, [](T z) { return scalar::relu(z); });
    case ActivationKind::ELU:
      return timed_pass(in, out, [alpha](T z) { return scalar::elu(z, alpha); });
    case ActivationKind::Sigmoid:
      return timed_pass(in, out, [](T z) { return scalar::sigmoid(z); });
    case ActivationKind::Swish:
      return timed_pass(in, out, [](T z) { return scalar::swish(z); });
    case ActivationKind::GELUExact:
      return timed_pass(in, out, [](T z) { return scalar::gelu_exact(z); });
    case ActivationKind::GELUTanh:
      return timed_pass(in, out, [](T z) { return scalar::gelu_tanh(z); });
  }
  throw std::invalid_argument("unknown activation kind");
}

// Repetition r of every kernel runs back to back, starting from a rotating
// kernel, so slow drift in machine speed lands on all kernels alike. Before
// each timed pass the same kernel runs untimed for at least settle_ms: after
// a few ms elsewhere, the first passes of a memory-bound loop run up to 2x
// slower, which would penalize whichever kernel follows an expensive one.
template <typename T>
std::vector<BenchRecord> bench_suite_typed(std::span<const ActivationSpec> specs, std::size_t n, int reps,
                                           const BenchOptions& options) {
  const std::size_t k = specs.size();
  PageBuffer<T> in(n);
  Rng rng(options.seed);
  for (auto& v : in) v = static_cast<T>(rng.normal());
  PageBuffer<T> out(n);
  std::vector<std::function<double()>> pass;
  for (std::size_t s = 0; s < k; ++s) pass.push_back(forward_pass_timer<T>(specs[s], in, out));

  for (int w = 0; w < options.warmup; ++w)
    for (auto& p : pass) p();
  const double settle_ns = options.settle_ms * 1e6;
  std::vector<std::vector<double>> raw(k, std::vector<double>(static_cast<std::size_t>(reps)));
  for (std::size_t r = 0; r < static_cast<std::size_t>(reps); ++r)
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t s = (r + j) % k;
      double settled = 0.0;
      do settled += pass[s](); while (settled < settle_ns);
      raw[s][r] = pass[s]();
    }

  const double resolution = clock_resolution_ns();
  std::vector<BenchRecord> records;
  for (std::size_t s = 0; s < k; ++s) {
    const double fastest = *std::min_element(raw[s].begin(), raw[s].end());
    if (resolution > 0.01 * fastest) {
      throw MeasurementError(fmt::format("{}: clock resolution {} ns is coarser than 1% of a repetition ({} ns)",
                                         to_string(specs[s]), resolution, fastest));
    }
    BenchRecord rec;
    rec.kernel = to_string(specs[s]);
    rec.n_elements = n;
    rec.reps = reps;
    rec.float_width = sizeof(T) * 8;
    std::vector<double> per_elem(raw[s].size());
    std::transform(raw[s].begin(), raw[s].end(), per_elem.begin(),
                   [n](double ns) { return ns / static_cast<double>(n); });
    rec.ns_per_element = summarize(std::move(per_elem));
    rec.throughput_gelem_per_s = 1.0 / rec.ns_per_element.median;
    pass[s]();
    double sum = 0.0;
    for (T v : out) sum += static_cast<double>(v);
    rec.checksum = sum;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

NsPerElement summarize(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  NsPerElement s;
  s.min = samples.front();
  s.median = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

std::vector<BenchRecord> bench_forward_suite(std::span<const ActivationSpec> specs, std::size_t n, int reps,
                                             int float_width, const BenchOptions& options) {
  if (specs.empty()) throw std::invalid_argument("bench_forward_suite needs at least one kernel");
  if (n < kMinBenchElements) throw std::invalid_argument(fmt::format("bench_forward needs n >= {}", kMinBenchElements));
  if (reps < kMinBenchReps) throw std::invalid_argument(fmt::format("bench_forward needs reps >= {}", kMinBenchReps));
  if (float_width == 32) return bench_suite_typed<float>(specs, n, reps, options);
  if (float_width == 64) return bench_suite_typed<double>(specs, n, reps, options);
  throw std::invalid_argument("float_width must be 32 or 64");
}

BenchRecord bench_forward(const ActivationSpec& spec, std::size_t n, int reps, int float_width,
                          const BenchOptions& options) {
  return bench_forward_suite(std::span<const ActivationSpec>(&spec, 1), n, reps, float_width, options).front();
}

BenchRecord bench_train_step(const ActivationSpec& spec, std::span<const std::size_t> widths, std::size_t batch,
                             int reps, const BenchOptions& options) {
  if (reps < kMinBenchReps) throw std::invalid_argument(fmt::format("bench_train_step needs reps >= {}", kMinBenchReps));
  if (batch == 0) throw std::invalid_argument("batch must be positive");
  MlpModel model = init_mlp(widths, spec, options.seed);
  Rng rng(derive_seed(options.seed, {1}));
  Tensor x(Shape{batch, widths.front()});
  for (double& v : x.values()) v = rng.normal();
  std::vector<int> labels(batch);
  for (auto& y : labels) y = static_cast<int>(rng.below(widths.back()));
  TrainConfig config;

  auto step = [&] {
    auto lg = loss_and_gradients(model, x, labels);
    sgd_step(model, lg.grads, config);
    return lg.forward.loss;
  };
  double checksum = 0.0;
  for (int w = 0; w < options.warmup; ++w) checksum += step();
  std::vector<double> per_sample;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    checksum += step();
    const auto t1 = Clock::now();
    per_sample.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(batch));
  }

  BenchRecord rec;
  rec.kernel = "train_step:" + to_string(spec);
  rec.n_elements = batch;
  rec.reps = reps;
  rec.float_width = 64;
  rec.ns_per_element = summarize(std::move(per_sample));
  rec.throughput_gelem_per_s = 1.0 / rec.ns_per_element.median;
  rec.checksum = checksum;
  return rec;
}

std::string bench_csv_header() { return "kernel,n,reps,min_ns,median_ns,mean_ns,p95_ns,gelem_s,float_width"; }

std::string to_csv_row(const BenchRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", r.kernel, r.n_elements, r.reps, r.ns_per_element.min,
                     r.ns_per_element.median, r.ns_per_element.mean, r.ns_per_element.p95, r.throughput_gelem_per_s,
                     r.float_width);
}

std::string to_json(const BenchRecord& r) {
  nlohmann::json j;
  j["kernel"] = r.kernel;
  j["n"] = r.n_elements;
  j["reps"] = r.reps;
  j["min_ns"] = r.ns_per_element.min;
  j["median_ns"] = r.ns_per_element.median;
  j["mean_ns"] = r.ns_per_element.mean;
  j["p95_ns"] = r.ns_per_element.p95;
  j["gelem_s"] = r.throughput_gelem_per_s;
  j["float_width"] = r.float_width;
  j["checksum"] = r.checksum;
  return j.dump();
}

}  // namespace helu
