#include "helu/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "helu/autograd.hpp"
#include "helu/io.hpp"
#include "helu/rng.hpp"

namespace helu {

std::vector<std::size_t> MlpModel::widths() const {
  std::vector<std::size_t> w;
  if (layers.empty()) return w;
  w.push_back(layers.front().in());
  for (const auto& l : layers) w.push_back(l.out());
  return w;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
}

MlpModel init_mlp(std::span<const std::size_t> widths, const ActivationSpec& activation, std::uint64_t seed) {
  if (widths.size() < 3) throw std::invalid_argument("an MLP needs input, at least one hidden, and output widths");
  for (auto w : widths)
    if (w == 0) throw std::invalid_argument("layer widths must be positive");
  if (activation.alpha < 0.0) throw DomainError("activation alpha must be >= 0");

  Rng rng(seed);
  MlpModel model;
  model.activation = activation;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    LinearLayer layer;
    layer.weight = Tensor(Shape{out, in});
    for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
    layer.bias = Tensor(Shape{out}, 0.0);
    layer.weight_velocity = Tensor(Shape{out, in}, 0.0);
    layer.bias_velocity = Tensor(Shape{out}, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

Tensor affine(const Tensor& x, const LinearLayer& layer) {
  return add_row_vector(matmul(x, transpose(layer.weight)), layer.bias);
}

}  // namespace

ForwardResult forward_pass(const MlpModel& model, const Tensor& x) {
  ForwardResult result;
  Tensor h = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Tensor z = affine(h, model.layers[l]);
    if (l + 1 == model.layers.size()) {
      result.logits = std::move(z);
    } else {
      h = forward(model.activation, z);
      result.pre_activations.push_back(std::move(z));
    }
  }
  return result;
}

ForwardResult forward_loss(const MlpModel& model, const Tensor& x, std::span<const int> labels) {
  ForwardResult result = forward_pass(model, x);
  const std::size_t k = result.logits.cols();
  if (labels.size() != result.logits.rows()) {
    throw DimensionError(fmt::format("{} labels for a batch of {}", labels.size(), result.logits.rows()));
  }
  const Tensor logp = autograd::log_softmax_rows(result.logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw DataError(fmt::format("label {} outside class range [0, {})", labels[i], k));
    }
    loss -= logp.at(i, static_cast<std::size_t>(labels[i]));
  }
  result.loss = loss / static_cast<double>(labels.size());
  return result;
}

LossAndGradients loss_and_gradients(const MlpModel& model, const Tensor& x, std::span<const int> labels) {
  autograd::Tape tape;
  std::vector<autograd::NodeId> weights, biases, pre;
  autograd::NodeId h = tape.leaf(x, "input");
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    weights.push_back(tape.leaf(model.layers[l].weight, "weight"));
    biases.push_back(tape.leaf(model.layers[l].bias, "bias"));
    const auto z = autograd::linear(tape, h, weights.back(), biases.back());
    if (l + 1 == model.layers.size()) {
      h = z;
    } else {
      pre.push_back(z);
      h = autograd::activation(tape, model.activation, z);
    }
  }
  const auto logits = h;
  const auto loss = autograd::softmax_cross_entropy(tape, logits, std::vector<int>(labels.begin(), labels.end()));
  tape.backprop(loss);

  LossAndGradients out;
  out.forward.loss = tape.value(loss).item();
  out.forward.logits = tape.value(logits);
  for (auto id : pre) out.forward.pre_activations.push_back(tape.value(id));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    out.grads.weight.push_back(tape.grad(weights[l]));
    out.grads.bias.push_back(tape.grad(biases[l]));
  }
  return out;
}

void sgd_step(MlpModel& model, const Gradients& grads, const TrainConfig& config) {
  if (grads.weight.size() != model.layers.size() || grads.bias.size() != model.layers.size()) {
    throw DimensionError("gradient count does not match layer count");
  }
  auto update = [&](Tensor& param, Tensor& velocity, const Tensor& g) {
    require_same_shape(param, g, "sgd_step");
    auto w = param.values();
    auto v = velocity.values();
    auto d = g.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = config.momentum * v[i] + d[i] + config.weight_decay * w[i];
      w[i] -= config.learning_rate * v[i];
    }
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    update(layer.weight, layer.weight_velocity, grads.weight[l]);
    update(layer.bias, layer.bias_velocity, grads.bias[l]);
  }
}

namespace {

constexpr std::size_t kEvalChunk = 1024;

std::size_t argmax_row(const Tensor& logits, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.cols(); ++c)
    if (logits.at(r, c) > logits.at(r, best)) best = c;
  return best;
}

}  // namespace

double evaluate(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("evaluate on an empty dataset");
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    const std::size_t end = std::min(data.size(), start + kEvalChunk);
    const Tensor logits = forward_pass(model, slice_rows(data.features, start, end)).logits;
    for (std::size_t r = 0; r < logits.rows(); ++r)
      if (argmax_row(logits, r) == static_cast<std::size_t>(data.labels[start + r])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<Tensor> collect_pre_activations(const MlpModel& model, const Tensor& features) {
  const std::size_t n = features.rows();
  std::vector<std::vector<double>> buffers(model.hidden_layers());
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t end = std::min(n, start + kEvalChunk);
    auto pass = forward_pass(model, slice_rows(features, start, end));
    for (std::size_t l = 0; l < buffers.size(); ++l) {
      auto v = pass.pre_activations[l].values();
      buffers[l].insert(buffers[l].end(), v.begin(), v.end());
    }
  }
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < buffers.size(); ++l) {
    out.emplace_back(Shape{n, model.layers[l].out()}, std::move(buffers[l]));
  }
  return out;
}

TrainingTrace train(MlpModel& model, const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  data.validate();
  if (data.dim() != model.layers.front().in()) {
    throw DimensionError(fmt::format("dataset has {} features, model expects {}", data.dim(), model.layers.front().in()));
  }

  TrainingTrace trace;
  const std::size_t n = data.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  for (int e = 0; e < config.epochs; ++e) {
    const int epoch = options.epoch_offset + e;
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch)}));
    shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Dataset mb = data.subset(idx);
      auto step = loss_and_gradients(model, mb.features, mb.labels);
      loss_sum += step.forward.loss;
      ++batches;
      sgd_step(model, step.grads, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.train_acc = evaluate(model, data);
    if (options.eval != nullptr) rec.test_acc = evaluate(model, *options.eval);
    const auto pre = collect_pre_activations(model, data.features);
    auto report = dead_fraction(pre, model.activation, epoch);
    rec.dead_fraction = report.total_dead_fraction;
    rec.band_fraction = grad_mask_occupancy(pre, model.activation.kind == ActivationKind::HeLU ? model.activation.alpha : 0.0).band;
    trace.dead_reports.push_back(std::move(report));
    trace.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  return trace;
}

namespace {

constexpr char kMagic[5] = {'H', 'E', 'L', 'U', '1'};

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_tensor(std::string& out, const Tensor& t) {
  put_le(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_le(out, static_cast<std::uint64_t>(d));
  for (double v : t.values()) put_le(out, std::bit_cast<std::uint64_t>(v));
}

class ByteCursor {
 public:
  explicit ByteCursor(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename U>
  U get_le() {
    if (pos_ + sizeof(U) > bytes_.size()) throw DataError(fmt::format("checkpoint truncated at byte offset {}", pos_));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError(fmt::format("checkpoint truncated at byte offset {}", pos_));
    auto s = std::string_view(bytes_).substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

Tensor get_tensor(ByteCursor& in) {
  const std::size_t at = in.pos();
  const auto rank = in.get_le<std::uint32_t>();
  if (rank > 8) throw DataError(fmt::format("checkpoint tensor at byte offset {} has implausible rank {}", at, rank));
  Shape shape(rank);
  for (auto& d : shape) d = in.get_le<std::uint64_t>();
  std::vector<double> data(shape_size(shape));
  for (double& v : data) v = std::bit_cast<double>(in.get_le<std::uint64_t>());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  for (const auto& l : model.layers) {
    put_tensor(out, l.weight);
    put_tensor(out, l.bias);
  }
  write_file_atomic(path, out);
}

MlpModel load_checkpoint(const std::filesystem::path& path, const ActivationSpec& activation) {
  ByteCursor in(read_file(path));
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw DataError(fmt::format("{}: bad checkpoint magic at byte offset 0", path.string()));
  }
  MlpModel model;
  model.activation = activation;
  while (!in.done()) {
    LinearLayer layer;
    layer.weight = get_tensor(in);
    if (in.done()) throw DataError(fmt::format("{}: weight without bias at end of file", path.string()));
    layer.bias = get_tensor(in);
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 || layer.bias.size() != layer.weight.rows()) {
      throw DataError(fmt::format("{}: inconsistent layer {} shapes", path.string(), model.layers.size()));
    }
    if (!model.layers.empty() && model.layers.back().out() != layer.in()) {
      throw DataError(fmt::format("{}: layer {} does not chain", path.string(), model.layers.size()));
    }
    layer.weight_velocity = Tensor(layer.weight.shape(), 0.0);
    layer.bias_velocity = Tensor(layer.bias.shape(), 0.0);
    model.layers.push_back(std::move(layer));
  }
  if (model.layers.size() < 2) throw DataError(fmt::format("{}: checkpoint needs at least two layers", path.string()));
  return model;
}

}  // namespace helu
