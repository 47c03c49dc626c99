#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "helu/activations.hpp"
#include "helu/data.hpp"
#include "helu/diagnostics.hpp"
#include "helu/tensor.hpp"

namespace helu {

struct LinearLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
  Tensor weight_velocity;
  Tensor bias_velocity;

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
};

/// Fully connected classifier. The activation follows every hidden layer,
/// never the output layer.
struct MlpModel {
  std::vector<LinearLayer> layers;
  ActivationSpec activation;

  /// Widths [input, hidden..., classes].
  std::vector<std::size_t> widths() const;
  std::size_t hidden_layers() const { return layers.size() - 1; }
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Xavier-uniform weights from Rng(seed), zero biases and velocities.
/// `widths` needs at least three entries (one hidden layer).
MlpModel init_mlp(std::span<const std::size_t> widths, const ActivationSpec& activation, std::uint64_t seed);

struct ForwardResult {
  double loss = 0.0;
  Tensor logits;
  std::vector<Tensor> pre_activations;  // one [b x width] per hidden layer
};

/// Logits and hidden pre-activations without a loss.
ForwardResult forward_pass(const MlpModel& model, const Tensor& x);

/// Mean softmax cross-entropy. Throws DataError on an out-of-range label.
ForwardResult forward_loss(const MlpModel& model, const Tensor& x, std::span<const int> labels);

struct Gradients {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;
};

struct LossAndGradients {
  ForwardResult forward;
  Gradients grads;
};

/// One forward pass recorded on a fresh tape, then backprop.
LossAndGradients loss_and_gradients(const MlpModel& model, const Tensor& x, std::span<const int> labels);

/// v <- momentum*v + g + weight_decay*w ; w <- w - lr*v
void sgd_step(MlpModel& model, const Gradients& grads, const TrainConfig& config);

/// Argmax accuracy; ties resolve to the lowest class index.
double evaluate(const MlpModel& model, const Dataset& data);

/// Hidden pre-activations over a whole dataset, evaluated in chunks.
std::vector<Tensor> collect_pre_activations(const MlpModel& model, const Tensor& features);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double test_acc = std::numeric_limits<double>::quiet_NaN();
  double dead_fraction = 0.0;
  double band_fraction = 0.0;
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  std::vector<DeadNeuronReport> dead_reports;
};

struct TrainOptions {
  const Dataset* eval = nullptr;
  /// Added to the epoch index for shuffling and reporting, so a run may be
  /// split across several train() calls without repeating batch orders.
  int epoch_offset = 0;
  /// Called after every epoch's diagnostics.
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Seeded mini-batch training. Batch order for epoch e comes from
/// Rng(derive_seed(config.seed, {e})), so it is independent of the activation.
/// Diagnostics (dead and band fractions) are measured on the training set.
TrainingTrace train(MlpModel& model, const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});

/// "HELU1" then per tensor: u32 rank, u64 dims, little-endian f64 data.
/// Tensors are written weight0, bias0, weight1, bias1, ...
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path, const ActivationSpec& activation);

}  // namespace helu
