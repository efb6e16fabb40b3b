#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imgspace/rng.hpp"
#include "imgspace/tensor.hpp"

namespace imgspace::nn {

enum class LayerKind { dense, conv, relu, maxpool, flatten, softmax };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;        // dense: optional, checked against the inferred width
  std::size_t out = 0;       // dense: output width
  std::size_t kernel = 0;    // conv
  std::size_t channels = 0;  // conv: output channels
  std::size_t stride = 1;    // conv
  std::size_t window = 0;    // maxpool

  static LayerSpec dense(std::size_t out, std::size_t in = 0);
  static LayerSpec conv(std::size_t kernel, std::size_t channels,
                        std::size_t stride = 1);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t window);
  static LayerSpec flatten();
  static LayerSpec softmax();
};

// Layer stack plus the per-sample input shape. A classifier ends in exactly
// one softmax; a regressor has none. `categories` is the output width.
struct NetworkSpec {
  std::vector<LayerSpec> layers;
  Shape input;
  std::size_t categories = 0;
  std::uint64_t init_seed = 0;
};

// conv 5x5x32 -> relu -> pool 2 -> conv 5x5x64 -> relu -> pool 2 -> dense 64
// -> relu -> dense C -> softmax, on 3x32x32 input.
NetworkSpec cifar_small(std::size_t categories, std::uint64_t seed);
// flatten -> dense hidden -> relu -> dense C -> softmax.
NetworkSpec fast_mlp(Shape input, std::size_t categories, std::uint64_t seed,
                     std::size_t hidden = 128);
// Scalar-in scalar-out ReLU MLP used for 1-D curve fitting.
NetworkSpec regressor_mlp(std::vector<std::size_t> hidden, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct LossGradients {
  double loss = 0.0;
  std::vector<Tensor> gradients;  // same order and shapes as parameters()
};

class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  bool is_classifier() const { return classifier_; }
  std::size_t output_width() const { return spec_.categories; }
  const Shape& input_shape() const { return spec_.input; }

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  // "layer<i>.weight" / "layer<i>.bias", aligned with parameters().
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  // batch has shape [B, input...]. Classifiers return probability rows.
  Tensor forward(const Tensor& batch) const;

  // Mean softmax cross-entropy over the batch.
  LossGradients loss_and_gradients(const Tensor& batch,
                                   std::span<const std::uint32_t> labels) const;
  // Mean squared error over every output entry; targets are [B, out] flat.
  LossGradients loss_and_gradients(const Tensor& batch,
                                   std::span<const double> targets) const;

  double loss(const Tensor& batch, std::span<const std::uint32_t> labels) const;
  double loss(const Tensor& batch, std::span<const double> targets) const;

  Tensor input_gradient(const Tensor& batch,
                        std::span<const std::uint32_t> labels) const;
  Tensor input_gradient(const Tensor& batch,
                        std::span<const double> targets) const;

 private:
  struct Step {
    LayerSpec layer;
    Shape in_shape;   // per sample
    Shape out_shape;  // per sample
    std::size_t first_param = 0;
  };
  struct Cache;

  void forward_cached(const Tensor& batch, Cache& cache) const;
  void backward(Cache& cache, Tensor grad_out, bool want_params,
                bool want_input, std::vector<Tensor>* param_grads,
                Tensor* input_grad) const;
  std::size_t batch_of(const Tensor& batch) const;
  void check_finite(const Cache& cache, double loss) const;

  NetworkSpec spec_;
  bool classifier_ = false;
  std::vector<Step> steps_;
  std::vector<Tensor> params_;
};

class SgdOptimizer {
 public:
  SgdOptimizer(const Network& net, double learning_rate, double momentum);
  explicit SgdOptimizer(const Network& net, const TrainConfig& config)
      : SgdOptimizer(net, config.learning_rate, config.momentum) {}

  // v <- momentum * v - lr * g;  p <- p + v
  void step(Network& net, const std::vector<Tensor>& gradients);

  double learning_rate() const { return learning_rate_; }
  double momentum() const { return momentum_; }

 private:
  double learning_rate_;
  double momentum_;
  std::vector<Tensor> velocity_;
};

// Fills `inputs` with the samples named by `indices`, shaped [n, input...].
using Gather = std::function<void(std::span<const std::size_t>, Tensor&)>;

struct ClassificationSource {
  std::size_t count = 0;
  Gather gather;
  std::span<const std::uint32_t> labels;
};

struct RegressionSource {
  std::size_t count = 0;
  Gather gather;
  std::span<const double> targets;  // count x output_width
};

// Fisher-Yates over [0, n) driven by rng.
std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng);

// One pass of mini-batch SGD in an rng-shuffled order. Returns the mean of
// the per-batch losses weighted by batch size.
double train_epoch(Network& net, SgdOptimizer& opt,
                   const ClassificationSource& data, std::size_t batch_size,
                   Rng& rng);
double train_epoch(Network& net, SgdOptimizer& opt,
                   const RegressionSource& data, std::size_t batch_size,
                   Rng& rng);

// Forward pass over the whole source in order; rows align with sample index.
Tensor predict(const Network& net, std::size_t count, const Gather& gather,
               std::size_t batch_size = 256);

// Flat little-endian doubles after a one-line text manifest of the shapes.
void save_parameters(const Network& net, const std::filesystem::path& path);
void load_parameters(Network& net, const std::filesystem::path& path);

}  // namespace imgspace::nn
