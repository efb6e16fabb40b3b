#include <algorithm>
#include <numeric>

#include "imgspace/errors.hpp"
#include "imgspace/nn.hpp"

namespace imgspace::nn {

SgdOptimizer::SgdOptimizer(const Network& net, double learning_rate,
                           double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  for (const auto& p : net.parameters()) velocity_.emplace_back(p.shape());
}

void SgdOptimizer::step(Network& net, const std::vector<Tensor>& gradients) {
  auto& params = net.parameters();
  if (gradients.size() != params.size()) {
    throw ConfigError("gradient count " + std::to_string(gradients.size()) +
                      " does not match parameter count " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (gradients[i].shape() != params[i].shape()) {
      throw ConfigError("gradient " + std::to_string(i) + " has shape " +
                        imgspace::to_string(gradients[i].shape()) + ", parameter has " +
                        imgspace::to_string(params[i].shape()));
    }
    auto p = params[i].values();
    auto v = velocity_[i].values();
    auto g = gradients[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = momentum_ * v[j] - learning_rate_ * g[j];
      // Skipping zero updates keeps untouched parameters bitwise identical
      // (p + 0.0 would turn -0.0 into +0.0).
      if (v[j] != 0.0) p[j] += v[j];
    }
  }
}

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  return order;
}

namespace {

template <typename Source, typename SliceTargets>
double run_epoch(Network& net, SgdOptimizer& opt, const Source& data,
                 std::size_t batch_size, Rng& rng, SliceTargets slice) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (data.count == 0) return 0.0;
  const auto order = shuffled_order(data.count, rng);
  Tensor inputs;
  double weighted = 0.0;
  for (std::size_t start = 0; start < data.count; start += batch_size) {
    const std::size_t end = std::min(start + batch_size, data.count);
    std::span<const std::size_t> idx(order.data() + start, end - start);
    data.gather(idx, inputs);
    auto lg = slice(net, inputs, idx);
    opt.step(net, lg.gradients);
    weighted += lg.loss * static_cast<double>(idx.size());
  }
  return weighted / static_cast<double>(data.count);
}

}  // namespace

double train_epoch(Network& net, SgdOptimizer& opt,
                   const ClassificationSource& data, std::size_t batch_size,
                   Rng& rng) {
  if (data.labels.size() != data.count) {
    throw ConfigError("label count does not match sample count");
  }
  std::vector<std::uint32_t> labels;
  return run_epoch(net, opt, data, batch_size, rng,
                   [&](const Network& n, const Tensor& x,
                       std::span<const std::size_t> idx) {
                     labels.resize(idx.size());
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       labels[i] = data.labels[idx[i]];
                     }
                     return n.loss_and_gradients(x, labels);
                   });
}

double train_epoch(Network& net, SgdOptimizer& opt,
                   const RegressionSource& data, std::size_t batch_size,
                   Rng& rng) {
  const std::size_t width = net.output_width();
  if (data.targets.size() != data.count * width) {
    throw ConfigError("target count does not match sample count");
  }
  std::vector<double> targets;
  return run_epoch(net, opt, data, batch_size, rng,
                   [&](const Network& n, const Tensor& x,
                       std::span<const std::size_t> idx) {
                     targets.resize(idx.size() * width);
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       std::copy_n(data.targets.begin() + idx[i] * width, width,
                                   targets.begin() + i * width);
                     }
                     return n.loss_and_gradients(x, targets);
                   });
}

Tensor predict(const Network& net, std::size_t count, const Gather& gather,
               std::size_t batch_size) {
  const std::size_t width = net.output_width();
  Tensor out({count, width});
  std::vector<std::size_t> idx;
  Tensor inputs;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(start + batch_size, count);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    gather(idx, inputs);
    const Tensor y = net.forward(inputs);
    std::copy(y.values().begin(), y.values().end(),
              out.values().begin() + start * width);
  }
  return out;
}

}  // namespace imgspace::nn
