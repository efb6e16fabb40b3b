#include <algorithm>
#include <cmath>
#include <sstream>

#include "imgspace/errors.hpp"
#include "imgspace/kernels.hpp"
#include "imgspace/nn.hpp"

namespace imgspace::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (LayerKind k : {LayerKind::dense, LayerKind::conv, LayerKind::relu,
                      LayerKind::maxpool, LayerKind::flatten,
                      LayerKind::softmax}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown layer type '" + name + "'");
}

LayerSpec LayerSpec::dense(std::size_t out, std::size_t in) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.out = out;
  s.in = in;
  return s;
}

LayerSpec LayerSpec::conv(std::size_t kernel, std::size_t channels,
                          std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.kernel = kernel;
  s.channels = channels;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(std::size_t window) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.window = window;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::softmax;
  return s;
}

NetworkSpec cifar_small(std::size_t categories, std::uint64_t seed) {
  NetworkSpec spec;
  spec.input = {3, 32, 32};
  spec.categories = categories;
  spec.init_seed = seed;
  spec.layers = {LayerSpec::conv(5, 32),  LayerSpec::relu(),
                 LayerSpec::maxpool(2),   LayerSpec::conv(5, 64),
                 LayerSpec::relu(),       LayerSpec::maxpool(2),
                 LayerSpec::dense(64),    LayerSpec::relu(),
                 LayerSpec::dense(categories), LayerSpec::softmax()};
  return spec;
}

NetworkSpec fast_mlp(Shape input, std::size_t categories, std::uint64_t seed,
                     std::size_t hidden) {
  NetworkSpec spec;
  spec.input = std::move(input);
  spec.categories = categories;
  spec.init_seed = seed;
  spec.layers = {LayerSpec::flatten(), LayerSpec::dense(hidden),
                 LayerSpec::relu(), LayerSpec::dense(categories),
                 LayerSpec::softmax()};
  return spec;
}

NetworkSpec regressor_mlp(std::vector<std::size_t> hidden, std::uint64_t seed) {
  NetworkSpec spec;
  spec.input = {1};
  spec.categories = 1;
  spec.init_seed = seed;
  for (std::size_t h : hidden) {
    spec.layers.push_back(LayerSpec::dense(h));
    spec.layers.push_back(LayerSpec::relu());
  }
  spec.layers.push_back(LayerSpec::dense(1));
  return spec;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be a finite real > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("train.momentum must lie in [0, 1)");
  }
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
}

// ---------------------------------------------------------------------------

struct Network::Cache {
  std::vector<Tensor> acts;  // acts[s] is the input of step s; back() = output
  std::vector<std::vector<std::size_t>> argmax;
};

namespace {

std::string layer_label(std::size_t i, LayerKind kind) {
  return "layer " + std::to_string(i) + " (" + to_string(kind) + ")";
}

Shape with_batch(std::size_t batch, const Shape& sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  if (spec_.input.empty() || element_count(spec_.input) == 0) {
    throw ConfigError("network input shape must be non-empty");
  }
  if (spec_.layers.empty()) throw ConfigError("network has no layers");

  Shape shape = spec_.input;
  Rng rng = make_rng(spec_.init_seed, 0);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    Step step{l, shape, {}, params_.size()};
    switch (l.kind) {
      case LayerKind::dense: {
        const std::size_t in = element_count(shape);
        if (l.out == 0) throw ConfigError(layer_label(i, l.kind) + ": out must be positive");
        if (l.in != 0 && l.in != in) {
          throw ConfigError(layer_label(i, l.kind) + ": declared in=" +
                            std::to_string(l.in) + " but previous layer yields " +
                            std::to_string(in));
        }
        step.out_shape = {l.out};
        const double limit = std::sqrt(6.0 / static_cast<double>(in + l.out));
        Tensor w({l.out, in});
        for (double& v : w.values()) v = limit * (2.0 * uniform01(rng) - 1.0);
        params_.push_back(std::move(w));
        params_.emplace_back(Shape{l.out});
        break;
      }
      case LayerKind::conv: {
        if (shape.size() != 3) {
          throw ConfigError(layer_label(i, l.kind) + ": expects CxHxW input, got " +
                            imgspace::to_string(shape));
        }
        if (l.kernel == 0 || l.channels == 0 || l.stride == 0) {
          throw ConfigError(layer_label(i, l.kind) +
                            ": kernel, channels and stride must be positive");
        }
        if (l.kernel > shape[1] || l.kernel > shape[2]) {
          throw ConfigError(layer_label(i, l.kind) + ": kernel larger than input " +
                            imgspace::to_string(shape));
        }
        const kernels::ConvGeometry g{1, shape[0], shape[1], shape[2],
                                      l.channels, l.kernel, l.stride};
        step.out_shape = {l.channels, g.out_height(), g.out_width()};
        const std::size_t kk = l.kernel * l.kernel;
        const double limit =
            std::sqrt(6.0 / static_cast<double>(shape[0] * kk + l.channels * kk));
        Tensor w({l.channels, shape[0], l.kernel, l.kernel});
        for (double& v : w.values()) v = limit * (2.0 * uniform01(rng) - 1.0);
        params_.push_back(std::move(w));
        params_.emplace_back(Shape{l.channels});
        break;
      }
      case LayerKind::relu:
        step.out_shape = shape;
        break;
      case LayerKind::maxpool:
        if (shape.size() != 3) {
          throw ConfigError(layer_label(i, l.kind) + ": expects CxHxW input, got " +
                            imgspace::to_string(shape));
        }
        if (l.window == 0 || l.window > shape[1] || l.window > shape[2]) {
          throw ConfigError(layer_label(i, l.kind) + ": window must be in [1, " +
                            std::to_string(std::min(shape[1], shape[2])) + "]");
        }
        step.out_shape = {shape[0], shape[1] / l.window, shape[2] / l.window};
        break;
      case LayerKind::flatten:
        step.out_shape = {element_count(shape)};
        break;
      case LayerKind::softmax:
        if (i + 1 != spec_.layers.size()) {
          throw ConfigError(layer_label(i, l.kind) + ": softmax must be the terminal layer");
        }
        if (shape.size() != 1) {
          throw ConfigError(layer_label(i, l.kind) + ": softmax needs a flat input");
        }
        step.out_shape = shape;
        classifier_ = true;
        break;
    }
    shape = step.out_shape;
    steps_.push_back(std::move(step));
  }
  if (shape.size() != 1 || shape[0] != spec_.categories) {
    throw ConfigError("network output " + imgspace::to_string(shape) +
                      " does not match category count " +
                      std::to_string(spec_.categories));
  }
  if (classifier_ && spec_.categories < 2) {
    throw ConfigError("a classifier needs at least 2 categories");
  }
}

std::vector<std::string> Network::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto kind = steps_[i].layer.kind;
    if (kind == LayerKind::dense || kind == LayerKind::conv) {
      names.push_back("layer" + std::to_string(i) + ".weight");
      names.push_back("layer" + std::to_string(i) + ".bias");
    }
  }
  return names;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::size_t Network::batch_of(const Tensor& batch) const {
  const Shape& s = batch.shape();
  if (s.size() != spec_.input.size() + 1 ||
      !std::equal(spec_.input.begin(), spec_.input.end(), s.begin() + 1)) {
    throw ConfigError("batch shape " + imgspace::to_string(s) +
                      " does not match network input [B]x" +
                      imgspace::to_string(spec_.input));
  }
  return s[0];
}

void Network::forward_cached(const Tensor& batch, Cache& cache) const {
  const std::size_t n = batch_of(batch);
  cache.acts.clear();
  cache.acts.reserve(steps_.size() + 1);
  cache.acts.push_back(batch);
  cache.argmax.assign(steps_.size(), {});

  for (std::size_t s = 0; s < steps_.size(); ++s) {
    const Step& step = steps_[s];
    const Tensor& x = cache.acts.back();
    Tensor y(with_batch(n, step.out_shape));
    switch (step.layer.kind) {
      case LayerKind::dense: {
        const kernels::DenseGeometry g{n, element_count(step.in_shape),
                                       step.layer.out};
        kernels::dense_forward(g, x.values(), params_[step.first_param].values(),
                               params_[step.first_param + 1].values(), y.values());
        break;
      }
      case LayerKind::conv: {
        const kernels::ConvGeometry g{n, step.in_shape[0], step.in_shape[1],
                                      step.in_shape[2], step.layer.channels,
                                      step.layer.kernel, step.layer.stride};
        kernels::conv_forward(g, x.values(), params_[step.first_param].values(),
                              params_[step.first_param + 1].values(), y.values());
        break;
      }
      case LayerKind::relu:
        kernels::relu_forward(x.values(), y.values());
        break;
      case LayerKind::maxpool: {
        const kernels::PoolGeometry g{n, step.in_shape[0], step.in_shape[1],
                                      step.in_shape[2], step.layer.window};
        cache.argmax[s].resize(y.size());
        kernels::maxpool_forward(g, x.values(), y.values(), cache.argmax[s]);
        break;
      }
      case LayerKind::flatten:
        std::copy(x.values().begin(), x.values().end(), y.values().begin());
        break;
      case LayerKind::softmax:
        kernels::softmax_rows(n, step.in_shape[0], x.values(), y.values());
        break;
    }
    cache.acts.push_back(std::move(y));
  }
}

void Network::backward(Cache& cache, Tensor grad, bool want_params,
                       bool want_input, std::vector<Tensor>* param_grads,
                       Tensor* input_grad) const {
  // grad is d(loss)/d(acts[last + 1]) where last is the final step walked.
  std::size_t last = steps_.size();
  if (classifier_) --last;  // cross-entropy is fused with the softmax
  const std::size_t n = cache.acts.front().dim(0);

  if (want_params) {
    param_grads->clear();
    for (const auto& p : params_) param_grads->emplace_back(p.shape());
  }

  // Input gradients below the first parametric layer are only needed when
  // the caller asked for d(loss)/d(input).
  std::size_t stop = 0;
  if (!want_input) {
    while (stop < last && steps_[stop].layer.kind != LayerKind::dense &&
           steps_[stop].layer.kind != LayerKind::conv) {
      ++stop;
    }
  }

  for (std::size_t s = last; s-- > stop;) {
    const Step& step = steps_[s];
    const Tensor& x = cache.acts[s];
    const bool need_dx = s > stop || want_input;
    Tensor dx;
    if (need_dx) dx = Tensor(x.shape());
    switch (step.layer.kind) {
      case LayerKind::dense: {
        const kernels::DenseGeometry g{n, element_count(step.in_shape),
                                       step.layer.out};
        if (want_params) {
          kernels::dense_backward_params(g, x.values(), grad.values(),
                                         (*param_grads)[step.first_param].values(),
                                         (*param_grads)[step.first_param + 1].values());
        }
        if (need_dx) {
          kernels::dense_backward_input(g, grad.values(),
                                        params_[step.first_param].values(),
                                        dx.values());
        }
        break;
      }
      case LayerKind::conv: {
        const kernels::ConvGeometry g{n, step.in_shape[0], step.in_shape[1],
                                      step.in_shape[2], step.layer.channels,
                                      step.layer.kernel, step.layer.stride};
        if (want_params) {
          kernels::conv_backward_params(g, x.values(), grad.values(),
                                        (*param_grads)[step.first_param].values(),
                                        (*param_grads)[step.first_param + 1].values());
        }
        if (need_dx) {
          kernels::conv_backward_input(g, grad.values(),
                                       params_[step.first_param].values(),
                                       dx.values());
        }
        break;
      }
      case LayerKind::relu:
        if (need_dx) kernels::relu_backward(x.values(), grad.values(), dx.values());
        break;
      case LayerKind::maxpool: {
        const kernels::PoolGeometry g{n, step.in_shape[0], step.in_shape[1],
                                      step.in_shape[2], step.layer.window};
        if (need_dx) {
          kernels::maxpool_backward(g, grad.values(), cache.argmax[s], dx.values());
        }
        break;
      }
      case LayerKind::flatten:
        if (need_dx) std::copy(grad.values().begin(), grad.values().end(), dx.values().begin());
        break;
      case LayerKind::softmax:
        // Never walked: the softmax is fused into the cross-entropy gradient.
        break;
    }
    if (need_dx) grad = std::move(dx);
  }
  if (want_input) *input_grad = std::move(grad);
}

void Network::check_finite(const Cache& cache, double loss) const {
  if (std::isfinite(loss)) return;
  for (std::size_t s = 0; s < steps_.size(); ++s) {
    if (!cache.acts[s + 1].all_finite()) {
      throw NumericalError("non-finite loss: " +
                               layer_label(s, steps_[s].layer.kind) +
                               " produced a non-finite output",
                           s);
    }
  }
  throw NumericalError("non-finite loss at the loss layer", steps_.size());
}

namespace {

// Mean cross-entropy from the softmax input (logits) and the fused gradient
// (p - onehot) / B with respect to those logits.
double cross_entropy(const Tensor& logits, const Tensor& probs,
                     std::span<const std::uint32_t> labels, Tensor* grad) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) {
    throw ConfigError("expected " + std::to_string(n) + " labels, got " +
                      std::to_string(labels.size()));
  }
  double total = 0.0;
  if (grad) *grad = Tensor(logits.shape());
  for (std::size_t b = 0; b < n; ++b) {
    if (labels[b] >= c) {
      throw ConfigError("label " + std::to_string(labels[b]) +
                        " out of range for " + std::to_string(c) + " categories");
    }
    const double* z = logits.data() + b * c;
    const double m = *std::max_element(z, z + c);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - m);
    total += m + std::log(sum) - z[labels[b]];
    if (grad) {
      for (std::size_t j = 0; j < c; ++j) {
        (*grad)[b * c + j] = (probs[b * c + j] - (j == labels[b] ? 1.0 : 0.0)) /
                             static_cast<double>(n);
      }
    }
  }
  return total / static_cast<double>(n);
}

double squared_error(const Tensor& out, std::span<const double> targets,
                     Tensor* grad) {
  if (targets.size() != out.size()) {
    throw ConfigError("expected " + std::to_string(out.size()) +
                      " regression targets, got " + std::to_string(targets.size()));
  }
  const double m = static_cast<double>(out.size());
  double total = 0.0;
  if (grad) *grad = Tensor(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out[i] - targets[i];
    total += d * d;
    if (grad) (*grad)[i] = 2.0 * d / m;
  }
  return total / m;
}

}  // namespace

Tensor Network::forward(const Tensor& batch) const {
  Cache cache;
  forward_cached(batch, cache);
  return std::move(cache.acts.back());
}

LossGradients Network::loss_and_gradients(
    const Tensor& batch, std::span<const std::uint32_t> labels) const {
  if (!classifier_) throw ConfigError("category labels given to a regressor");
  Cache cache;
  forward_cached(batch, cache);
  Tensor grad;
  LossGradients out;
  const std::size_t k = cache.acts.size();
  out.loss = cross_entropy(cache.acts[k - 2], cache.acts[k - 1], labels, &grad);
  check_finite(cache, out.loss);
  backward(cache, std::move(grad), true, false, &out.gradients, nullptr);
  return out;
}

LossGradients Network::loss_and_gradients(
    const Tensor& batch, std::span<const double> targets) const {
  if (classifier_) throw ConfigError("regression targets given to a classifier");
  Cache cache;
  forward_cached(batch, cache);
  Tensor grad;
  LossGradients out;
  out.loss = squared_error(cache.acts.back(), targets, &grad);
  check_finite(cache, out.loss);
  backward(cache, std::move(grad), true, false, &out.gradients, nullptr);
  return out;
}

double Network::loss(const Tensor& batch,
                     std::span<const std::uint32_t> labels) const {
  if (!classifier_) throw ConfigError("category labels given to a regressor");
  Cache cache;
  forward_cached(batch, cache);
  const std::size_t k = cache.acts.size();
  const double l = cross_entropy(cache.acts[k - 2], cache.acts[k - 1], labels, nullptr);
  check_finite(cache, l);
  return l;
}

double Network::loss(const Tensor& batch, std::span<const double> targets) const {
  if (classifier_) throw ConfigError("regression targets given to a classifier");
  Cache cache;
  forward_cached(batch, cache);
  const double l = squared_error(cache.acts.back(), targets, nullptr);
  check_finite(cache, l);
  return l;
}

Tensor Network::input_gradient(const Tensor& batch,
                               std::span<const std::uint32_t> labels) const {
  if (!classifier_) throw ConfigError("category labels given to a regressor");
  Cache cache;
  forward_cached(batch, cache);
  Tensor grad;
  const std::size_t k = cache.acts.size();
  const double l = cross_entropy(cache.acts[k - 2], cache.acts[k - 1], labels, &grad);
  check_finite(cache, l);
  Tensor dx;
  backward(cache, std::move(grad), false, true, nullptr, &dx);
  return dx;
}

Tensor Network::input_gradient(const Tensor& batch,
                               std::span<const double> targets) const {
  if (classifier_) throw ConfigError("regression targets given to a classifier");
  Cache cache;
  forward_cached(batch, cache);
  Tensor grad;
  const double l = squared_error(cache.acts.back(), targets, &grad);
  check_finite(cache, l);
  Tensor dx;
  backward(cache, std::move(grad), false, true, nullptr, &dx);
  return dx;
}

}  // namespace imgspace::nn
