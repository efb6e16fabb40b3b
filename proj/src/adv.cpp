#include "imgspace/adv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imgspace/errors.hpp"
#include "imgspace/trace.hpp"

namespace imgspace::adv {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw ConfigError("attack epsilon must be >= 0");
  if (!(epsilon <= 1.0)) throw ConfigError("attack epsilon must be <= 1");
}

namespace {

double perturb(double x, double eps, double grad) {
  if (grad == 0.0 || eps == 0.0) return x;
  double y = std::clamp(grad > 0.0 ? x + eps : x - eps, 0.0, 1.0);
  while (std::abs(y - x) > eps) y = std::nextafter(y, x);
  return y;
}

}  // namespace

Tensor fgsm(const nn::Network& net, const Tensor& batch,
            std::span<const std::uint32_t> labels, const AttackConfig& cfg) {
  cfg.validate();
  for (double v : batch.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("fgsm input must be normalized to [0, 1]");
  }
  if (cfg.epsilon == 0.0) return batch;
  const Tensor grad = net.input_gradient(batch, labels);
  Tensor out = batch;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = perturb(batch[i], cfg.epsilon, grad[i]);
  }
  return out;
}

Robustness eval_robustness(const nn::Network& net, const data::LabeledDataset& test,
                           const AttackConfig& cfg, std::size_t batch_size) {
  cfg.validate();
  if (test.empty()) throw ConfigError("robustness evaluation needs a non-empty test set");
  std::size_t clean_ok = 0, adv_ok = 0;
  std::vector<std::size_t> idx;
  std::vector<std::uint32_t> labels;
  Tensor x;
  auto count_correct = [&](const Tensor& probs) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (trace::argmax(probs.row(i)) == labels[i]) ++ok;
    }
    return ok;
  };
  for (std::size_t start = 0; start < test.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, test.size());
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    labels.assign(test.labels().begin() + static_cast<std::ptrdiff_t>(start),
                  test.labels().begin() + static_cast<std::ptrdiff_t>(end));
    test.gather(idx, x);
    clean_ok += count_correct(net.forward(x));
    adv_ok += count_correct(net.forward(fgsm(net, x, labels, cfg)));
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(clean_ok) / n, static_cast<double>(adv_ok) / n};
}

}  // namespace imgspace::adv
