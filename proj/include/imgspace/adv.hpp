#pragma once

#include <cstdint>
#include <span>

#include "imgspace/data.hpp"
#include "imgspace/nn.hpp"

namespace imgspace::adv {

// Max-norm budget in normalized pixel units; outputs are clipped to [0, 1].
struct AttackConfig {
  double epsilon = 0.0;

  void validate() const;  // 0 <= epsilon <= 1
};

// x' = clip(x + eps * sign(d loss / d x), 0, 1) with sign(0) = 0. Each entry
// is nudged toward x when rounding would otherwise put |x' - x| above eps.
Tensor fgsm(const nn::Network& net, const Tensor& batch,
            std::span<const std::uint32_t> labels, const AttackConfig& cfg);

struct Robustness {
  double legitimate = 0.0;   // A_leg
  double adversarial = 0.0;  // A_adv
};

Robustness eval_robustness(const nn::Network& net, const data::LabeledDataset& test,
                           const AttackConfig& cfg, std::size_t batch_size = 256);

}  // namespace imgspace::adv
