#include <cmath>

#include "imgspace/data.hpp"
#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"

namespace imgspace::data {

double step_target(double x) { return x <= 0.5 ? 0.0 : 1.0; }

std::vector<StepSample> make_step_dataset(std::span<const StepInterval> spec,
                                          std::uint64_t seed) {
  if (spec.empty()) throw ConfigError("step dataset spec is empty");
  std::size_t total = 0;
  for (const auto& iv : spec) {
    if (!(iv.from >= 0.0 && iv.from < iv.to && iv.to <= 1.0)) {
      throw ConfigError("step interval [" + std::to_string(iv.from) + ", " +
                        std::to_string(iv.to) + ") must satisfy 0 <= from < to <= 1");
    }
    if (iv.count == 0) throw ConfigError("step interval count must be positive");
    total += iv.count;
  }
  std::vector<StepSample> out;
  out.reserve(total);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    Rng rng = make_rng(seed, k);
    const auto& iv = spec[k];
    for (std::size_t i = 0; i < iv.count; ++i) {
      double x = iv.from + (iv.to - iv.from) * uniform01(rng);
      if (x >= iv.to) x = std::nextafter(iv.to, iv.from);
      out.push_back({x, step_target(x)});
    }
  }
  return out;
}

}  // namespace imgspace::data
