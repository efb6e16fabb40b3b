#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "imgspace/data.hpp"

namespace imgspace::noise {

enum class NoiseKind { gaussian, uniform, solid, mixed };
std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

// Parameter grid sampled per image by NoiseKind::mixed.
struct MixedGrid {
  std::vector<double> means{64.0, 127.0, 191.0};
  std::vector<double> stds{30.0, 70.0, 110.0};
  std::vector<unsigned> scales{0, 1, 2};
};

// `scale` s makes pixels constant on 2^s x 2^s blocks: noise is drawn at
// (w / 2^s) x (h / 2^s) and upsampled by nearest neighbour.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::uniform;
  double mean = 127.0;
  double std = 70.0;
  unsigned scale = 0;
  double rate = 1.0;  // noise images per legitimate training image
  std::uint64_t seed = 0;
  MixedGrid grid;

  // Throws ConfigError; dims bound the admissible scale.
  void validate(const data::Dims& dims) const;
};

// Noise sample ids start here so they never collide with dataset ids.
inline constexpr data::SampleId kNoiseIdBase = 1'000'000'000ULL;

// floor(rate * legit_count)
std::size_t noise_count(double rate, std::size_t legit_count);

// `count` images with a single category "noise" (label 0). Image i depends
// only on (spec.seed, first_id + i), so any index range can be generated
// independently.
data::LabeledDataset generate(const NoiseSpec& spec, std::size_t count,
                              const data::Dims& dims,
                              data::SampleId first_id = kNoiseIdBase);

}  // namespace imgspace::noise
