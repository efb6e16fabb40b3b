#include "imgspace/noise.hpp"

#include <algorithm>
#include <cmath>

#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"

namespace imgspace::noise {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::solid: return "solid";
    case NoiseKind::mixed: return "mixed";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  for (auto k : {NoiseKind::gaussian, NoiseKind::uniform, NoiseKind::solid,
                 NoiseKind::mixed}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown noise kind '" + name +
                    "' (expected gaussian, uniform, solid or mixed)");
}

namespace {

bool scale_fits(unsigned scale, const data::Dims& dims) {
  return scale < 31 && (std::size_t{1} << scale) <= std::min(dims.width, dims.height);
}

}  // namespace

void NoiseSpec::validate(const data::Dims& dims) const {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ConfigError("noise.rate must be a finite real > 0");
  }
  if (!std::isfinite(mean)) throw ConfigError("noise.mean must be finite");
  if (!(std >= 0.0) || !std::isfinite(std)) throw ConfigError("noise.std must be >= 0");
  if (!scale_fits(scale, dims)) {
    throw ConfigError("noise.scale " + std::to_string(scale) +
                      " exceeds log2(min(width, height)) for " +
                      std::to_string(dims.width) + "x" + std::to_string(dims.height));
  }
  if (kind == NoiseKind::mixed) {
    if (grid.means.empty() || grid.stds.empty() || grid.scales.empty()) {
      throw ConfigError("noise.grid entries must be non-empty for mixed noise");
    }
    for (double s : grid.stds) {
      if (!(s >= 0.0)) throw ConfigError("noise.grid.stds must be >= 0");
    }
    for (unsigned s : grid.scales) {
      if (!scale_fits(s, dims)) {
        throw ConfigError("noise.grid.scales entry " + std::to_string(s) + " too large");
      }
    }
  }
}

std::size_t noise_count(double rate, std::size_t legit_count) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(legit_count)));
}

namespace {

std::uint8_t gaussian_pixel(double mean, double std, Rng& rng) {
  const double v = mean + std * standard_normal(rng);
  return static_cast<std::uint8_t>(std::round(std::clamp(v, 0.0, 255.0)));
}

template <typename Draw>
void fill_blocks(data::Image& img, unsigned scale, Draw draw) {
  const auto& d = img.dims;
  const std::size_t block = std::size_t{1} << scale;
  const std::size_t lw = (d.width + block - 1) / block;
  const std::size_t lh = (d.height + block - 1) / block;
  std::vector<std::uint8_t> cells(lw * lh);
  for (std::size_t c = 0; c < d.channels; ++c) {
    for (auto& v : cells) v = draw();
    for (std::size_t y = 0; y < d.height; ++y) {
      for (std::size_t x = 0; x < d.width; ++x) {
        img.at(c, y, x) = cells[(y / block) * lw + x / block];
      }
    }
  }
}

data::Image render(const NoiseSpec& spec, const data::Dims& dims, Rng& rng) {
  data::Image img(dims);
  switch (spec.kind) {
    case NoiseKind::gaussian:
      fill_blocks(img, spec.scale, [&] { return gaussian_pixel(spec.mean, spec.std, rng); });
      break;
    case NoiseKind::uniform:
      fill_blocks(img, spec.scale,
                  [&] { return static_cast<std::uint8_t>(uniform_index(rng, 256)); });
      break;
    case NoiseKind::solid:
      // one intensity for every pixel and channel: max == min per image
      std::fill(img.pixels.begin(), img.pixels.end(),
                static_cast<std::uint8_t>(uniform_index(rng, 256)));
      break;
    case NoiseKind::mixed: {
      const auto& g = spec.grid;
      const double mean = g.means[uniform_index(rng, g.means.size())];
      const double std = g.stds[uniform_index(rng, g.stds.size())];
      const unsigned scale = g.scales[uniform_index(rng, g.scales.size())];
      fill_blocks(img, scale, [&] { return gaussian_pixel(mean, std, rng); });
      break;
    }
  }
  return img;
}

}  // namespace

data::LabeledDataset generate(const NoiseSpec& spec, std::size_t count,
                              const data::Dims& dims, data::SampleId first_id) {
  if (count == 0) throw ConfigError("noise count must be positive");
  spec.validate(dims);
  std::vector<data::Image> images(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng = make_rng(spec.seed, first_id + static_cast<std::size_t>(i));
    images[static_cast<std::size_t>(i)] = render(spec, dims, rng);
  }
  data::LabeledDataset ds(dims, {"noise"}, data::Provenance::noise);
  ds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ds.add(std::move(images[i]), 0, first_id + i);
  return ds;
}

}  // namespace imgspace::noise
