#include <algorithm>
#include <cmath>

#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/synthetic.hpp"

namespace imgspace::data {

void SurrogateSpec::validate() const {
  if (categories < 2) throw ConfigError("synthetic.categories must be >= 2");
  if (modes == 0) throw ConfigError("synthetic.modes must be positive");
  if (train == 0 || test == 0) throw ConfigError("synthetic train/test sizes must be positive");
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(stray_fraction) || !unit(stray_pull) || !unit(label_noise) || !unit(max_blend)) {
    throw ConfigError("synthetic fractions must lie in [0, 1]");
  }
  if (!(pixel_noise >= 0.0)) throw ConfigError("synthetic.pixel_noise must be >= 0");
  if (max_shift < 0 || max_shift > 8) throw ConfigError("synthetic.max_shift must be in [0, 8]");
}

namespace {

constexpr std::size_t kSide = 32;
constexpr std::size_t kPlane = kSide * kSide;
using Prototype = std::vector<double>;  // 3 x 32 x 32, pixel units

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Prototype random_prototype(Rng& rng) {
  Prototype p(3 * kPlane);
  double bg[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    bg[c] = uniform(rng, 40.0, 215.0);
    gx[c] = uniform(rng, -40.0, 40.0);
    gy[c] = uniform(rng, -40.0, 40.0);
  }
  struct Blob {
    double cx, cy, inv2s2, delta[3];
  };
  Blob blobs[4];
  for (auto& b : blobs) {
    b.cx = uniform(rng, 2.0, 30.0);
    b.cy = uniform(rng, 2.0, 30.0);
    const double s = uniform(rng, 3.0, 9.0);
    b.inv2s2 = 1.0 / (2.0 * s * s);
    for (double& d : b.delta) d = uniform(rng, -110.0, 110.0);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < kSide; ++y) {
      for (std::size_t x = 0; x < kSide; ++x) {
        const double fx = (static_cast<double>(x) - 15.5) / 16.0;
        const double fy = (static_cast<double>(y) - 15.5) / 16.0;
        double v = bg[c] + gx[c] * fx + gy[c] * fy;
        for (const auto& b : blobs) {
          const double dx = static_cast<double>(x) - b.cx;
          const double dy = static_cast<double>(y) - b.cy;
          v += b.delta[c] * std::exp(-(dx * dx + dy * dy) * b.inv2s2);
        }
        p[c * kPlane + y * kSide + x] = v;
      }
    }
  }
  return p;
}

Prototype blend(const Prototype& a, const Prototype& b, double wb) {
  Prototype out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - wb) * a[i] + wb * b[i];
  return out;
}

struct World {
  std::vector<std::vector<Prototype>> modes;  // [category][mode]
  std::vector<Prototype> stray;               // [category]
  std::vector<double> mode_cdf;
};

World build_world(const SurrogateSpec& spec) {
  World w;
  Rng rng = make_rng(spec.seed, 0);
  w.modes.resize(spec.categories);
  for (auto& cat : w.modes) {
    for (std::size_t m = 0; m < spec.modes; ++m) cat.push_back(random_prototype(rng));
  }
  for (std::size_t t = 0; t < spec.categories; ++t) {
    const std::size_t partner = (t + 1 + uniform_index(rng, spec.categories - 1)) % spec.categories;
    w.stray.push_back(blend(random_prototype(rng), w.modes[partner][0], spec.stray_pull));
  }
  // Mode weights proportional to (modes - m): a dominant cluster plus
  // progressively rarer ones.
  double total = 0.0;
  for (std::size_t m = 0; m < spec.modes; ++m) total += static_cast<double>(spec.modes - m);
  double acc = 0.0;
  for (std::size_t m = 0; m < spec.modes; ++m) {
    acc += static_cast<double>(spec.modes - m) / total;
    w.mode_cdf.push_back(acc);
  }
  w.mode_cdf.back() = 1.0;
  return w;
}

Image render(const SurrogateSpec& spec, const World& w, std::uint32_t category,
             Rng& rng) {
  const Prototype* base;
  if (uniform01(rng) < spec.stray_fraction) {
    base = &w.stray[category];
  } else {
    const double u = uniform01(rng);
    std::size_t m = 0;
    while (u >= w.mode_cdf[m]) ++m;
    base = &w.modes[category][m];
  }
  const std::size_t other =
      (category + 1 + uniform_index(rng, spec.categories - 1)) % spec.categories;
  const Prototype mixed = blend(*base, w.modes[other][0], spec.max_blend * uniform01(rng));

  const auto span = static_cast<std::uint64_t>(2 * spec.max_shift + 1);
  const int dx = static_cast<int>(uniform_index(rng, span)) - spec.max_shift;
  const int dy = static_cast<int>(uniform_index(rng, span)) - spec.max_shift;
  const double gain = uniform(rng, 0.8, 1.2);
  const double offset = uniform(rng, -20.0, 20.0);

  Image img(Dims{});
  const int side = static_cast<int>(kSide);
  for (std::size_t c = 0; c < 3; ++c) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const int sy = std::clamp(y - dy, 0, side - 1);
        const int sx = std::clamp(x - dx, 0, side - 1);
        double v = mixed[c * kPlane + static_cast<std::size_t>(sy * side + sx)];
        v = gain * (v - 128.0) + 128.0 + offset + spec.pixel_noise * standard_normal(rng);
        img.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
            static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return img;
}

LabeledDataset render_split(const SurrogateSpec& spec, const World& w,
                            std::size_t count, std::uint64_t stream,
                            double label_noise, Provenance provenance) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.categories; ++c) names.push_back("class" + std::to_string(c));
  LabeledDataset ds(Dims{}, std::move(names), provenance);
  ds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(derive_seed(spec.seed, stream), i);
    const auto truth = static_cast<std::uint32_t>(i % spec.categories);
    Image img = render(spec, w, truth, rng);
    std::uint32_t label = truth;
    if (uniform01(rng) < label_noise) {
      label = static_cast<std::uint32_t>(
          (truth + 1 + uniform_index(rng, spec.categories - 1)) % spec.categories);
    }
    ds.add(std::move(img), label, i);
  }
  return ds;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> make_surrogate(const SurrogateSpec& spec) {
  spec.validate();
  const World w = build_world(spec);
  return {render_split(spec, w, spec.train, 1, spec.label_noise, Provenance::train),
          render_split(spec, w, spec.test, 2, 0.0, Provenance::test)};
}

}  // namespace imgspace::data
