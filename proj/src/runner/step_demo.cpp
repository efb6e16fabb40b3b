#include <algorithm>
#include <cmath>
#include <sstream>

#include "artifacts.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/runner.hpp"

namespace imgspace::runner {

namespace {

constexpr std::uint64_t kStepDataStream = 0x57E9;

// The regressor sees (x - mean) / std of its training inputs.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  explicit Standardizer(const std::vector<double>& xs) {
    double s1 = 0.0, s2 = 0.0;
    for (double x : xs) s1 += x;
    mean = s1 / static_cast<double>(xs.size());
    for (double x : xs) s2 += (x - mean) * (x - mean);
    const double sd = std::sqrt(s2 / static_cast<double>(xs.size()));
    scale = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  double operator()(double x) const { return (x - mean) * scale; }
};

nn::Gather scalar_gather(const std::vector<double>& xs, const Standardizer& z) {
  return [&xs, z](std::span<const std::size_t> idx, Tensor& out) {
    out = Tensor({idx.size(), 1});
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = z(xs[idx[i]]);
  };
}

// With zero biases every first-layer kink sits at the same input. Kink j is
// moved to a uniform point of [lo, hi] (standardized training range) so the
// fit has piecewise-linear freedom wherever there is data.
void spread_first_kinks(nn::Network& net, double lo, double hi, std::uint64_t seed) {
  Tensor& w = net.parameters()[0];
  Tensor& b = net.parameters()[1];
  Rng rng = make_rng(seed, 0xB1A5);
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = -w[j] * (lo + (hi - lo) * uniform01(rng));
}

}  // namespace

ExperimentResult run_step_demo(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const StepDemoConfig& demo = *cfg.step_demo;
  detail::Artifacts art(cfg, opts);
  ExperimentResult result;
  result.experiment = cfg.name;

  std::vector<double> grid(demo.grid_points);
  for (std::size_t k = 0; k < grid.size(); ++k)
    grid[k] = static_cast<double>(k) / static_cast<double>(grid.size() - 1);

  std::ostringstream curves, mse;
  curves << "x,prediction,variant\n";
  mse << "variant,run,samples,train_mse\n";
  for (std::size_t v = 0; v < demo.variants.size(); ++v) {
    const StepVariant& variant = demo.variants[v];
    // The training data is fixed per variant; runs vary init and shuffling.
    std::vector<data::StepSample> samples = data::make_step_dataset(
        variant.intervals, derive_seed(derive_seed(cfg.seed, kStepDataStream), v));
    std::vector<double> xs, ys;
    for (const data::StepSample& s : samples) {
      xs.push_back(s.x);
      ys.push_back(s.y);
    }
    const Standardizer z(xs);
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    const nn::RegressionSource source{xs.size(), scalar_gather(xs, z), ys};

    for (std::size_t r = 0; r < cfg.runs; ++r) {
      RunSeeds seeds = run_seeds(cfg.seed, r);
      nn::Network net(nn::regressor_mlp(demo.hidden, seeds.init));
      spread_first_kinks(net, z(*lo), z(*hi), seeds.init);
      nn::SgdOptimizer opt(net, cfg.train);
      Rng rng(seeds.shuffle);
      for (std::size_t e = 0; e < cfg.train.epochs; ++e)
        nn::train_epoch(net, opt, source, cfg.train.batch_size, rng);

      StepCurve c;
      c.variant = variant.name;
      c.run = r;
      c.samples = xs.size();
      Tensor fit = nn::predict(net, xs.size(), source.gather);
      double sum = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) sum += (fit[i] - ys[i]) * (fit[i] - ys[i]);
      c.train_mse = sum / static_cast<double>(xs.size());
      Tensor on_grid = nn::predict(net, grid.size(), scalar_gather(grid, z));
      c.x = grid;
      c.prediction.assign(on_grid.data(), on_grid.data() + on_grid.size());

      const std::string label = cfg.runs == 1 ? c.variant : c.variant + "#" + std::to_string(r);
      for (std::size_t k = 0; k < grid.size(); ++k)
        curves << detail::format_double(grid[k]) << ','
               << detail::format_double(c.prediction[k]) << ',' << label << '\n';
      mse << c.variant << ',' << r << ',' << c.samples << ','
          << detail::format_double(c.train_mse) << '\n';
      art.note(label + " train_mse=" + detail::format_double(c.train_mse));
      result.curves.push_back(std::move(c));
    }
  }
  art.write_text("curves.csv", curves.str());
  art.write_text("step_mse.csv", mse.str());
  art.finish(result);
  return result;
}

}  // namespace imgspace::runner
