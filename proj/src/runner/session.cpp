#include <cstdlib>

#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/runner.hpp"
#include "imgspace/synthetic.hpp"

namespace imgspace::runner {

namespace {

constexpr std::uint64_t kMainStream = 0x5EED0001;
constexpr std::uint64_t kDiagnosticStream = 0x5EED0002;

RunSeeds seeds_from(std::uint64_t base, std::uint64_t stream, std::size_t run) {
  std::uint64_t s = derive_seed(derive_seed(base, stream), run);
  return {derive_seed(s, 1), derive_seed(s, 2)};
}

double accuracy_of(const Tensor& probs, const data::LabeledDataset& ds) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (trace::argmax(probs.row(i)) == ds.label(i)) ++correct;
  return ds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace

Datasets load_datasets(const DataConfig& cfg, const std::filesystem::path& data_dir) {
  Datasets out;
  if (cfg.source == "cifar10") {
    std::filesystem::path dir = data_dir;
    if (dir.empty()) dir = cfg.dir;
    if (dir.empty())
      if (const char* env = std::getenv("DATA_DIR")) dir = env;
    if (dir.empty())
      throw IngestionError("data: no CIFAR-10 directory (set data.dir, --data-dir or DATA_DIR)");
    if (!data::has_cifar10(dir))
      throw IngestionError("data: CIFAR-10 binaries not found in " + dir.string());
    std::tie(out.train, out.test) = data::load_cifar10(dir);
  } else {
    std::tie(out.train, out.test) = data::make_surrogate(cfg.synthetic);
  }
  if (cfg.train_subset && cfg.train_subset < out.train.size())
    out.train = data::stratified_subset(out.train, cfg.train_subset, cfg.subset_seed);
  if (cfg.test_subset && cfg.test_subset < out.test.size())
    out.test = data::stratified_subset(out.test, cfg.test_subset, derive_seed(cfg.subset_seed, 1));
  return out;
}

nn::NetworkSpec network_spec(const NetworkConfig& cfg, const Shape& input,
                             std::size_t categories, std::uint64_t seed) {
  if (cfg.profile == "cifar-small") {
    if (input != Shape{3, 32, 32})
      throw ConfigError("network.profile: cifar-small expects 3x32x32 input");
    return nn::cifar_small(categories, seed);
  }
  if (cfg.profile == "fast-mlp") return nn::fast_mlp(input, categories, seed, cfg.hidden);
  nn::NetworkSpec spec{cfg.layers, input, categories, seed};
  // The last dense layer follows the category count of the training set,
  // which grows for noise and relabel experiments.
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    if (it->kind == nn::LayerKind::dense) {
      it->out = categories;
      break;
    }
  }
  return spec;
}

RunSeeds run_seeds(std::uint64_t base, std::size_t run) {
  return seeds_from(base, kMainStream, run);
}

RunSeeds diagnostic_seeds(std::uint64_t base, std::size_t run) {
  return seeds_from(base, kDiagnosticStream, run);
}

TrainedRun train_run(const ExperimentConfig& cfg, const data::LabeledDataset& train,
                     const data::LabeledDataset& test, std::size_t run, RunSeeds seeds,
                     const TrainOptions& opts) {
  if (train.empty()) throw StateError("training set is empty");
  if (test.empty()) throw StateError("test set is empty");
  const std::size_t epochs = opts.epochs ? opts.epochs : cfg.train.epochs;

  TrainedRun out{nn::Network(network_spec(cfg.network, train.sample_shape(),
                                          train.category_count(), seeds.init)),
                 {}, {}, {}, {}};
  nn::SgdOptimizer opt(out.net, cfg.train);
  Rng rng(seeds.shuffle);
  const nn::ClassificationSource source = train.classification_source();
  if (opts.trace_train) out.train_trace.emplace(train, run);
  if (opts.trace_test) out.test_trace.emplace(test, run);

  std::vector<double> train_curve, test_curve;
  for (std::size_t e = 0; e < epochs; ++e) {
    nn::train_epoch(out.net, opt, source, cfg.train.batch_size, rng);
    if (opts.curves || opts.trace_train) {
      Tensor probs = nn::predict(out.net, train.size(), train.gatherer());
      if (opts.trace_train) out.train_trace->record_predictions(probs, train);
      if (opts.curves) train_curve.push_back(accuracy_of(probs, train));
    }
    const bool last = e + 1 == epochs;
    if (opts.curves || opts.trace_test || last) {
      Tensor probs = nn::predict(out.net, test.size(), test.gatherer());
      if (opts.trace_test) out.test_trace->record_predictions(probs, test);
      if (opts.curves) test_curve.push_back(accuracy_of(probs, test));
      if (last) out.test_probs = std::move(probs);
    }
  }
  out.metrics = metrics::compute_metrics(out.test_probs, test.labels(), opts.noise_index);
  out.metrics.train_curve = std::move(train_curve);
  out.metrics.test_curve = std::move(test_curve);
  return out;
}

}  // namespace imgspace::runner
