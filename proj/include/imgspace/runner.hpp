#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "imgspace/adv.hpp"
#include "imgspace/config.hpp"
#include "imgspace/data.hpp"
#include "imgspace/metrics.hpp"
#include "imgspace/nn.hpp"
#include "imgspace/select.hpp"
#include "imgspace/trace.hpp"

namespace imgspace::runner {

struct Datasets {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

// CIFAR directory precedence: data_dir argument, data.dir, then $DATA_DIR.
// Throws IngestionError when the files are missing.
Datasets load_datasets(const DataConfig& cfg, const std::filesystem::path& data_dir = {});

nn::NetworkSpec network_spec(const NetworkConfig& cfg, const Shape& input,
                             std::size_t categories, std::uint64_t seed);

// Run r of every variant gets the same init and shuffle seeds, so variant
// comparisons are paired. Diagnostic runs use a separate stream.
struct RunSeeds {
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
};
RunSeeds run_seeds(std::uint64_t base, std::size_t run);
RunSeeds diagnostic_seeds(std::uint64_t base, std::size_t run);

struct TrainOptions {
  std::size_t epochs = 0;  // 0: cfg.train.epochs
  bool curves = false;     // per-epoch accuracy on the training and test sets
  bool trace_train = false;
  bool trace_test = false;
  std::optional<std::uint32_t> noise_index;
};

struct TrainedRun {
  nn::Network net;
  metrics::RunMetrics metrics;  // on the test set
  Tensor test_probs;
  std::optional<trace::TraceStore> train_trace;
  std::optional<trace::TraceStore> test_trace;
};

// Trains one network from scratch on `train` (category count taken from it)
// and evaluates it on `test`.
TrainedRun train_run(const ExperimentConfig& cfg, const data::LabeledDataset& train,
                     const data::LabeledDataset& test, std::size_t run, RunSeeds seeds,
                     const TrainOptions& opts);

struct VariantResult {
  std::string name;
  std::size_t training_size = 0;
  std::size_t categories = 0;  // network output width
  std::vector<metrics::RunMetrics> runs;
  metrics::MetricsReport report;
};

struct AdversarialResult {
  std::string variant;
  double epsilon = 0.0;
  std::size_t epochs = 0;
  std::vector<adv::Robustness> runs;
  adv::Robustness mean;
};

struct StepCurve {
  std::string variant;
  std::size_t run = 0;
  std::size_t samples = 0;
  double train_mse = 0.0;
  std::vector<double> x;
  std::vector<double> prediction;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<VariantResult> variants;
  std::vector<AdversarialResult> adversarial;
  std::vector<StepCurve> curves;
  std::vector<data::SampleId> illusive_train;
  std::vector<data::SampleId> illusive_test;
  std::optional<select::RelabelPlan> plan;

  // Throws LookupError for an unknown variant.
  const VariantResult& variant(const std::string& name) const;
  std::vector<metrics::ReportRow> rows() const;
};

struct RunOptions {
  std::filesystem::path data_dir;  // overrides data.dir / $DATA_DIR
  std::ostream* log = nullptr;     // progress lines; nothing when null
  bool write_outputs = true;       // artifacts under cfg.output
};

// Loads data as configured, runs the experiment and writes its artifacts.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});
// Same with datasets supplied by the caller (already subset as desired).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Datasets& data,
                                const RunOptions& opts = {});
ExperimentResult run_step_demo(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Renders metrics.csv (and adversarial.csv / step_mse.csv when present) of
// an output directory as an aligned text table.
std::string render_report(const std::filesystem::path& output_dir);

}  // namespace imgspace::runner
