#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imgspace/adv.hpp"
#include "imgspace/data.hpp"
#include "imgspace/nn.hpp"
#include "imgspace/noise.hpp"
#include "imgspace/select.hpp"
#include "imgspace/synthetic.hpp"
#include "imgspace/trace.hpp"

namespace imgspace::runner {

enum class ExperimentKind {
  baseline,
  subgroup,
  noise_sweep,
  exclude_illusive,
  adv_eval,
  relabel_glue,
  step_demo
};

// CLI subcommand spelling: train, subgroup, noise-sweep, ...
std::string to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& name);

struct DataConfig {
  std::string source = "synthetic";  // "cifar10" or "synthetic"
  std::filesystem::path dir;         // cifar10 only; falls back to DATA_DIR
  std::size_t train_subset = 0;      // stratified; 0 keeps everything
  std::size_t test_subset = 0;
  std::uint64_t subset_seed = 0;
  data::SurrogateSpec synthetic;
};

struct NetworkConfig {
  std::string profile = "fast-mlp";  // "fast-mlp", "cifar-small" or "custom"
  std::size_t hidden = 128;          // fast-mlp width
  std::vector<nn::LayerSpec> layers;  // custom only; final dense width is C
};

struct DiagnosticConfig {
  std::size_t runs = 5;
  std::size_t epochs = 0;  // 0: same as train.epochs
};

struct SubgroupSet {
  std::vector<select::Criterion> criteria;
  double fraction = 0.25;

  std::string name() const;  // e.g. "S_hc^0.25+S_li^0.25"
};

struct NamedNoise {
  std::string name;
  noise::NoiseSpec spec;
};

struct StepVariant {
  std::string name;
  std::vector<data::StepInterval> intervals;
};

struct StepDemoConfig {
  std::vector<StepVariant> variants;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t grid_points = 1001;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::baseline;
  std::string name;
  DataConfig data;
  NetworkConfig network;
  nn::TrainConfig train;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";

  DiagnosticConfig diagnostic;
  trace::IllusiveRule illusive;
  std::vector<SubgroupSet> subgroups;
  std::optional<noise::NoiseSpec> noise;  // subgroup: adds "+noise" variants
  std::vector<NamedNoise> noise_variants;
  std::vector<adv::AttackConfig> attacks;
  std::size_t relabel_k = 0;
  std::optional<StepDemoConfig> step_demo;

  // Field-level ConfigError for anything inconsistent with `kind`.
  void validate() const;
  std::size_t diagnostic_epochs() const {
    return diagnostic.epochs ? diagnostic.epochs : train.epochs;
  }
};

// Parses a JSON document. Unknown keys are rejected. If the document names
// a kind it must agree with `kind`.
ExperimentConfig parse_config(const std::string& json_text, ExperimentKind kind);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind);

// Canonical JSON of a parsed config (written next to the outputs).
std::string to_json(const ExperimentConfig& cfg);

}  // namespace imgspace::runner
