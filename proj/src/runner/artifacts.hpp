#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "imgspace/runner.hpp"

namespace imgspace::runner::detail {

// Shortest round-trip text for a double ("%.17g").
std::string format_double(double x);

// Collects artifacts of one experiment under cfg.output. With writing
// disabled every call is a no-op apart from progress logging.
class Artifacts {
 public:
  Artifacts(const ExperimentConfig& cfg, const RunOptions& opts);

  bool enabled() const { return enabled_; }
  // Absolute path for a relative artifact name; parent directories exist.
  std::filesystem::path path(const std::string& relative) const;
  void write_text(const std::string& relative, const std::string& content) const;

  void note(const std::string& line) const;

  // Records the id set a run trained on; a variant whose runs see different
  // id sets is a bug and throws StateError.
  void log_training_set(const std::string& variant, std::size_t run,
                        const data::LabeledDataset& train);

  // metrics.csv, accuracy_curves.csv, adversarial.csv, runs.log, config.json.
  void finish(const ExperimentResult& result) const;

 private:
  const ExperimentConfig& cfg_;
  bool enabled_;
  std::ostream* log_;
  std::ostringstream runs_log_;
  std::map<std::string, std::uint64_t> first_hash_;
};

}  // namespace imgspace::runner::detail
