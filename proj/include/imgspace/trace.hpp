#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "imgspace/data.hpp"
#include "imgspace/nn.hpp"

namespace imgspace::trace {

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

struct EpochRecord {
  std::uint32_t predicted = 0;
  double confidence = 0.0;  // probability of the predicted category
  bool correct = false;
};

// Epoch-end history of one training sample.
struct SampleTrace {
  data::SampleId id = 0;
  std::uint32_t truth = 0;
  std::vector<EpochRecord> records;

  std::size_t correct_count() const;
  const EpochRecord& final_record() const;  // StateError when empty
  double final_confidence() const { return final_record().confidence; }
  bool final_correct() const { return final_record().correct; }
  // Final confidence when the final prediction is wrong.
  std::optional<double> illusiveness() const;
  // Most frequent wrong prediction over all records, ties to the lowest
  // category; empty when never wrong.
  std::optional<std::uint32_t> modal_wrong_prediction() const;
};

// counts[t][q]: samples of truth t predicted as q, summed over the epochs
// and runs named in the accumulation domain.
class CumulativeConfusion {
 public:
  CumulativeConfusion() = default;
  explicit CumulativeConfusion(std::size_t categories);

  std::size_t categories() const { return categories_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  // Adds counts and widens the accumulation domain.
  void merge(const CumulativeConfusion& other);
  std::uint64_t total() const;
  std::vector<std::uint64_t> row_sums() const;

  // Accumulation domain: epoch range (1-based, inclusive) and run indices.
  std::size_t first_epoch() const { return first_epoch_; }
  std::size_t last_epoch() const { return last_epoch_; }
  const std::set<std::size_t>& runs() const { return runs_; }
  void mark(std::size_t run, std::size_t epoch);

  std::string to_json() const;
  void write_json(const std::filesystem::path& path) const;

 private:
  std::size_t categories_ = 0;
  std::vector<std::uint64_t> counts_;
  std::size_t first_epoch_ = 0;
  std::size_t last_epoch_ = 0;
  std::set<std::size_t> runs_;
};

// Per-run trace store; one SampleTrace per training sample, in dataset order.
class TraceStore {
 public:
  TraceStore() = default;
  TraceStore(const data::LabeledDataset& ds, std::size_t run = 0);

  std::size_t run() const { return run_; }
  std::size_t epochs() const { return epochs_; }
  std::size_t categories() const { return confusion_.categories(); }
  const std::vector<SampleTrace>& traces() const { return traces_; }
  const SampleTrace& trace(data::SampleId id) const;
  const CumulativeConfusion& confusion() const { return confusion_; }

  // Appends one record per sample from probability rows aligned with ds.
  // Returns this epoch's confusion increment (also folded into confusion()).
  CumulativeConfusion record_predictions(const Tensor& probs,
                                         const data::LabeledDataset& ds);
  CumulativeConfusion record_epoch(const nn::Network& net,
                                   const data::LabeledDataset& ds);

  // sample_id,epoch,predicted,confidence,correct
  void write_csv(const std::filesystem::path& path) const;
  static TraceStore read_csv(const std::filesystem::path& path,
                             const data::LabeledDataset& ds, std::size_t run = 0);

 private:
  std::size_t run_ = 0;
  std::size_t epochs_ = 0;
  std::vector<SampleTrace> traces_;
  std::unordered_map<data::SampleId, std::size_t> index_;
  CumulativeConfusion confusion_;
};

// "Consistently misclassified": within a run, the correct fraction over the
// epochs after the first floor(burn_in * E) is <= tau; across R runs a sample
// is returned when flagged in at least max(1, rho * R) runs.
struct IllusiveRule {
  double burn_in = 0.5;
  double tau = 0.1;
  double rho = 0.8;

  void validate() const;
};

bool flagged_in_run(const SampleTrace& trace, const IllusiveRule& rule);

// Sorted ids. Runs are expected to trace the same training set.
std::vector<data::SampleId> illusive_ids(std::span<const TraceStore* const> runs,
                                         const IllusiveRule& rule);
std::vector<data::SampleId> illusive_ids(std::span<const TraceStore> runs,
                                         const IllusiveRule& rule);

struct ConfusionEntry {
  std::uint32_t truth = 0;
  std::uint32_t predicted = 0;
  std::uint64_t count = 0;

  friend bool operator==(const ConfusionEntry&, const ConfusionEntry&) = default;
};

// The K largest non-zero off-diagonal entries, ties by (truth, predicted).
std::vector<ConfusionEntry> top_confusions(const CumulativeConfusion& conf,
                                           std::size_t k);

}  // namespace imgspace::trace
