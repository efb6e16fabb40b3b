#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imgspace/data.hpp"
#include "imgspace/trace.hpp"

namespace imgspace::select {

// hc/lc: high/low confidence among samples the final model gets right.
// hi/li: high/low illusiveness among samples it gets wrong.
enum class Criterion { hc, lc, hi, li };
std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& name);

struct SubgroupSpec {
  Criterion criterion = Criterion::hc;
  double fraction = 0.25;  // p in (0, 1]

  void validate() const;
};

// Both pools share one ranking: final confidence descending, smaller id
// first on ties. hc/hi read it from the front, lc/li from the back, so the
// complementary subgroups never overlap for p <= 0.5. Returns the first
// min(floor(p * |pool|), size_cap) ids. Throws SelectionError on an empty pool.
std::vector<data::SampleId> select_subgroup(std::span<const trace::SampleTrace> traces,
                                            const SubgroupSpec& spec,
                                            std::optional<std::size_t> size_cap = {});

// floor(p * min(|correct pool|, |misclassified pool|)); the common size that
// keeps every subgroup at fraction p equally large.
std::size_t equal_size_cap(std::span<const trace::SampleTrace> traces, double fraction);

// Training set without the given ids (LookupError for unknown ids).
data::LabeledDataset exclude(const data::LabeledDataset& ds,
                             std::span<const data::SampleId> ids);

// Splits confused illusive samples into new categories C, C+1, ... and maps
// each new category back to the original one it was carved from.
struct RelabelPlan {
  std::size_t original_categories = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;     // (truth, predicted)
  std::vector<std::pair<data::SampleId, std::uint32_t>> entries;  // (id, new category)
  std::vector<std::pair<std::uint32_t, std::uint32_t>> lookup;    // (new, original)

  std::size_t total_categories() const { return original_categories + lookup.size(); }
  // Identity below C, lookup above; PlanError when out of range.
  std::uint32_t original_of(std::uint32_t category) const;
  // Throws PlanError unless new indices are C.. contiguous and lookup total.
  void validate() const;

  std::string to_json() const;
  static RelabelPlan from_json(const std::string& text, std::size_t original_categories);
  void write_json(const std::filesystem::path& path) const;
};

// For each of the top-K confusion pairs (t, q) a new category is created; an
// illusive sample with truth t whose modal wrong prediction is q joins it.
RelabelPlan build_relabel_plan(std::span<const data::SampleId> illusive,
                               const trace::TraceStore& traces,
                               const trace::CumulativeConfusion& confusion,
                               std::size_t k);

// Dataset with plan entries moved to their new categories.
data::LabeledDataset apply_plan(const data::LabeledDataset& ds, const RelabelPlan& plan);

// Maps predicted new categories back to their originals.
std::vector<std::uint32_t> glue_predictions(std::span<const std::uint32_t> predictions,
                                            const RelabelPlan& plan);
// Same on probability rows: new-category mass is added to its original.
Tensor glue_rows(const Tensor& probs, const RelabelPlan& plan);

}  // namespace imgspace::select
