#include "imgspace/select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

#include "imgspace/errors.hpp"

namespace imgspace::select {

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::hc: return "hc";
    case Criterion::lc: return "lc";
    case Criterion::hi: return "hi";
    case Criterion::li: return "li";
  }
  return "?";
}

Criterion criterion_from_string(const std::string& name) {
  for (auto c : {Criterion::hc, Criterion::lc, Criterion::hi, Criterion::li}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown subgroup criterion '" + name + "' (expected hc, lc, hi or li)");
}

void SubgroupSpec::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("subgroup fraction must lie in (0, 1]");
  }
}

namespace {

bool wants_correct(Criterion c) { return c == Criterion::hc || c == Criterion::lc; }
bool from_front(Criterion c) { return c == Criterion::hc || c == Criterion::hi; }

std::vector<const trace::SampleTrace*> pool_of(std::span<const trace::SampleTrace> traces,
                                               bool correct) {
  std::vector<const trace::SampleTrace*> pool;
  for (const auto& t : traces) {
    if (t.final_correct() == correct) pool.push_back(&t);
  }
  return pool;
}

}  // namespace

std::vector<data::SampleId> select_subgroup(std::span<const trace::SampleTrace> traces,
                                            const SubgroupSpec& spec,
                                            std::optional<std::size_t> size_cap) {
  spec.validate();
  auto pool = pool_of(traces, wants_correct(spec.criterion));
  if (pool.empty()) {
    throw SelectionError(std::string("no ") +
                         (wants_correct(spec.criterion) ? "correctly classified"
                                                        : "misclassified") +
                         " samples to select " + to_string(spec.criterion) + " from");
  }
  std::sort(pool.begin(), pool.end(), [](const auto* a, const auto* b) {
    const double ca = a->final_confidence(), cb = b->final_confidence();
    if (ca != cb) return ca > cb;
    return a->id < b->id;
  });
  if (!from_front(spec.criterion)) std::reverse(pool.begin(), pool.end());
  std::size_t n = static_cast<std::size_t>(
      std::floor(spec.fraction * static_cast<double>(pool.size())));
  if (size_cap) n = std::min(n, *size_cap);
  std::vector<data::SampleId> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(pool[i]->id);
  return ids;
}

std::size_t equal_size_cap(std::span<const trace::SampleTrace> traces, double fraction) {
  std::size_t correct = 0;
  for (const auto& t : traces) correct += t.final_correct() ? 1 : 0;
  const std::size_t smaller = std::min(correct, traces.size() - correct);
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(smaller)));
}

data::LabeledDataset exclude(const data::LabeledDataset& ds,
                             std::span<const data::SampleId> ids) {
  return data::complement(ds, ids);
}

// ---------------------------------------------------------------------------

std::uint32_t RelabelPlan::original_of(std::uint32_t category) const {
  if (category < original_categories) return category;
  const std::size_t k = category - original_categories;
  if (k >= lookup.size()) {
    throw PlanError("category " + std::to_string(category) + " is outside the plan's " +
                    std::to_string(total_categories()) + " categories");
  }
  return lookup[k].second;
}

void RelabelPlan::validate() const {
  if (pairs.size() != lookup.size()) throw PlanError("plan pairs and lookup differ in length");
  for (std::size_t k = 0; k < lookup.size(); ++k) {
    if (lookup[k].first != original_categories + k) {
      throw PlanError("new categories must be contiguous from " +
                      std::to_string(original_categories));
    }
    if (lookup[k].second >= original_categories) {
      throw PlanError("lookup target " + std::to_string(lookup[k].second) +
                      " is not an original category");
    }
    if (lookup[k].second != pairs[k].first) {
      throw PlanError("lookup must map each new category to its pair's truth");
    }
  }
  for (const auto& [id, cat] : entries) {
    if (cat < original_categories || cat >= total_categories()) {
      throw PlanError("entry for sample " + std::to_string(id) + " has category " +
                      std::to_string(cat) + " outside the new range");
    }
  }
}

std::string RelabelPlan::to_json() const {
  nlohmann::ordered_json j;
  auto arr = [](const auto& v) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& [x, y] : v) a.push_back({x, y});
    return a;
  };
  j["pairs"] = arr(pairs);
  j["entries"] = arr(entries);
  j["lookup"] = arr(lookup);
  return j.dump();
}

RelabelPlan RelabelPlan::from_json(const std::string& text, std::size_t original_categories) {
  RelabelPlan plan;
  plan.original_categories = original_categories;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& p : j.at("pairs")) plan.pairs.emplace_back(p.at(0), p.at(1));
    for (const auto& e : j.at("entries")) plan.entries.emplace_back(e.at(0), e.at(1));
    for (const auto& l : j.at("lookup")) plan.lookup.emplace_back(l.at(0), l.at(1));
  } catch (const nlohmann::json::exception& e) {
    throw PlanError(std::string("malformed relabel plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

void RelabelPlan::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

RelabelPlan build_relabel_plan(std::span<const data::SampleId> illusive,
                               const trace::TraceStore& traces,
                               const trace::CumulativeConfusion& confusion,
                               std::size_t k) {
  if (k == 0) throw ConfigError("relabel K must be >= 1");
  const auto top = trace::top_confusions(confusion, k);
  if (top.empty()) throw PlanError("no off-diagonal confusion to build a relabel plan from");

  RelabelPlan plan;
  plan.original_categories = confusion.categories();
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> slot;
  for (std::size_t i = 0; i < top.size(); ++i) {
    const auto cat = static_cast<std::uint32_t>(plan.original_categories + i);
    plan.pairs.emplace_back(top[i].truth, top[i].predicted);
    plan.lookup.emplace_back(cat, top[i].truth);
    slot[{top[i].truth, top[i].predicted}] = cat;
  }
  std::vector<data::SampleId> sorted(illusive.begin(), illusive.end());
  std::sort(sorted.begin(), sorted.end());
  for (auto id : sorted) {
    const auto& t = traces.trace(id);
    const auto q = t.modal_wrong_prediction();
    if (!q) continue;
    const auto it = slot.find({t.truth, *q});
    if (it != slot.end()) plan.entries.emplace_back(id, it->second);
  }
  plan.validate();
  return plan;
}

data::LabeledDataset apply_plan(const data::LabeledDataset& ds, const RelabelPlan& plan) {
  if (ds.category_count() != plan.original_categories) {
    throw PlanError("plan was built for " + std::to_string(plan.original_categories) +
                    " categories, dataset has " + std::to_string(ds.category_count()));
  }
  auto names = ds.category_names();
  for (const auto& [t, q] : plan.pairs) {
    names.push_back(ds.category_names()[t] + "~" + ds.category_names()[q]);
  }
  std::map<data::SampleId, std::uint32_t> moves;
  for (const auto& [id, cat] : plan.entries) {
    if (ds.contains(id)) moves[id] = cat;
  }
  return data::relabel_samples(ds, moves, std::move(names));
}

std::vector<std::uint32_t> glue_predictions(std::span<const std::uint32_t> predictions,
                                            const RelabelPlan& plan) {
  std::vector<std::uint32_t> out;
  out.reserve(predictions.size());
  for (auto p : predictions) out.push_back(plan.original_of(p));
  return out;
}

Tensor glue_rows(const Tensor& probs, const RelabelPlan& plan) {
  if (probs.rank() != 2 || probs.dim(1) != plan.total_categories()) {
    throw PlanError("prediction width does not match the plan's " +
                    std::to_string(plan.total_categories()) + " categories");
  }
  const std::size_t n = probs.dim(0), c = plan.original_categories;
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < probs.dim(1); ++j) {
      out[i * c + plan.original_of(static_cast<std::uint32_t>(j))] += probs[i * probs.dim(1) + j];
    }
  }
  return out;
}

}  // namespace imgspace::select
