#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/select.hpp"

using namespace imgspace;
using namespace imgspace::select;
using trace::SampleTrace;

namespace {

SampleTrace final_only(data::SampleId id, std::uint32_t truth, std::uint32_t pred, double conf) {
  SampleTrace t;
  t.id = id;
  t.truth = truth;
  t.records.push_back({pred, conf, pred == truth});
  return t;
}

data::LabeledDataset plain_set(std::size_t n, std::size_t categories) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < categories; ++c) names.push_back("k" + std::to_string(c));
  data::Dims dims{2, 2, 1};
  data::LabeledDataset ds(dims, names, data::Provenance::train);
  for (std::size_t i = 0; i < n; ++i)
    ds.add(data::Image(dims), static_cast<std::uint32_t>(i % categories), i);
  return ds;
}

// Exhaustive oracle: stable sort of the pool by (confidence desc, id asc);
// "high" criteria read the front, "low" criteria the back.
std::vector<data::SampleId> oracle(const std::vector<SampleTrace>& traces, Criterion c, double p,
                                   std::size_t cap) {
  const bool want_correct = c == Criterion::hc || c == Criterion::lc;
  std::vector<std::pair<double, data::SampleId>> pool;
  for (const auto& t : traces)
    if (t.final_correct() == want_correct) pool.emplace_back(t.final_confidence(), t.id);
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (c == Criterion::lc || c == Criterion::li) std::reverse(pool.begin(), pool.end());
  std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(p * pool.size()), cap);
  std::vector<data::SampleId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[i].second);
  return out;
}

std::vector<data::SampleId> sorted(std::vector<data::SampleId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("criterion names and spec validation") {
  for (auto c : {Criterion::hc, Criterion::lc, Criterion::hi, Criterion::li})
    CHECK(criterion_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(criterion_from_string("ls"), ConfigError);
  CHECK_THROWS_AS((SubgroupSpec{Criterion::hc, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((SubgroupSpec{Criterion::hc, 1.5}.validate()), ConfigError);
  CHECK_NOTHROW((SubgroupSpec{Criterion::hc, 1.0}.validate()));
}

TEST_CASE("hand examples") {
  std::vector<SampleTrace> t{final_only(1, 0, 0, 0.9), final_only(2, 0, 0, 0.8),
                             final_only(3, 1, 1, 0.7), final_only(4, 1, 1, 0.6),
                             final_only(5, 1, 0, 0.55)};
  CHECK(sorted(select_subgroup(t, {Criterion::hc, 0.5})) == std::vector<data::SampleId>{1, 2});
  CHECK(sorted(select_subgroup(t, {Criterion::lc, 0.5})) == std::vector<data::SampleId>{3, 4});
  CHECK(sorted(select_subgroup(t, {Criterion::hc, 1.0})) == std::vector<data::SampleId>{1, 2, 3, 4});
  CHECK(select_subgroup(t, {Criterion::hi, 1.0}) == std::vector<data::SampleId>{5});
  CHECK(select_subgroup(t, {Criterion::hc, 1.0}, 1) == std::vector<data::SampleId>{1});
  CHECK(equal_size_cap(t, 1.0) == 1);
  CHECK(equal_size_cap(t, 0.5) == 0);

  std::vector<SampleTrace> all_right{final_only(1, 0, 0, 0.9)};
  CHECK_THROWS_AS(select_subgroup(all_right, {Criterion::hi, 0.5}), SelectionError);
}

TEST_CASE("subgroups equal the exhaustive ranking oracle") {
  Rng rng = make_rng(3, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SampleTrace> t;
    const std::size_t n = 5 + uniform_index(rng, 60);
    for (std::size_t i = 0; i < n; ++i) {
      const auto truth = static_cast<std::uint32_t>(uniform_index(rng, 3));
      const auto pred = uniform01(rng) < 0.6 ? truth : static_cast<std::uint32_t>(uniform_index(rng, 3));
      // coarse confidences force ties
      const double conf = 0.4 + 0.1 * static_cast<double>(uniform_index(rng, 6));
      t.push_back(final_only(1000 - 7 * i, truth, pred, conf));
    }
    for (auto c : {Criterion::hc, Criterion::lc, Criterion::hi, Criterion::li}) {
      for (double p : {0.25, 0.5, 0.75, 1.0}) {
        const bool correct_pool = c == Criterion::hc || c == Criterion::lc;
        const bool empty = std::none_of(t.begin(), t.end(), [&](const SampleTrace& s) {
          return s.final_correct() == correct_pool;
        });
        if (empty) {
          CHECK_THROWS_AS(select_subgroup(t, {c, p}), SelectionError);
          continue;
        }
        const std::size_t cap = uniform_index(rng, 20);
        CHECK(sorted(select_subgroup(t, {c, p})) == sorted(oracle(t, c, p, SIZE_MAX)));
        CHECK(sorted(select_subgroup(t, {c, p}, cap)) == sorted(oracle(t, c, p, cap)));
      }
      // complementary ends never overlap for p <= .5
      for (double p : {0.25, 0.5}) {
        try {
          auto hi = select_subgroup(t, {c == Criterion::hc || c == Criterion::lc ? Criterion::hc : Criterion::hi, p});
          auto lo = select_subgroup(t, {c == Criterion::hc || c == Criterion::lc ? Criterion::lc : Criterion::li, p});
          std::set<data::SampleId> s(hi.begin(), hi.end());
          for (auto id : lo) CHECK(s.count(id) == 0);
        } catch (const SelectionError&) {
        }
      }
    }
  }
}

TEST_CASE("equal size cap gives equal subgroup sizes") {
  std::vector<SampleTrace> t;
  for (std::size_t i = 0; i < 100; ++i)
    t.push_back(final_only(i, 0, i < 70 ? 0 : 1, 0.5 + 0.004 * i));
  for (double p : {0.25, 0.5, 0.75}) {
    const auto cap = equal_size_cap(t, p);
    CHECK(cap == static_cast<std::size_t>(p * 30));
    for (auto c : {Criterion::hc, Criterion::lc, Criterion::hi, Criterion::li})
      CHECK(select_subgroup(t, {c, p}, cap).size() == cap);
  }
}

TEST_CASE("exclude") {
  auto ds = plain_set(10, 2);
  CHECK(exclude(ds, std::vector<data::SampleId>{}).size() == 10);
  CHECK(exclude(ds, ds.ids()).empty());
  std::vector<data::SampleId> drop{1, 4, 8};
  auto kept = exclude(ds, drop);
  CHECK(kept.size() == 7);
  for (auto id : drop) CHECK_FALSE(kept.contains(id));
  CHECK(kept.size() + drop.size() == ds.size());
  CHECK_THROWS_AS(exclude(ds, std::vector<data::SampleId>{42}), LookupError);
}

namespace {

// Store over `ds` where sample i is predicted preds[i][e] at epoch e.
trace::TraceStore store_with(const data::LabeledDataset& ds,
                             const std::vector<std::vector<std::uint32_t>>& preds) {
  trace::TraceStore store(ds);
  const std::size_t c = ds.category_count();
  for (std::size_t e = 0; e < preds.front().size(); ++e) {
    Tensor probs({ds.size(), c}, 0.1 / double(c - 1));
    for (std::size_t i = 0; i < ds.size(); ++i) probs[i * c + preds[i][e]] = 0.9;
    store.record_predictions(probs, ds);
  }
  return store;
}

}  // namespace

TEST_CASE("relabel plan single pair") {
  auto base = plain_set(6, 6);
  data::LabeledDataset ds(base.dims(), base.category_names(), data::Provenance::train);
  for (std::size_t i = 0; i < 4; ++i) ds.add(data::Image(base.dims()), 3, i);
  ds.add(data::Image(base.dims()), 1, 4);
  auto store = store_with(ds, {{5, 5}, {5, 5}, {5, 3}, {3, 3}, {1, 1}});
  std::vector<data::SampleId> ill{0, 1, 2};
  auto plan = build_relabel_plan(ill, store, store.confusion(), 1);
  CHECK(plan.pairs == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{3, 5}});
  CHECK(plan.lookup == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{6, 3}});
  CHECK(plan.entries.size() == 3);
  for (auto [id, cat] : plan.entries) CHECK(cat == 6);

  auto diag = store_with(ds, {{3, 3}, {3, 3}, {3, 3}, {3, 3}, {1, 1}});
  CHECK_THROWS_AS(build_relabel_plan(ill, diag, diag.confusion(), 1), PlanError);
  CHECK_THROWS_AS(build_relabel_plan(ill, store, store.confusion(), 0), ConfigError);
}

TEST_CASE("relabel plan matches hand enumeration") {
  // C = 4; truths below, three epochs each.
  std::vector<std::uint32_t> truth{0, 0, 1, 1, 2, 2, 3, 3};
  std::vector<std::vector<std::uint32_t>> preds{
      {1, 1, 1},  // id0: 0 -> 1 x3
      {1, 2, 2},  // id1: modal wrong 2 (0->2 twice)
      {0, 0, 0},  // id2: 1 -> 0 x3
      {0, 1, 1},  // id3: modal wrong 0
      {2, 2, 2},  // id4 correct
      {3, 3, 0},  // id5: 2 -> 3 x2, 2 -> 0 x1, modal 3
      {3, 3, 3},  // id6 correct
      {1, 1, 1}};  // id7: 3 -> 1 x3
  auto base = plain_set(1, 4);
  data::LabeledDataset ds(base.dims(), base.category_names(), data::Provenance::train);
  for (std::size_t i = 0; i < truth.size(); ++i) ds.add(data::Image(base.dims()), truth[i], i);
  auto store = store_with(ds, preds);
  // off-diagonal counts: (0,1)=4 (0,2)=2 (1,0)=4 (2,3)=2 (2,0)=1 (3,1)=3
  std::vector<data::SampleId> ill{0, 1, 2, 3, 5, 7};
  auto plan = build_relabel_plan(ill, store, store.confusion(), 3);
  using P = std::pair<std::uint32_t, std::uint32_t>;
  CHECK(plan.pairs == std::vector<P>{{0, 1}, {1, 0}, {3, 1}});
  CHECK(plan.lookup == std::vector<P>{{4, 0}, {5, 1}, {6, 3}});
  std::vector<std::pair<data::SampleId, std::uint32_t>> want{{0, 4}, {2, 5}, {3, 5}, {7, 6}};
  CHECK(plan.entries == want);
  CHECK(plan.total_categories() == 7);
  CHECK_NOTHROW(plan.validate());

  auto relabeled = apply_plan(ds, plan);
  CHECK(relabeled.category_count() == 7);
  CHECK(relabeled.label(relabeled.index_of(3)) == 5);
  CHECK(relabeled.label(relabeled.index_of(1)) == 0);

  // gluing undoes the relabel
  auto glued = glue_predictions(relabeled.labels(), plan);
  CHECK(glued == ds.labels());

  auto back = RelabelPlan::from_json(plan.to_json(), 4);
  CHECK(back.pairs == plan.pairs);
  CHECK(back.entries == plan.entries);
  CHECK(back.lookup == plan.lookup);
}

TEST_CASE("glue predictions and rows") {
  RelabelPlan plan;
  plan.original_categories = 4;
  plan.pairs = {{3, 1}, {0, 2}};
  plan.lookup = {{4, 3}, {5, 0}};
  std::vector<std::uint32_t> raw{4, 2, 5, 0, 3, 4};
  std::vector<std::uint32_t> want;
  for (auto p : raw) want.push_back(p == 4 ? 3 : p == 5 ? 0 : p);
  CHECK(glue_predictions(raw, plan) == want);
  CHECK(plan.original_of(2) == 2);
  CHECK(plan.original_of(4) == 3);
  CHECK_THROWS_AS(plan.original_of(6), PlanError);
  CHECK_THROWS_AS(glue_predictions(std::vector<std::uint32_t>{7}, plan), PlanError);

  Tensor rows({1, 6}, {0.1, 0.1, 0.1, 0.1, 0.4, 0.2});
  auto g = glue_rows(rows, plan);
  REQUIRE(g.shape() == Shape{1, 4});
  CHECK(g[0] == doctest::Approx(0.3));
  CHECK(g[3] == doctest::Approx(0.5));
  CHECK_THROWS_AS(glue_rows(Tensor({1, 5}, 0.2), plan), PlanError);

  RelabelPlan broken = plan;
  broken.lookup = {{5, 3}};
  CHECK_THROWS_AS(broken.validate(), PlanError);
}
