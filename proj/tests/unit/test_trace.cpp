#include <algorithm>
#include <filesystem>
#include <map>
#include <tuple>

#include "doctest.h"
#include "imgspace/data.hpp"
#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/trace.hpp"

using namespace imgspace;
using namespace imgspace::trace;

namespace {

// 1x1 images with `categories` channels; the channel of the label is lit.
data::LabeledDataset one_hot_set(std::vector<std::uint32_t> labels, std::size_t categories) {
  std::vector<std::string> names(categories, "c");
  for (std::size_t c = 0; c < categories; ++c) names[c] += std::to_string(c);
  data::Dims dims{1, 1, categories};
  data::LabeledDataset ds(dims, names, data::Provenance::train);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    data::Image img(dims);
    img.at(labels[i], 0, 0) = 255;
    ds.add(std::move(img), labels[i], 100 + i);
  }
  return ds;
}

nn::Network linear_net(std::size_t c, double diag, std::vector<double> bias) {
  nn::NetworkSpec spec;
  spec.input = {c, 1, 1};
  spec.categories = c;
  spec.layers = {nn::LayerSpec::flatten(), nn::LayerSpec::dense(c), nn::LayerSpec::softmax()};
  nn::Network net(spec);
  auto& p = net.parameters();
  p[0].fill(0.0);
  for (std::size_t k = 0; k < c; ++k) p[0][k * c + k] = diag;
  for (std::size_t k = 0; k < c; ++k) p[1][k] = bias[k];
  return net;
}

SampleTrace make_trace(std::vector<bool> correct) {
  SampleTrace t;
  for (bool ok : correct) t.records.push_back({ok ? 0u : 1u, 0.5, ok});
  return t;
}

// Straight transcription of the rule, used as the oracle.
bool oracle_flag(const std::vector<bool>& correct, double burn_in, double tau) {
  std::size_t e = correct.size();
  std::size_t skip = std::min<std::size_t>(static_cast<std::size_t>(burn_in * e), e - 1);
  std::size_t ok = 0;
  for (std::size_t i = skip; i < e; ++i) ok += correct[i];
  return ok <= tau * (e - skip) + 1e-9;
}

}  // namespace

TEST_CASE("argmax ties go low") {
  std::vector<double> r{0.2, 0.4, 0.4};
  CHECK(argmax(r) == 1);
  std::vector<double> s{0.5, 0.5};
  CHECK(argmax(s) == 0);
}

TEST_CASE("perfect net gives a diagonal confusion") {
  auto ds = one_hot_set({0, 1, 2, 2, 1}, 3);
  auto net = linear_net(3, 20.0, {0, 0, 0});
  TraceStore store(ds);
  auto inc = store.record_epoch(net, ds);
  for (const auto& t : store.traces()) CHECK(t.final_correct());
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) CHECK(inc.at(a, b) == 0);
  CHECK(inc.at(2, 2) == 2);
  CHECK(inc.total() == ds.size());
}

TEST_CASE("constant net puts all mass in column 0") {
  auto ds = one_hot_set({0, 1, 2, 2, 1}, 3);
  auto net = linear_net(3, 0.0, {3, 0, 0});
  TraceStore store(ds);
  store.record_epoch(net, ds);
  store.record_epoch(net, ds);
  const auto& conf = store.confusion();
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t q = 1; q < 3; ++q) CHECK(conf.at(t, q) == 0);
  CHECK(conf.at(0, 0) == 2);
  CHECK(conf.at(1, 0) == 4);
  CHECK(conf.at(2, 0) == 4);
  CHECK(store.epochs() == 2);
  CHECK(conf.first_epoch() == 1);
  CHECK(conf.last_epoch() == 2);
}

TEST_CASE("three listed rows match hand enumeration") {
  auto ds = one_hot_set({0, 1, 2}, 3);
  Tensor probs({3, 3}, {0.7, 0.2, 0.1,   // truth 0 -> 0, correct, conf .7
                        0.5, 0.3, 0.2,   // truth 1 -> 0, wrong, conf .5
                        0.1, 0.45, 0.45  // truth 2 -> 1 (tie low), wrong, conf .45
                       });
  TraceStore store(ds);
  auto inc = store.record_predictions(probs, ds);
  const auto& t = store.traces();
  CHECK(t[0].final_correct());
  CHECK(t[0].final_confidence() == 0.7);
  CHECK_FALSE(t[0].illusiveness().has_value());
  CHECK_FALSE(t[1].final_correct());
  CHECK(t[1].final_record().predicted == 0);
  CHECK(*t[1].illusiveness() == 0.5);
  CHECK(t[2].final_record().predicted == 1);
  CHECK(*t[2].illusiveness() == 0.45);
  CHECK(*t[2].modal_wrong_prediction() == 1);

  std::map<std::pair<int, int>, int> expected{{{0, 0}, 1}, {{1, 0}, 1}, {{2, 1}, 1}};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      auto it = expected.find({a, b});
      CHECK(inc.at(a, b) == (it == expected.end() ? 0u : unsigned(it->second)));
    }
}

TEST_CASE("record errors") {
  auto ds = one_hot_set({0, 1, 2}, 3);
  TraceStore store(ds);
  auto other = one_hot_set({0, 1, 2, 0}, 3);
  CHECK_THROWS_AS(store.record_predictions(Tensor({4, 3}, 1.0 / 3), other), StateError);
  // same size, different ids
  data::LabeledDataset shifted(ds.dims(), ds.category_names(), data::Provenance::train);
  for (std::size_t i = 0; i < 3; ++i) shifted.add(ds.image(i), ds.label(i), 900 + i);
  CHECK_THROWS_AS(store.record_predictions(Tensor({3, 3}, 1.0 / 3), shifted), StateError);
  auto net4 = linear_net(4, 1.0, {0, 0, 0, 0});
  CHECK_THROWS_AS(store.record_epoch(net4, ds), StateError);
  CHECK_THROWS_AS(SampleTrace{}.final_record(), StateError);
}

TEST_CASE("per-epoch row sums equal truth counts; correct_count recounts") {
  Rng rng = make_rng(5, 0);
  std::vector<std::uint32_t> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(static_cast<std::uint32_t>(uniform_index(rng, 4)));
  auto ds = one_hot_set(labels, 4);
  TraceStore store(ds);
  for (int e = 0; e < 6; ++e) {
    Tensor probs({60, 4});
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = uniform01(rng);
    for (std::size_t r = 0; r < 60; ++r) {
      double s = 0;
      for (int c = 0; c < 4; ++c) s += probs[r * 4 + c];
      for (int c = 0; c < 4; ++c) probs[r * 4 + c] /= s;
    }
    auto inc = store.record_predictions(probs, ds);
    auto sums = inc.row_sums();
    for (std::uint32_t c = 0; c < 4; ++c)
      CHECK(sums[c] == std::size_t(std::count(labels.begin(), labels.end(), c)));
    CHECK(inc.total() == 60);
  }
  for (const auto& t : store.traces()) {
    std::size_t n = 0;
    for (const auto& r : t.records) {
      n += r.correct;
      CHECK(r.confidence >= 0.0);
      CHECK(r.confidence <= 1.0);
    }
    CHECK(t.correct_count() == n);
    CHECK(t.correct_count() <= t.records.size());
  }
}

TEST_CASE("trace CSV round trip and confusion JSON") {
  auto ds = one_hot_set({0, 1, 2}, 3);
  TraceStore store(ds, 2);
  store.record_predictions(Tensor({3, 3}, {0.7, 0.2, 0.1, 0.5, 0.3, 0.2, 0.1, 0.2, 0.7}), ds);
  store.record_predictions(Tensor({3, 3}, {0.1, 0.8, 0.1, 0.2, 0.6, 0.2, 0.3, 0.3, 0.4}), ds);
  auto path = std::filesystem::temp_directory_path() / "imgspace_trace.csv";
  store.write_csv(path);
  auto back = TraceStore::read_csv(path, ds, 2);
  REQUIRE(back.epochs() == 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = store.traces()[i].records;
    const auto& b = back.traces()[i].records;
    for (std::size_t e = 0; e < 2; ++e) {
      CHECK(a[e].predicted == b[e].predicted);
      CHECK(a[e].confidence == b[e].confidence);
      CHECK(a[e].correct == b[e].correct);
    }
  }
  CHECK(back.confusion().at(1, 0) == store.confusion().at(1, 0));
  std::filesystem::remove(path);

  auto json = store.confusion().to_json();
  CHECK(json.find("\"counts\"") != std::string::npos);
  CHECK(json.find("\"runs\"") != std::string::npos);
}

TEST_CASE("illusive rule examples") {
  IllusiveRule rule{0.5, 0.1, 0.8};
  std::vector<bool> always(20, true);
  std::vector<bool> never(20, false);
  CHECK_FALSE(flagged_in_run(make_trace(always), rule));
  for (double tau : {0.0, 0.5, 1.0}) {
    IllusiveRule r{0.5, tau, 1.0};
    CHECK(flagged_in_run(make_trace(never), r));
  }
  std::vector<bool> one_late(20, true);
  for (int i = 10; i < 20; ++i) one_late[i] = (i == 15);
  CHECK(flagged_in_run(make_trace(one_late), rule));
  one_late[16] = true;
  CHECK_FALSE(flagged_in_run(make_trace(one_late), rule));
  CHECK_THROWS_AS(flagged_in_run(make_trace({false}), rule), StateError);
}

TEST_CASE("illusive_ids matches the oracle and is monotone in tau") {
  Rng rng = make_rng(17, 0);
  const std::size_t n = 40, runs = 5, epochs = 12;
  auto ds = one_hot_set(std::vector<std::uint32_t>(n, 0), 2);
  std::vector<std::vector<std::vector<bool>>> pattern(runs, std::vector<std::vector<bool>>(n));
  std::vector<TraceStore> stores;
  for (std::size_t r = 0; r < runs; ++r) {
    TraceStore s(ds, r);
    for (std::size_t e = 0; e < epochs; ++e) {
      Tensor probs({n, 2});
      for (std::size_t i = 0; i < n; ++i) {
        // per-sample difficulty so some samples are mostly wrong
        bool ok = uniform01(rng) < double(i) / n;
        pattern[r][i].push_back(ok);
        probs[i * 2] = ok ? 0.9 : 0.1;
        probs[i * 2 + 1] = ok ? 0.1 : 0.9;
      }
      s.record_predictions(probs, ds);
    }
    stores.push_back(std::move(s));
  }
  std::vector<data::SampleId> prev;
  for (double tau : {0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0}) {
    for (double rho : {0.2, 0.6, 0.8, 1.0}) {
      IllusiveRule rule{0.5, tau, rho};
      auto got = illusive_ids(std::span<const TraceStore>(stores), rule);
      std::vector<data::SampleId> want;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t hits = 0;
        for (std::size_t r = 0; r < runs; ++r) hits += oracle_flag(pattern[r][i], 0.5, tau);
        if (hits >= 1 && hits + 1e-9 >= rho * runs) want.push_back(100 + i);
      }
      CHECK(got == want);
    }
    auto now = illusive_ids(std::span<const TraceStore>(stores), IllusiveRule{0.5, tau, 0.8});
    CHECK(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
    prev = now;
  }
  CHECK_THROWS_AS(illusive_ids(std::span<const TraceStore>{}, IllusiveRule{}), StateError);
  CHECK_THROWS_AS((IllusiveRule{1.5, 0.1, 0.8}.validate()), ConfigError);
  CHECK_THROWS_AS((IllusiveRule{0.5, -0.1, 0.8}.validate()), ConfigError);
}

TEST_CASE("top_confusions") {
  CumulativeConfusion diag(4);
  for (int i = 0; i < 4; ++i) diag.add(i, i, 9);
  CHECK(top_confusions(diag, 3).empty());

  CumulativeConfusion one(10);
  one.add(3, 5, 7);
  CHECK(top_confusions(one, 2) == std::vector<ConfusionEntry>{{3, 5, 7}});

  CumulativeConfusion m(4);
  const std::uint64_t grid[4][4] = {{50, 3, 8, 8}, {2, 40, 0, 6}, {8, 1, 30, 4}, {0, 9, 2, 60}};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) m.add(a, b, grid[a][b]);
  std::vector<std::tuple<std::uint64_t, int, int>> all;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (a != b && grid[a][b] > 0) all.emplace_back(grid[a][b], a, b);
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
  });
  for (std::size_t k = 1; k <= 4; ++k) {
    auto got = top_confusions(m, k);
    REQUIRE(got.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(got[i].count == std::get<0>(all[i]));
      CHECK(got[i].truth == std::uint32_t(std::get<1>(all[i])));
      CHECK(got[i].predicted == std::uint32_t(std::get<2>(all[i])));
    }
  }
  CHECK(top_confusions(m, 100).size() == all.size());
  CHECK_THROWS_AS(top_confusions(m, 0), ConfigError);
}

TEST_CASE("confusion merge") {
  CumulativeConfusion a(2), b(2), c(3);
  a.add(0, 1, 2);
  a.mark(0, 1);
  b.add(0, 1, 3);
  b.mark(1, 4);
  a.merge(b);
  CHECK(a.at(0, 1) == 5);
  CHECK(a.runs().size() == 2);
  CHECK(a.last_epoch() == 4);
  CHECK_THROWS_AS(a.merge(c), StateError);
}
