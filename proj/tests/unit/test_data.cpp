#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "imgspace/errors.hpp"
#include "imgspace/data.hpp"
#include "imgspace/synthetic.hpp"

using namespace imgspace;
using namespace imgspace::data;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("imgspace_test_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

// n images whose pixels encode (id, position); labels cycle through C.
LabeledDataset patterned(std::size_t n, std::size_t categories, SampleId first_id = 0,
                         Dims dims = {}) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < categories; ++c) names.push_back("c" + std::to_string(c));
  LabeledDataset ds(dims, names, Provenance::synthetic);
  for (std::size_t i = 0; i < n; ++i) {
    Image img(dims);
    for (std::size_t p = 0; p < img.pixels.size(); ++p)
      img.pixels[p] = static_cast<std::uint8_t>((first_id + i) * 7 + p * 13);
    ds.add(std::move(img), static_cast<std::uint32_t>(i % categories), first_id + i);
  }
  return ds;
}

bool same_samples(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.id(i) != b.id(i) || a.label(i) != b.label(i) || a.image(i).pixels != b.image(i).pixels)
      return false;
  return true;
}

}  // namespace

TEST_CASE("image layout and normalization") {
  Image img(Dims{2, 2, 3});
  img.at(1, 0, 1) = 255;
  CHECK(img.pixels[(1 * 2 + 0) * 2 + 1] == 255);
  auto v = img.normalized();
  CHECK(v[5] == 1.0);
  CHECK(v[0] == 0.0);
}

TEST_CASE("dataset invariants") {
  LabeledDataset ds(Dims{2, 2, 1}, {"a", "b"}, Provenance::train);
  ds.add(Image(Dims{2, 2, 1}), 1, 42);
  CHECK(ds.contains(42));
  CHECK(ds.index_of(42) == 0);
  CHECK_THROWS_AS(ds.index_of(7), LookupError);
  CHECK_THROWS_AS(ds.add(Image(Dims{2, 2, 1}), 0, 42), StateError);
  CHECK_THROWS_AS(ds.add(Image(Dims{2, 2, 1}), 2, 43), ConfigError);
  CHECK_THROWS_AS(ds.add(Image(Dims{3, 2, 1}), 0, 44), ConfigError);
}

TEST_CASE("gather yields normalized NCHW batches") {
  LabeledDataset ds = patterned(3, 2, 0, Dims{4, 2, 3});
  std::vector<std::size_t> idx{2, 0};
  Tensor t;
  ds.gather(idx, t);
  CHECK(t.shape() == Shape{2, 3, 2, 4});
  for (std::size_t p = 0; p < 24; ++p) {
    CHECK(t[p] == ds.image(2).pixels[p] / 255.0);
    CHECK(t[24 + p] == ds.image(0).pixels[p] / 255.0);
  }
}

TEST_CASE("CIFAR batch round trip and size errors") {
  TempDir dir("cifar_batch");
  LabeledDataset ds = patterned(5, 10);
  auto file = dir.path / "b.bin";
  write_cifar_batch(file, ds);
  CHECK(std::filesystem::file_size(file) == 5 * kCifarRecordBytes);
  LabeledDataset back = read_cifar_batch(file, Provenance::train, 0, 5);
  CHECK(same_samples(ds, back));
  CHECK(back.category_names() == cifar10_category_names());

  std::filesystem::resize_file(file, 5 * kCifarRecordBytes - 1);
  try {
    read_cifar_batch(file, Provenance::train, 0, 5);
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    const std::string what = e.what();
    CHECK(what.find("b.bin") != std::string::npos);
    CHECK(what.find(std::to_string(5 * kCifarRecordBytes)) != std::string::npos);
  }
  CHECK_THROWS_AS(read_cifar_batch(dir.path / "missing.bin", Provenance::train, 0, 5),
                  IngestionError);

  LabeledDataset bad_label = patterned(1, 10);
  write_cifar_batch(file, bad_label);
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.put(static_cast<char>(10));
  }
  CHECK_THROWS_AS(read_cifar_batch(file, Provenance::train, 0, 1), IngestionError);
}

TEST_CASE("full CIFAR-10 directory layout") {
  TempDir dir("cifar_dir");
  CHECK_FALSE(has_cifar10(dir.path));
  for (int b = 1; b <= 5; ++b)
    write_cifar_batch(dir.path / ("data_batch_" + std::to_string(b) + ".bin"),
                      patterned(kCifarRecordsPerFile, 10, (b - 1) * kCifarRecordsPerFile));
  CHECK_THROWS_AS(load_cifar10(dir.path), IngestionError);  // test batch missing
  write_cifar_batch(dir.path / "test_batch.bin", patterned(kCifarRecordsPerFile, 10));
  CHECK(has_cifar10(dir.path));
  auto [train, test] = load_cifar10(dir.path);
  CHECK(train.size() == 50000);
  CHECK(test.size() == 10000);
  CHECK(train.category_count() == 10);
  CHECK(train.id(49999) == 49999);
  CHECK(train.provenance() == Provenance::train);
  CHECK(test.provenance() == Provenance::test);
  for (std::uint32_t y : train.labels()) CHECK(y < 10);
  CHECK(train.image(12345).pixels == patterned(1, 10, 12345).image(0).pixels);
}

TEST_CASE("step dataset") {
  std::vector<StepInterval> a{{0.4, 0.6, 40000}};
  auto s = make_step_dataset(a, 1);
  CHECK(s.size() == 40000);
  for (const auto& p : s) {
    CHECK(p.x >= 0.4);
    CHECK(p.x < 0.6);
    CHECK(p.y == step_target(p.x));
  }

  std::vector<StepInterval> b{{0.0, 0.1, 20000}, {0.9, 1.0, 20000}};
  auto t = make_step_dataset(b, 2);
  REQUIRE(t.size() == 40000);
  CHECK(std::all_of(t.begin(), t.begin() + 20000, [](const StepSample& p) { return p.y == 0.0; }));
  CHECK(std::all_of(t.begin() + 20000, t.end(), [](const StepSample& p) { return p.y == 1.0; }));

  auto again = make_step_dataset(b, 2);
  CHECK(std::equal(t.begin(), t.end(), again.begin(), [](const StepSample& p, const StepSample& q) {
    return p.x == q.x && p.y == q.y;
  }));

  CHECK(step_target(0.5) == 0.0);
  CHECK(step_target(0.5000001) == 1.0);
  CHECK_THROWS_AS(make_step_dataset(std::vector<StepInterval>{}, 1), ConfigError);
  CHECK_THROWS_AS(make_step_dataset(std::vector<StepInterval>{{0.6, 0.4, 1}}, 1), ConfigError);
  CHECK_THROWS_AS(make_step_dataset(std::vector<StepInterval>{{0.0, 0.4, 0}}, 1), ConfigError);
}

TEST_CASE("subset") {
  LabeledDataset ds = patterned(10, 3);
  std::vector<SampleId> all = ds.ids();
  CHECK(same_samples(subset(ds, all), ds));

  LabeledDataset none = subset(ds, std::vector<SampleId>{});
  CHECK(none.empty());
  CHECK(none.category_names() == ds.category_names());

  LabeledDataset two = subset(ds, std::vector<SampleId>{3, 1});
  REQUIRE(two.size() == 2);
  CHECK(two.id(0) == 3);
  CHECK(two.id(1) == 1);
  CHECK(two.label(0) == ds.label(3));
  CHECK(two.image(1).pixels == ds.image(1).pixels);
  CHECK_THROWS_AS(subset(ds, std::vector<SampleId>{99}), LookupError);
}

TEST_CASE("complement partitions the dataset") {
  LabeledDataset ds = patterned(10, 3);
  std::vector<SampleId> drop{2, 5, 9};
  LabeledDataset kept = complement(ds, drop);
  CHECK(kept.size() + drop.size() == ds.size());
  for (SampleId id : drop) CHECK_FALSE(kept.contains(id));
  CHECK_THROWS_AS(complement(ds, std::vector<SampleId>{10}), LookupError);
}

TEST_CASE("remap_labels") {
  LabeledDataset ds = patterned(9, 3);
  LabeledDataset same = remap_labels(ds, {{0, 0}, {1, 1}, {2, 2}}, ds.category_names());
  CHECK(same_samples(same, ds));

  LabeledDataset merged = remap_labels(ds, {{0, 0}, {1, 0}, {2, 0}}, {"all"});
  for (std::uint32_t y : merged.labels()) CHECK(y == 0);
  std::multiset<SampleId> before(ds.ids().begin(), ds.ids().end());
  std::multiset<SampleId> after(merged.ids().begin(), merged.ids().end());
  CHECK(before == after);

  CHECK_THROWS_AS(remap_labels(ds, {{0, 0}, {1, 1}}, {"a", "b"}), ConfigError);
  CHECK_THROWS_AS(remap_labels(ds, {{0, 0}, {1, 1}, {2, 5}}, {"a", "b", "c"}), ConfigError);
}

TEST_CASE("relabel_samples moves only listed ids") {
  LabeledDataset ds = patterned(9, 3);
  auto names = ds.category_names();
  names.push_back("split");
  LabeledDataset moved = relabel_samples(ds, {{1, 3}, {4, 3}}, names);
  std::size_t in_new = 0;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    if (moved.label(i) == 3) {
      ++in_new;
      CHECK((moved.id(i) == 1 || moved.id(i) == 4));
    } else {
      CHECK(moved.label(i) == ds.label(i));
    }
  }
  CHECK(in_new == 2);
  CHECK_THROWS_AS(relabel_samples(ds, {{1, 4}}, names), ConfigError);
  CHECK_THROWS_AS(relabel_samples(ds, {{100, 3}}, names), LookupError);
}

TEST_CASE("stratified subset is balanced, seeded and sorted") {
  LabeledDataset ds = patterned(300, 10);
  LabeledDataset s = stratified_subset(ds, 50, 9);
  CHECK(s.size() == 50);
  for (std::size_t c : s.category_counts()) CHECK(c == 5);
  CHECK(std::is_sorted(s.ids().begin(), s.ids().end()));
  CHECK(same_samples(s, stratified_subset(ds, 50, 9)));
  CHECK_FALSE(same_samples(s, stratified_subset(ds, 50, 10)));
  CHECK_THROWS_AS(stratified_subset(ds, 400, 1), ConfigError);
}

TEST_CASE("extra category") {
  LabeledDataset legit = patterned(4, 2);
  LabeledDataset extra = patterned(3, 1, 1000);
  LabeledDataset both = with_extra_category(legit, extra, "noise");
  CHECK(both.size() == 7);
  CHECK(both.category_count() == 3);
  CHECK(both.category_names().back() == "noise");
  CHECK(both.label(4) == 2);
  CHECK(both.label(0) == legit.label(0));
  CHECK(both.provenance() == Provenance::mixed);
}

TEST_CASE("id lists round trip through JSON") {
  TempDir dir("ids");
  std::vector<SampleId> ids{5, 1, 1000000000123ULL};
  write_ids_json(dir.path / "ids.json", ids);
  CHECK(read_ids_json(dir.path / "ids.json") == ids);
  {
    std::ofstream(dir.path / "bad.json") << "{\"a\": 1}";
  }
  CHECK_THROWS_AS(read_ids_json(dir.path / "bad.json"), IngestionError);
  CHECK_THROWS_AS(read_ids_json(dir.path / "none.json"), IngestionError);
}

TEST_CASE("synthetic surrogate") {
  SurrogateSpec spec;
  spec.train = 200;
  spec.test = 100;
  auto [train, test] = make_surrogate(spec);
  CHECK(train.size() == 200);
  CHECK(test.size() == 100);
  CHECK(train.dims() == Dims{});
  for (std::size_t c : test.category_counts()) CHECK(c == 10);
  auto [train2, test2] = make_surrogate(spec);
  CHECK(same_samples(train, train2));
  CHECK(same_samples(test, test2));
  spec.seed = 2;
  CHECK_FALSE(same_samples(train, make_surrogate(spec).first));
  spec.categories = 1;
  CHECK_THROWS_AS(make_surrogate(spec), ConfigError);
}
