#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "imgspace/nn.hpp"
#include "imgspace/tensor.hpp"

namespace imgspace::data {

using SampleId = std::uint64_t;

enum class Provenance { train, test, synthetic, noise, mixed };
std::string to_string(Provenance p);

struct Dims {
  std::size_t width = 32;
  std::size_t height = 32;
  std::size_t channels = 3;

  std::size_t pixel_count() const { return width * height * channels; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// A point of Z_[0,255]^{w*h*d}; pixels are channel-planar, row-major.
struct Image {
  Dims dims;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  explicit Image(Dims d) : dims(d), pixels(d.pixel_count(), 0) {}

  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels[(c * dims.height + y) * dims.width + x];
  }
  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return pixels[(c * dims.height + y) * dims.width + x];
  }
  // pixel / 255
  std::vector<double> normalized() const;
};

// Images of uniform dims with category labels and stable ids. Treated as
// immutable once built; every transformation returns a new dataset.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  LabeledDataset(Dims dims, std::vector<std::string> category_names,
                 Provenance provenance);

  // Throws ConfigError on dims/label mismatch, StateError on a duplicate id.
  void add(Image image, std::uint32_t label, SampleId id);
  void reserve(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const Dims& dims() const { return dims_; }
  Provenance provenance() const { return provenance_; }
  const std::vector<std::string>& category_names() const { return names_; }
  std::size_t category_count() const { return names_.size(); }
  const std::vector<Image>& images() const { return images_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  const std::vector<SampleId>& ids() const { return ids_; }

  const Image& image(std::size_t i) const { return images_[i]; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  SampleId id(std::size_t i) const { return ids_[i]; }

  bool contains(SampleId id) const { return index_.count(id) != 0; }
  // Throws LookupError for an unknown id.
  std::size_t index_of(SampleId id) const;
  std::vector<std::size_t> category_counts() const;

  // Network input shape [channels, height, width].
  Shape sample_shape() const { return {dims_.channels, dims_.height, dims_.width}; }
  // Fills out with [n, c, h, w] normalized pixels for the given indices.
  void gather(std::span<const std::size_t> indices, Tensor& out) const;
  nn::Gather gatherer() const;
  nn::ClassificationSource classification_source() const;

 private:
  Dims dims_;
  std::vector<std::string> names_;
  Provenance provenance_ = Provenance::synthetic;
  std::vector<Image> images_;
  std::vector<std::uint32_t> labels_;
  std::vector<SampleId> ids_;
  std::unordered_map<SampleId, std::size_t> index_;
};

// --- CIFAR-10 binary format -------------------------------------------------

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;
std::vector<std::string> cifar10_category_names();

// Parses one batch file; ids are first_id + record index.
LabeledDataset read_cifar_batch(const std::filesystem::path& path,
                                Provenance provenance, SampleId first_id,
                                std::size_t expected_records = kCifarRecordsPerFile);
// Writes label byte + pixel planes per record. Labels must fit in a byte.
void write_cifar_batch(const std::filesystem::path& path, const LabeledDataset& ds);

// data_batch_1..5.bin -> train ids 0..49999; test_batch.bin -> test ids 0..9999.
std::pair<LabeledDataset, LabeledDataset> load_cifar10(
    const std::filesystem::path& directory);
bool has_cifar10(const std::filesystem::path& directory);

// --- Step-function data -------------------------------------------------------

struct StepSample {
  double x = 0.0;
  double y = 0.0;
};

struct StepInterval {
  double from = 0.0;  // inclusive
  double to = 0.0;    // exclusive
  std::size_t count = 0;
};

// 0 for x <= 0.5, 1 otherwise.
double step_target(double x);

// x uniform in each [from, to) in spec order, y = step_target(x).
std::vector<StepSample> make_step_dataset(std::span<const StepInterval> spec,
                                          std::uint64_t seed);

// --- Dataset manipulation -------------------------------------------------------

// Samples in the order of ids; throws LookupError on an unknown id.
LabeledDataset subset(const LabeledDataset& ds, std::span<const SampleId> ids);

// Everything except `ids` (which must all exist), in original order.
LabeledDataset complement(const LabeledDataset& ds, std::span<const SampleId> ids);

// Rewrites every label through mapping (old -> new). The mapping must cover
// each label present; new labels must index new_names.
LabeledDataset remap_labels(const LabeledDataset& ds,
                            const std::map<std::uint32_t, std::uint32_t>& mapping,
                            std::vector<std::string> new_names);

// Per-sample relabel: listed ids get their new label, the rest keep theirs.
LabeledDataset relabel_samples(const LabeledDataset& ds,
                               const std::map<SampleId, std::uint32_t>& new_labels,
                               std::vector<std::string> new_names);

// Equal per-category counts (total / categories each), chosen by a seeded
// shuffle; output is sorted by id.
LabeledDataset stratified_subset(const LabeledDataset& ds, std::size_t total,
                                 std::uint64_t seed);

// Legitimate samples followed by `extra` relabeled to a new last category.
LabeledDataset with_extra_category(const LabeledDataset& legit,
                                   const LabeledDataset& extra,
                                   const std::string& name);

// Id lists as a JSON array of integers.
void write_ids_json(const std::filesystem::path& path, std::span<const SampleId> ids);
std::vector<SampleId> read_ids_json(const std::filesystem::path& path);

}  // namespace imgspace::data
