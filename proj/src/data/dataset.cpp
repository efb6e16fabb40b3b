#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"

#include "imgspace/data.hpp"
#include "imgspace/errors.hpp"
#include "imgspace/rng.hpp"

namespace imgspace::data {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::train: return "train";
    case Provenance::test: return "test";
    case Provenance::synthetic: return "synthetic";
    case Provenance::noise: return "noise";
    case Provenance::mixed: return "mixed";
  }
  return "unknown";
}

std::vector<double> Image::normalized() const {
  std::vector<double> out(pixels.size());
  std::transform(pixels.begin(), pixels.end(), out.begin(),
                 [](std::uint8_t p) { return p / 255.0; });
  return out;
}

LabeledDataset::LabeledDataset(Dims dims, std::vector<std::string> category_names,
                               Provenance provenance)
    : dims_(dims), names_(std::move(category_names)), provenance_(provenance) {
  if (dims_.pixel_count() == 0) throw ConfigError("image dims must be positive");
}

void LabeledDataset::reserve(std::size_t n) {
  images_.reserve(n);
  labels_.reserve(n);
  ids_.reserve(n);
  index_.reserve(n);
}

void LabeledDataset::add(Image image, std::uint32_t label, SampleId id) {
  if (!(image.dims == dims_) || image.pixels.size() != dims_.pixel_count()) {
    throw ConfigError("image dims do not match dataset dims");
  }
  if (label >= names_.size()) {
    throw ConfigError("label " + std::to_string(label) + " >= category count " +
                      std::to_string(names_.size()));
  }
  if (!index_.emplace(id, labels_.size()).second) {
    throw StateError("duplicate sample id " + std::to_string(id));
  }
  images_.push_back(std::move(image));
  labels_.push_back(label);
  ids_.push_back(id);
}

std::size_t LabeledDataset::index_of(SampleId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("unknown sample id " + std::to_string(id));
  return it->second;
}

std::vector<std::size_t> LabeledDataset::category_counts() const {
  std::vector<std::size_t> counts(names_.size(), 0);
  for (auto l : labels_) ++counts[l];
  return counts;
}

void LabeledDataset::gather(std::span<const std::size_t> indices, Tensor& out) const {
  const std::size_t n = dims_.pixel_count();
  Shape shape{indices.size(), dims_.channels, dims_.height, dims_.width};
  if (out.shape() != shape) out = Tensor(std::move(shape));
  double* dst = out.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& px = images_.at(indices[i]).pixels;
    for (std::size_t j = 0; j < n; ++j) dst[i * n + j] = px[j] / 255.0;
  }
}

nn::Gather LabeledDataset::gatherer() const {
  return [this](std::span<const std::size_t> idx, Tensor& out) { gather(idx, out); };
}

nn::ClassificationSource LabeledDataset::classification_source() const {
  return {size(), gatherer(), labels_};
}

// ---------------------------------------------------------------------------

LabeledDataset subset(const LabeledDataset& ds, std::span<const SampleId> ids) {
  LabeledDataset out(ds.dims(), ds.category_names(), ds.provenance());
  out.reserve(ids.size());
  for (SampleId id : ids) {
    const std::size_t i = ds.index_of(id);
    out.add(ds.image(i), ds.label(i), id);
  }
  return out;
}

LabeledDataset complement(const LabeledDataset& ds, std::span<const SampleId> ids) {
  std::set<SampleId> drop;
  for (SampleId id : ids) {
    ds.index_of(id);  // validates
    drop.insert(id);
  }
  LabeledDataset out(ds.dims(), ds.category_names(), ds.provenance());
  out.reserve(ds.size() - drop.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!drop.count(ds.id(i))) out.add(ds.image(i), ds.label(i), ds.id(i));
  }
  return out;
}

LabeledDataset remap_labels(const LabeledDataset& ds,
                            const std::map<std::uint32_t, std::uint32_t>& mapping,
                            std::vector<std::string> new_names) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!mapping.count(ds.label(i))) {
      throw ConfigError("label mapping has no entry for category " +
                        std::to_string(ds.label(i)));
    }
  }
  for (const auto& [from, to] : mapping) {
    if (to >= new_names.size()) {
      throw ConfigError("mapping target " + std::to_string(to) +
                        " exceeds new category count " +
                        std::to_string(new_names.size()));
    }
  }
  LabeledDataset out(ds.dims(), std::move(new_names), ds.provenance());
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.add(ds.image(i), mapping.at(ds.label(i)), ds.id(i));
  }
  return out;
}

LabeledDataset relabel_samples(const LabeledDataset& ds,
                               const std::map<SampleId, std::uint32_t>& new_labels,
                               std::vector<std::string> new_names) {
  for (const auto& [id, label] : new_labels) {
    ds.index_of(id);
    if (label >= new_names.size()) {
      throw ConfigError("relabel target " + std::to_string(label) +
                        " exceeds new category count " +
                        std::to_string(new_names.size()));
    }
  }
  LabeledDataset out(ds.dims(), std::move(new_names), ds.provenance());
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto it = new_labels.find(ds.id(i));
    out.add(ds.image(i), it == new_labels.end() ? ds.label(i) : it->second, ds.id(i));
  }
  return out;
}

LabeledDataset stratified_subset(const LabeledDataset& ds, std::size_t total,
                                 std::uint64_t seed) {
  const std::size_t c = ds.category_count();
  if (c == 0) throw ConfigError("dataset has no categories");
  const std::size_t per = total / c;
  std::vector<std::vector<std::size_t>> by_cat(c);
  for (std::size_t i = 0; i < ds.size(); ++i) by_cat[ds.label(i)].push_back(i);
  std::vector<SampleId> chosen;
  for (std::size_t k = 0; k < c; ++k) {
    if (by_cat[k].size() < per) {
      throw ConfigError("category " + std::to_string(k) + " has only " +
                        std::to_string(by_cat[k].size()) + " samples, need " +
                        std::to_string(per));
    }
    Rng rng = make_rng(seed, k);
    const auto order = nn::shuffled_order(by_cat[k].size(), rng);
    for (std::size_t j = 0; j < per; ++j) chosen.push_back(ds.id(by_cat[k][order[j]]));
  }
  std::sort(chosen.begin(), chosen.end());
  return subset(ds, chosen);
}

LabeledDataset with_extra_category(const LabeledDataset& legit,
                                   const LabeledDataset& extra,
                                   const std::string& name) {
  if (!extra.empty() && !(extra.dims() == legit.dims())) {
    throw ConfigError("extra category images have different dims");
  }
  auto names = legit.category_names();
  names.push_back(name);
  const auto label = static_cast<std::uint32_t>(names.size() - 1);
  LabeledDataset out(legit.dims(), std::move(names), Provenance::mixed);
  out.reserve(legit.size() + extra.size());
  for (std::size_t i = 0; i < legit.size(); ++i) {
    out.add(legit.image(i), legit.label(i), legit.id(i));
  }
  for (std::size_t i = 0; i < extra.size(); ++i) {
    out.add(extra.image(i), label, extra.id(i));
  }
  return out;
}

void write_ids_json(const std::filesystem::path& path, std::span<const SampleId> ids) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << nlohmann::json(std::vector<SampleId>(ids.begin(), ids.end())).dump() << '\n';
}

std::vector<SampleId> read_ids_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<std::vector<SampleId>>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(path.string() + ": not a JSON id list (" + e.what() + ")");
  }
}

}  // namespace imgspace::data
