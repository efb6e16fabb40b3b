#include <array>
#include <fstream>

#include "imgspace/data.hpp"
#include "imgspace/errors.hpp"

namespace imgspace::data {

std::vector<std::string> cifar10_category_names() {
  return {"airplane", "automobile", "bird", "cat", "deer",
          "dog",      "frog",       "horse", "ship", "truck"};
}

LabeledDataset read_cifar_batch(const std::filesystem::path& path,
                                Provenance provenance, SampleId first_id,
                                std::size_t expected_records) {
  const std::size_t expected_bytes = expected_records * kCifarRecordBytes;
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path, ec);
  if (ec) {
    throw IngestionError(path.string() + ": cannot stat (" + ec.message() + ")");
  }
  if (actual != expected_bytes) {
    throw IngestionError(path.string() + ": expected " +
                         std::to_string(expected_bytes) + " bytes (" +
                         std::to_string(expected_records) + " records of " +
                         std::to_string(kCifarRecordBytes) + "), found " +
                         std::to_string(actual));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string() + ": cannot open");

  LabeledDataset ds(Dims{}, cifar10_category_names(), provenance);
  ds.reserve(expected_records);
  std::array<char, kCifarRecordBytes> record;
  for (std::size_t r = 0; r < expected_records; ++r) {
    if (!in.read(record.data(), record.size())) {
      throw IngestionError(path.string() + ": short read at record " + std::to_string(r));
    }
    const auto label = static_cast<std::uint8_t>(record[0]);
    if (label >= 10) {
      throw IngestionError(path.string() + ": record " + std::to_string(r) +
                           " has label " + std::to_string(label) + " outside [0,9]");
    }
    Image img(Dims{});
    for (std::size_t j = 0; j + 1 < kCifarRecordBytes; ++j) {
      img.pixels[j] = static_cast<std::uint8_t>(record[j + 1]);
    }
    ds.add(std::move(img), label, first_id + r);
  }
  return ds;
}

void write_cifar_batch(const std::filesystem::path& path, const LabeledDataset& ds) {
  if (!(ds.dims() == Dims{})) {
    throw ConfigError("CIFAR records hold 3x32x32 images only");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.label(i) > 255) throw ConfigError("label does not fit in one byte");
    out.put(static_cast<char>(ds.label(i)));
    out.write(reinterpret_cast<const char*>(ds.image(i).pixels.data()),
              static_cast<std::streamsize>(ds.image(i).pixels.size()));
  }
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

std::filesystem::path train_file(const std::filesystem::path& dir, int i) {
  return dir / ("data_batch_" + std::to_string(i) + ".bin");
}

}  // namespace

bool has_cifar10(const std::filesystem::path& directory) {
  for (int i = 1; i <= 5; ++i) {
    if (!std::filesystem::exists(train_file(directory, i))) return false;
  }
  return std::filesystem::exists(directory / "test_batch.bin");
}

std::pair<LabeledDataset, LabeledDataset> load_cifar10(
    const std::filesystem::path& directory) {
  LabeledDataset train(Dims{}, cifar10_category_names(), Provenance::train);
  train.reserve(5 * kCifarRecordsPerFile);
  for (int i = 1; i <= 5; ++i) {
    const auto path = train_file(directory, i);
    if (!std::filesystem::exists(path)) {
      throw IngestionError(path.string() + ": missing CIFAR-10 batch file");
    }
    auto part = read_cifar_batch(path, Provenance::train,
                                 static_cast<SampleId>(i - 1) * kCifarRecordsPerFile);
    for (std::size_t r = 0; r < part.size(); ++r) {
      train.add(part.image(r), part.label(r), part.id(r));
    }
  }
  const auto test_path = directory / "test_batch.bin";
  if (!std::filesystem::exists(test_path)) {
    throw IngestionError(test_path.string() + ": missing CIFAR-10 batch file");
  }
  auto test = read_cifar_batch(test_path, Provenance::test, 0);
  return {std::move(train), std::move(test)};
}

}  // namespace imgspace::data
