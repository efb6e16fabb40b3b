#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "imgspace/errors.hpp"
#include "imgspace/nn.hpp"

namespace imgspace::nn {

namespace {

constexpr const char* kMagic = "imgspace-params";

std::string manifest(const Network& net) {
  std::ostringstream os;
  os << kMagic << ' ' << net.parameters().size();
  for (const auto& p : net.parameters()) os << ' ' << imgspace::to_string(p.shape());
  return os.str();
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = __builtin_bswap64(v);
  }
  return v;
}

}  // namespace

void save_parameters(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << manifest(net) << '\n';
  for (const auto& p : net.parameters()) {
    for (double v : p.values()) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

void load_parameters(Network& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint " + path.string());
  std::string header;
  std::getline(in, header);
  const std::string expected = manifest(net);
  if (header != expected) {
    throw IngestionError(path.string() + ": manifest '" + header +
                         "' does not match network '" + expected + "'");
  }
  for (auto& p : net.parameters()) {
    for (double& v : p.values()) {
      std::uint64_t bits;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
        throw IngestionError(path.string() + ": truncated, expected " +
                             std::to_string(net.parameter_count() * 8) +
                             " payload bytes");
      }
      v = std::bit_cast<double>(to_little_endian(bits));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IngestionError(path.string() + ": trailing bytes after parameters");
  }
}

}  // namespace imgspace::nn
