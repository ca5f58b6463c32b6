#include "bgae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "bgae/errors.hpp"

namespace bgae {
namespace fs = std::filesystem;

namespace {

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

}  // namespace

void save_checkpoint(const std::vector<NamedMatrix>& tensors, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "float64-le-rowmajor";
  manifest["tensors"] = nlohmann::json::array();

  std::ofstream bin(dir / "params.bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + (dir / "params.bin").string());
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    manifest["tensors"].push_back(
        {{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"offset", offset}});
    for (Index i = 0; i < t.value.rows(); ++i) {
      for (Index j = 0; j < t.value.cols(); ++j) {
        const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(t.value(i, j)));
        bin.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
      }
    }
    offset += static_cast<std::uint64_t>(t.value.size());
  }
  if (!bin) throw IoError("short write to " + (dir / "params.bin").string());

  std::ofstream json_out(dir / "params.json", std::ios::binary | std::ios::trunc);
  if (!json_out) throw IoError("cannot write " + (dir / "params.json").string());
  json_out << manifest.dump(2) << '\n';
}

std::vector<NamedMatrix> load_checkpoint(const fs::path& dir) {
  const auto json_path = dir / "params.json";
  std::ifstream json_in(json_path, std::ios::binary);
  if (!json_in) throw IoError("missing checkpoint manifest " + json_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(json_in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path, 0, e.what());
  }

  const auto bin_path = dir / "params.bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("missing checkpoint data " + bin_path.string());

  std::vector<NamedMatrix> out;
  for (const auto& entry : manifest.at("tensors")) {
    NamedMatrix t;
    t.name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Index>();
    const auto cols = entry.at("cols").get<Index>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    t.value.resize(rows, cols);
    bin.seekg(static_cast<std::streamoff>(offset * sizeof(std::uint64_t)));
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        std::uint64_t bits = 0;
        bin.read(reinterpret_cast<char*>(&bits), sizeof(bits));
        t.value(i, j) = std::bit_cast<double>(to_little_endian(bits));
      }
    }
    if (!bin) throw IoError("checkpoint data truncated at tensor '" + t.name + "'");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace bgae
