#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bgae/graph.hpp"

namespace bgae {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

/// Writes `<dir>/params.bin` (row-major float64, little endian, concatenated)
/// and `<dir>/params.json` listing name, rows, cols and element offset.
void save_checkpoint(const std::vector<NamedMatrix>& tensors, const std::filesystem::path& dir);
std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& dir);

}  // namespace bgae
