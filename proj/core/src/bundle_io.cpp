#include <charconv>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bgae/errors.hpp"
#include "bgae/graph.hpp"

namespace bgae {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

json read_json(const fs::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

void append_double(std::string& out, double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

Index meta_field(const json& meta, const char* name, const fs::path& path) {
  if (!meta.contains(name) || !meta[name].is_number_integer()) {
    throw ParseError(path, 1, std::string("field '") + name + "' missing or not an integer");
  }
  return meta[name].get<Index>();
}

std::vector<bool> ids_to_mask(const json& splits, const char* name, Index n, const fs::path& path,
                              std::vector<std::string>& violations) {
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  if (!splits.contains(name)) return mask;
  if (!splits[name].is_array()) throw ParseError(path, 1, std::string("'") + name + "' is not an array");
  for (const auto& id : splits[name]) {
    if (!id.is_number_integer()) throw ParseError(path, 1, std::string("non-integer id in '") + name + "'");
    const auto i = id.get<Index>();
    if (i < 0 || i >= n) {
      violations.push_back(std::string("split '") + name + "' id " + std::to_string(i) + " out of range");
      continue;
    }
    mask[static_cast<std::size_t>(i)] = true;
  }
  return mask;
}

}  // namespace

DatasetBundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());

  const auto meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);
  const Index n = meta_field(meta, "num_nodes", meta_path);
  const Index f = meta_field(meta, "num_features", meta_path);
  const Index c = meta_field(meta, "num_classes", meta_path);
  if (n < 1 || f < 0 || c < 1) throw ValidationError("meta.json: sizes must be positive");

  std::vector<std::string> violations;
  std::string line;

  const auto edges_path = dir / "edges.tsv";
  std::vector<Edge> edges;
  {
    auto in = open_input(edges_path);
    EdgeSet seen;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto text = trim(line);
      if (text.empty()) continue;
      const auto tab = text.find('\t');
      Index a = 0;
      Index b = 0;
      if (tab == std::string_view::npos || !parse_number(text.substr(0, tab), a) ||
          !parse_number(text.substr(tab + 1), b)) {
        throw ParseError(edges_path, lineno, "expected two tab-separated integers");
      }
      const std::string where = edges_path.filename().string() + ":" + std::to_string(lineno);
      if (a < 0 || b < 0 || a >= n || b >= n) {
        violations.push_back(where + ": endpoint out of range");
        continue;
      }
      if (a == b) {
        violations.push_back(where + ": self loop (" + std::to_string(a) + "," + std::to_string(b) + ")");
        continue;
      }
      if (a > b) violations.push_back(where + ": edge not written as i<j");
      if (!seen.insert(a, b)) {
        violations.push_back(where + ": duplicate edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
        continue;
      }
      edges.push_back(Edge::canonical(a, b));
    }
  }

  const auto features_path = dir / "features.csv";
  SparseMatrix features(n, f);
  {
    auto in = open_input(features_path);
    std::vector<Eigen::Triplet<double>> triplets;
    Index row = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view text = trim(line);
      if (text.empty()) continue;
      if (row >= n) throw ParseError(features_path, lineno, "more than num_nodes rows");
      Index col = 0;
      while (true) {
        const auto comma = text.find(',');
        const auto cell = text.substr(0, comma);
        double value = 0.0;
        if (!parse_number(cell, value)) {
          throw ParseError(features_path, lineno, "column " + std::to_string(col + 1) + ": not a real number");
        }
        if (col >= f) throw ParseError(features_path, lineno, "more than num_features columns");
        if (value != 0.0) triplets.emplace_back(row, col, value);
        ++col;
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
      }
      if (col != f) {
        throw ParseError(features_path, lineno,
                         "expected " + std::to_string(f) + " columns, found " + std::to_string(col));
      }
      ++row;
    }
    if (row != n) {
      throw ParseError(features_path, lineno, "expected " + std::to_string(n) + " rows, found " + std::to_string(row));
    }
    features.setFromTriplets(triplets.begin(), triplets.end());
  }

  const auto labels_path = dir / "labels.txt";
  std::vector<int> labels;
  {
    auto in = open_input(labels_path);
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto text = trim(line);
      if (text.empty()) continue;
      int value = 0;
      if (!parse_number(text, value)) throw ParseError(labels_path, lineno, "expected an integer label");
      labels.push_back(value);
    }
  }

  const auto splits_path = dir / "splits.json";
  const json splits = read_json(splits_path);
  SplitMasks masks;
  masks.train = ids_to_mask(splits, "train", n, splits_path, violations);
  masks.val = ids_to_mask(splits, "val", n, splits_path, violations);
  masks.test = ids_to_mask(splits, "test", n, splits_path, violations);

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return DatasetBundle::create(n, c, std::move(edges), std::move(features), std::move(labels),
                               std::move(masks));
}

void save_bundle(const DatasetBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  {
    json meta = {{"num_nodes", bundle.num_nodes()},
                 {"num_features", bundle.num_features()},
                 {"num_classes", bundle.num_classes()}};
    open_output(dir / "meta.json") << meta.dump() << '\n';
  }
  {
    std::string out;
    for (const auto& e : bundle.edges()) {
      out += std::to_string(e.u);
      out += '\t';
      out += std::to_string(e.v);
      out += '\n';
    }
    open_output(dir / "edges.tsv") << out;
  }
  {
    auto file = open_output(dir / "features.csv");
    const auto& x = bundle.features();
    std::string row;
    for (Index r = 0; r < x.rows(); ++r) {
      row.clear();
      SparseMatrix::InnerIterator it(x, r);
      for (Index col = 0; col < x.cols(); ++col) {
        if (col > 0) row += ',';
        if (it && it.col() == col) {
          append_double(row, it.value());
          ++it;
        } else {
          row += '0';
        }
      }
      row += '\n';
      file << row;
    }
  }
  {
    std::string out;
    for (int label : bundle.labels()) {
      out += std::to_string(label);
      out += '\n';
    }
    open_output(dir / "labels.txt") << out;
  }
  {
    json splits = {{"train", bundle.masks().train_ids()},
                   {"val", bundle.masks().val_ids()},
                   {"test", bundle.masks().test_ids()}};
    open_output(dir / "splits.json") << splits.dump() << '\n';
  }
}

}  // namespace bgae
