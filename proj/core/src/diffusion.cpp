#include "bgae/diffusion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include <Eigen/LU>

#include "bgae/errors.hpp"
#include "json_io.hpp"

namespace bgae {
namespace {

using RowEntries = std::vector<std::pair<Index, double>>;

// Rows of S are processed in blocks of this many columns of S^T.
constexpr Index kBlockWidth = 256;

void sparsify_row(RowEntries& row, const Sparsification& mode, bool renormalize) {
  double before = 0.0;
  for (const auto& [col, value] : row) before += value;

  switch (mode.mode) {
    case Sparsification::Mode::None:
      break;
    case Sparsification::Mode::TopK:
      if (static_cast<Index>(row.size()) > mode.k) {
        const auto by_value = [](const auto& a, const auto& b) {
          return a.second != b.second ? a.second > b.second : a.first < b.first;
        };
        std::nth_element(row.begin(), row.begin() + mode.k, row.end(), by_value);
        row.resize(static_cast<std::size_t>(mode.k));
        std::sort(row.begin(), row.end());
      }
      break;
    case Sparsification::Mode::Threshold:
      std::erase_if(row, [&](const auto& e) { return e.second < mode.epsilon; });
      break;
  }

  if (renormalize) {
    double after = 0.0;
    for (const auto& [col, value] : row) after += value;
    if (after > 0.0) {
      const double scale = before / after;
      for (auto& e : row) e.second *= scale;
    }
  }
}

SparseMatrix assemble(Index n, const std::vector<RowEntries>& rows) {
  std::size_t nnz = 0;
  for (const auto& r : rows) nnz += r.size();
  SparseMatrix m(n, n);
  m.reserve(static_cast<Index>(nnz));
  for (Index i = 0; i < n; ++i) {
    m.startVec(i);
    for (const auto& [col, value] : rows[static_cast<std::size_t>(i)]) m.insertBack(i, col) = value;
  }
  m.finalize();
  m.makeCompressed();
  return m;
}

SparseMatrix symmetrized(const SparseMatrix& m) {
  SparseMatrix t = m.transpose();
  SparseMatrix s = 0.5 * (m + t);
  s.makeCompressed();
  return s;
}

// Drop round-off that lands on structurally zero entries.
bool keep_value(double v) { return v > 1e-15; }

// Calls `emit(first_row, block)` where column j of `block` holds row
// first_row + j of the truncated series sum_k alpha (1-alpha)^k T^k.
template <typename Emit>
void truncated_rows(const SparseMatrix& transition, double alpha, int order, Emit&& emit) {
  const Index n = transition.rows();
  const SparseMatrix transposed = transition.transpose();
  for (Index first = 0; first < n; first += kBlockWidth) {
    const Index width = std::min(kBlockWidth, n - first);
    Matrix power = Matrix::Zero(n, width);
    for (Index j = 0; j < width; ++j) power(first + j, j) = 1.0;
    Matrix acc = alpha * power;
    double theta = alpha;
    for (int k = 1; k <= order; ++k) {
      power = transposed * power;
      theta *= (1.0 - alpha);
      acc.noalias() += theta * power;
    }
    emit(first, acc);
  }
}

Matrix dense_exact(const NormalizedAdjacency& transition, double alpha) {
  const Index n = transition.matrix.rows();
  Matrix system = Matrix::Identity(n, n) - (1.0 - alpha) * Matrix(transition.matrix);
  Eigen::PartialPivLU<Matrix> lu(system);
  Matrix s = alpha * lu.inverse();
  if (!s.allFinite()) throw NumericError("ppr_exact: linear solve produced non-finite values");
  if (transition.kind == TransitionKind::Symmetric) {
    Matrix sym = 0.5 * (s + s.transpose());
    s = std::move(sym);
  }
  return s;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("teleport probability alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

}  // namespace

DiffusionMethod parse_diffusion_method(std::string_view text) { return detail::parse_method(std::string(text)); }
Sparsification::Mode parse_sparsification(std::string_view text) { return detail::parse_sparsify(std::string(text)); }
TransitionKind parse_transition_kind(std::string_view text) { return detail::parse_kernel(std::string(text)); }

void DiffusionConfig::validate() const {
  std::vector<std::string> v;
  if (!(alpha > 0.0 && alpha < 1.0)) v.push_back("alpha must lie in (0, 1)");
  if (truncation_order < 0) v.push_back("truncation order must be >= 1 (0 = automatic)");
  if (!(series_tolerance > 0.0 && series_tolerance < 1.0)) v.push_back("series tolerance must lie in (0, 1)");
  if (sparsify.mode == Sparsification::Mode::TopK && sparsify.k < 1) v.push_back("top-k requires k >= 1");
  if (sparsify.mode == Sparsification::Mode::Threshold && !(sparsify.epsilon > 0.0)) {
    v.push_back("threshold sparsification requires epsilon > 0");
  }
  if (exact_max_nodes < 1) v.push_back("exact_max_nodes must be >= 1");
  if (!v.empty()) throw ValidationError(std::move(v));
}

int truncation_order_for(double alpha, double tolerance) {
  check_alpha(alpha);
  int k = 1;
  while (std::pow(1.0 - alpha, k + 1) >= tolerance) ++k;
  return k;
}

int DiffusionConfig::resolved_order() const {
  return truncation_order > 0 ? truncation_order : truncation_order_for(alpha, series_tolerance);
}

DiffusionMatrix ppr_exact(const NormalizedAdjacency& transition, double alpha, Index max_nodes) {
  check_alpha(alpha);
  const Index n = transition.matrix.rows();
  if (n > max_nodes) {
    throw ValidationError("ppr_exact refuses N=" + std::to_string(n) + " (limit " +
                          std::to_string(max_nodes) + "); use the truncated-series method");
  }
  const Matrix s = dense_exact(transition, alpha);
  std::vector<RowEntries> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (keep_value(s(i, j))) rows[static_cast<std::size_t>(i)].emplace_back(j, s(i, j));
    }
  }
  DiffusionMatrix out;
  out.matrix = assemble(n, rows);
  out.config.alpha = alpha;
  out.config.method = DiffusionMethod::ExactInverse;
  out.config.sparsify = Sparsification::none();
  out.config.kernel = transition.kind;
  out.config.self_loops = transition.self_loops;
  out.approximation_bound = 0.0;
  return out;
}

DiffusionMatrix ppr_truncated(const NormalizedAdjacency& transition, double alpha, int order) {
  check_alpha(alpha);
  if (order < 1) throw ValidationError("truncation order K must be >= 1");
  const Index n = transition.matrix.rows();
  std::vector<RowEntries> rows(static_cast<std::size_t>(n));
  truncated_rows(transition.matrix, alpha, order, [&](Index first, const Matrix& block) {
    for (Index j = 0; j < block.cols(); ++j) {
      auto& row = rows[static_cast<std::size_t>(first + j)];
      for (Index i = 0; i < n; ++i) {
        if (keep_value(block(i, j))) row.emplace_back(i, block(i, j));
      }
    }
  });
  DiffusionMatrix out;
  out.matrix = assemble(n, rows);
  out.config.alpha = alpha;
  out.config.method = DiffusionMethod::TruncatedSeries;
  out.config.truncation_order = order;
  out.config.sparsify = Sparsification::none();
  out.config.kernel = transition.kind;
  out.config.self_loops = transition.self_loops;
  out.approximation_bound = std::pow(1.0 - alpha, order + 1);
  return out;
}

DiffusionMatrix sparsify(const DiffusionMatrix& s, const Sparsification& mode, bool renormalize,
                         bool symmetrize) {
  if (mode.mode == Sparsification::Mode::TopK && mode.k < 1) throw ValidationError("top-k requires k >= 1");
  const Index n = s.matrix.rows();
  if (s.matrix.cols() != n) throw ShapeError("sparsify: diffusion matrix must be square");
  std::vector<RowEntries> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    for (SparseMatrix::InnerIterator it(s.matrix, i); it; ++it) row.emplace_back(it.col(), it.value());
    sparsify_row(row, mode, renormalize);
  }
  DiffusionMatrix out;
  out.matrix = assemble(n, rows);
  if (symmetrize) out.matrix = symmetrized(out.matrix);
  out.config = s.config;
  out.config.sparsify = mode;
  out.config.renormalize_after_sparsify = renormalize;
  out.config.symmetrize = symmetrize;
  out.approximation_bound = s.approximation_bound;
  return out;
}

DiffusionMatrix diffuse(Index num_nodes, std::span<const Edge> edges, const DiffusionConfig& config) {
  config.validate();
  const auto transition = normalize_adjacency(num_nodes, edges, config.self_loops, config.kernel);

  DiffusionMethod method = config.method;
  if (method == DiffusionMethod::Auto) {
    method = num_nodes <= config.exact_max_nodes ? DiffusionMethod::ExactInverse
                                                  : DiffusionMethod::TruncatedSeries;
  }

  std::vector<RowEntries> rows(static_cast<std::size_t>(num_nodes));
  DiffusionMatrix out;
  out.config = config;
  out.config.method = method;

  if (method == DiffusionMethod::ExactInverse) {
    if (num_nodes > config.exact_max_nodes) {
      throw ValidationError("exact diffusion refuses N=" + std::to_string(num_nodes) +
                            "; use the truncated-series method");
    }
    const Matrix s = dense_exact(transition, config.alpha);
    for (Index i = 0; i < num_nodes; ++i) {
      auto& row = rows[static_cast<std::size_t>(i)];
      for (Index j = 0; j < num_nodes; ++j) {
        if (keep_value(s(i, j))) row.emplace_back(j, s(i, j));
      }
      sparsify_row(row, config.sparsify, config.renormalize_after_sparsify);
    }
    out.approximation_bound = 0.0;
  } else {
    const int order = config.resolved_order();
    truncated_rows(transition.matrix, config.alpha, order, [&](Index first, const Matrix& block) {
      for (Index j = 0; j < block.cols(); ++j) {
        auto& row = rows[static_cast<std::size_t>(first + j)];
        for (Index i = 0; i < num_nodes; ++i) {
          if (keep_value(block(i, j))) row.emplace_back(i, block(i, j));
        }
        sparsify_row(row, config.sparsify, config.renormalize_after_sparsify);
      }
    });
    out.config.truncation_order = order;
    out.approximation_bound = std::pow(1.0 - config.alpha, order + 1);
  }

  out.matrix = assemble(num_nodes, rows);
  if (config.symmetrize) out.matrix = symmetrized(out.matrix);
  return out;
}

void write_diffusion(const DiffusionMatrix& s, const std::filesystem::path& tsv_path) {
  if (tsv_path.has_parent_path()) std::filesystem::create_directories(tsv_path.parent_path());
  {
    std::ofstream out(tsv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tsv_path.string());
    std::string line;
    char buf[64];
    for (Index i = 0; i < s.matrix.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(s.matrix, i); it; ++it) {
        line = std::to_string(it.row());
        line += '\t';
        line += std::to_string(it.col());
        line += '\t';
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), it.value());
        line.append(buf, ptr);
        line += '\n';
        out << line;
      }
    }
  }
  nlohmann::json sidecar = {
      {"num_nodes", s.matrix.rows()},
      {"nnz", s.matrix.nonZeros()},
      {"approximation_bound", s.approximation_bound},
      {"config", detail::to_json(s.config)},
  };
  auto json_path = tsv_path;
  json_path += ".json";
  std::ofstream meta(json_path, std::ios::binary | std::ios::trunc);
  if (!meta) throw IoError("cannot write " + json_path.string());
  meta << sidecar.dump(2) << '\n';
}

DiffusionMatrix read_diffusion(const std::filesystem::path& tsv_path) {
  auto json_path = tsv_path;
  json_path += ".json";
  std::ifstream meta(json_path, std::ios::binary);
  if (!meta) throw IoError("missing diffusion sidecar " + json_path.string());
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path, 0, e.what());
  }

  DiffusionMatrix out;
  const Index n = sidecar.at("num_nodes").get<Index>();
  out.approximation_bound = sidecar.at("approximation_bound").get<double>();
  out.config = detail::diffusion_config_from_json(sidecar.at("config"));

  std::ifstream in(tsv_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + tsv_path.string());
  std::vector<Eigen::Triplet<double>> triplets;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    Index r = 0;
    Index c = 0;
    double w = 0.0;
    auto res = std::from_chars(p, end, r);
    if (res.ec != std::errc{} || res.ptr == end || *res.ptr != '\t') throw ParseError(tsv_path, lineno, "bad row index");
    res = std::from_chars(res.ptr + 1, end, c);
    if (res.ec != std::errc{} || res.ptr == end || *res.ptr != '\t') throw ParseError(tsv_path, lineno, "bad column index");
    res = std::from_chars(res.ptr + 1, end, w);
    if (res.ec != std::errc{}) throw ParseError(tsv_path, lineno, "bad weight");
    if (r < 0 || c < 0 || r >= n || c >= n) throw ParseError(tsv_path, lineno, "index out of range");
    triplets.emplace_back(r, c, w);
  }
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

}  // namespace bgae
