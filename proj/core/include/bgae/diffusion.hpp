#pragma once

#include <string_view>

#include <filesystem>

#include "bgae/graph.hpp"

namespace bgae {

enum class DiffusionMethod {
  Auto,          // exact for N <= exact_max_nodes, truncated otherwise
  ExactInverse,
  TruncatedSeries,
};

struct Sparsification {
  enum class Mode { None, TopK, Threshold };

  Mode mode = Mode::TopK;
  Index k = 128;
  double epsilon = 1e-4;

  static Sparsification none() { return {Mode::None, 0, 0.0}; }
  static Sparsification top_k(Index k) { return {Mode::TopK, k, 0.0}; }
  static Sparsification threshold(double eps) { return {Mode::Threshold, 0, eps}; }
};

struct DiffusionConfig {
  double alpha = 0.15;
  DiffusionMethod method = DiffusionMethod::Auto;
  /// 0 selects the smallest K with (1-alpha)^(K+1) < series_tolerance.
  int truncation_order = 0;
  double series_tolerance = 1e-7;
  Sparsification sparsify;
  bool renormalize_after_sparsify = false;
  bool symmetrize = false;
  TransitionKind kernel = TransitionKind::Symmetric;
  bool self_loops = false;
  Index exact_max_nodes = 10000;

  void validate() const;
  /// Truncation order actually used (resolves truncation_order == 0).
  int resolved_order() const;
};

/// Parsers for the textual names used in configs and on the command line.
DiffusionMethod parse_diffusion_method(std::string_view text);      // auto | exact | series
Sparsification::Mode parse_sparsification(std::string_view text);  // none | topk | threshold
TransitionKind parse_transition_kind(std::string_view text);       // symmetric | column

/// Smallest K >= 1 with (1-alpha)^(K+1) < tolerance.
int truncation_order_for(double alpha, double tolerance);

struct DiffusionMatrix {
  SparseMatrix matrix;
  DiffusionConfig config;
  /// Max-entry bound on |S - S_exact| before sparsification; 0 for the exact inverse.
  double approximation_bound = 0.0;
};

/// S = alpha (I - (1-alpha) T)^-1 by dense factorization.
DiffusionMatrix ppr_exact(const NormalizedAdjacency& transition, double alpha,
                          Index max_nodes = 10000);

/// S_K = sum_{k=0..K} alpha (1-alpha)^k T^k.
DiffusionMatrix ppr_truncated(const NormalizedAdjacency& transition, double alpha, int order);

/// Top-k per row (ties to the smaller column) or thresholding, optional row
/// renormalization to the pre-sparsification row sum, optional (S+S^T)/2.
DiffusionMatrix sparsify(const DiffusionMatrix& s, const Sparsification& mode,
                         bool renormalize = false, bool symmetrize = false);

/// Builds the transition matrix of `config.kernel` from the edges and runs the
/// configured method followed by sparsification. Rows are produced in blocks
/// and sparsified immediately, so the dense N x N matrix is never held for the
/// truncated method.
DiffusionMatrix diffuse(Index num_nodes, std::span<const Edge> edges, const DiffusionConfig& config);

/// 3-column TSV (row, col, weight) plus `<path>.json` sidecar with the config
/// and approximation bound.
void write_diffusion(const DiffusionMatrix& s, const std::filesystem::path& tsv_path);
DiffusionMatrix read_diffusion(const std::filesystem::path& tsv_path);

}  // namespace bgae
