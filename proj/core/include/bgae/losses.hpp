#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bgae/tensor.hpp"

namespace bgae {

/// Arguments of every log in the losses are clamped to at least this value.
inline constexpr double kLogFloor = 1e-12;

struct LossConfig {
  /// Weight of the covariance loss in L = L_recon + beta * L_cov.
  double beta = 1.0;
  /// Trade-off between the diagonal and off-diagonal covariance terms.
  double lambda = 5e-3;
  bool variational = false;
  /// Positive A-edges (and S-pairs) sampled per iteration; 0 = all training edges.
  Index edge_batch = 0;

  void validate() const;
};

/// Node pairs with BCE targets in [0, 1].
struct LabeledPairs {
  std::vector<Edge> pairs;
  Vector targets;

  std::size_t size() const noexcept { return pairs.size(); }
  /// positives get target 1, negatives 0.
  static LabeledPairs binary(std::span<const Edge> positives, std::span<const Edge> negatives);
  /// Soft positives with the given targets, negatives 0.
  static LabeledPairs soft(std::span<const Edge> positives, std::span<const double> weights,
                           std::span<const Edge> negatives);
};

/// c_lm = sigmoid(|sum_b (z_bl - mean_l)(z'_bm - mean'_m)|), a d x d tensor.
/// Requires at least two rows.
Tensor covariance_entries(const Tensor& z_local, const Tensor& z_diffused);

struct CovarianceLoss {
  Tensor diagonal;      // -(1/N) sum_m log c_mm
  Tensor off_diagonal;  // -(lambda / (N (N-1))) sum_{l != m} log(1 - c_lm)
  Tensor total;
};

/// `num_nodes` is the N in both normalizers.
CovarianceLoss covariance_loss(const Tensor& c, double lambda, Index num_nodes);

/// Mean binary cross-entropy of probabilities against targets.
Tensor binary_cross_entropy(const Tensor& probabilities, const Vector& targets);

/// -1/2 sum(1 + log_var - mu^2 - exp(log_var)) divided by the number of rows.
Tensor kl_standard_normal(const Tensor& mu, const Tensor& log_var);

struct VariationalTerms {
  Tensor mu_local;
  Tensor log_var_local;
  Tensor mu_diffused;
  Tensor log_var_diffused;
};

struct ReconstructionLoss {
  Tensor bce_adjacency;
  Tensor bce_diffusion;
  std::optional<Tensor> kl_local;
  std::optional<Tensor> kl_diffused;
  Tensor total;
};

/// BCE(A-samples) + BCE(S-samples) [+ KL terms for the variational variant].
ReconstructionLoss reconstruction_loss(const Tensor& z, const LabeledPairs& adjacency_samples,
                                       const LabeledPairs& diffusion_samples,
                                       const VariationalTerms* variational);

Tensor total_loss(const Tensor& reconstruction, const Tensor& covariance, double beta);

}  // namespace bgae
