#include "bgae/losses.hpp"
#include <algorithm>

#include <cmath>
#include <string>

#include "bgae/errors.hpp"
#include "bgae/model.hpp"

namespace bgae {

void LossConfig::validate() const {
  std::vector<std::string> v;
  if (!(std::isfinite(beta) && beta >= 0.0)) v.push_back("beta must be finite and >= 0");
  if (!(std::isfinite(lambda) && lambda >= 0.0)) v.push_back("lambda must be finite and >= 0");
  if (edge_batch < 0) v.push_back("edge_batch must be >= 0");
  if (!v.empty()) throw ValidationError(std::move(v));
}

LabeledPairs LabeledPairs::binary(std::span<const Edge> positives, std::span<const Edge> negatives) {
  LabeledPairs out;
  out.pairs.reserve(positives.size() + negatives.size());
  out.pairs.insert(out.pairs.end(), positives.begin(), positives.end());
  out.pairs.insert(out.pairs.end(), negatives.begin(), negatives.end());
  out.targets = Vector::Zero(static_cast<Index>(out.pairs.size()));
  out.targets.head(static_cast<Index>(positives.size())).setOnes();
  return out;
}

LabeledPairs LabeledPairs::soft(std::span<const Edge> positives, std::span<const double> weights,
                                std::span<const Edge> negatives) {
  if (weights.size() != positives.size()) throw ShapeError("soft targets: one weight per positive pair required");
  LabeledPairs out = binary(positives, negatives);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.targets[static_cast<Index>(k)] = std::clamp(weights[k], 0.0, 1.0);
  }
  return out;
}

Tensor covariance_entries(const Tensor& z_local, const Tensor& z_diffused) {
  if (z_local.rows() != z_diffused.rows() || z_local.cols() != z_diffused.cols()) {
    throw ShapeError("covariance_entries: view embeddings differ in shape");
  }
  if (z_local.rows() < 2) throw ValidationError("covariance_entries requires at least two nodes");
  const Tensor cross = matmul_tn(center_columns(z_local), center_columns(z_diffused));
  return sigmoid(abs(cross));
}

CovarianceLoss covariance_loss(const Tensor& c, double lambda, Index num_nodes) {
  if (c.rows() != c.cols()) throw ShapeError("covariance_loss: matrix must be square");
  if (num_nodes < 2) throw ValidationError("covariance_loss requires N >= 2");
  auto& tape = c.tape();
  const Index d = c.rows();
  const Tensor diag_mask = tape.constant(Matrix::Identity(d, d));
  const Tensor off_mask = tape.constant(Matrix::Ones(d, d) - Matrix::Identity(d, d));
  const double n = static_cast<double>(num_nodes);

  CovarianceLoss out;
  const Tensor log_c = log(clamp_min(c, kLogFloor));
  out.diagonal = scalar_mul(sum(mul(log_c, diag_mask)), -1.0 / n);
  const Tensor one_minus_c = add_scalar(scalar_mul(c, -1.0), 1.0);
  const Tensor log_one_minus_c = log(clamp_min(one_minus_c, kLogFloor));
  out.off_diagonal = scalar_mul(sum(mul(log_one_minus_c, off_mask)), -lambda / (n * (n - 1.0)));
  out.total = add(out.diagonal, out.off_diagonal);
  return out;
}

Tensor binary_cross_entropy(const Tensor& probabilities, const Vector& targets) {
  if (probabilities.cols() != 1 || probabilities.rows() != targets.size()) {
    throw ShapeError("binary_cross_entropy: probabilities must be a column matching targets");
  }
  if (targets.size() == 0) throw ValidationError("binary_cross_entropy: empty sample set");
  auto& tape = probabilities.tape();
  const Tensor y = tape.constant(targets);
  const Tensor one_minus_y = tape.constant((1.0 - targets.array()).matrix());
  const Tensor log_p = log(clamp_min(probabilities, kLogFloor));
  const Tensor log_q = log(clamp_min(add_scalar(scalar_mul(probabilities, -1.0), 1.0), kLogFloor));
  return scalar_mul(mean(add(mul(y, log_p), mul(one_minus_y, log_q))), -1.0);
}

Tensor kl_standard_normal(const Tensor& mu, const Tensor& log_var) {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols()) {
    throw ShapeError("kl_standard_normal: mu and log_var differ in shape");
  }
  const Tensor inner = add_scalar(sub(sub(log_var, mul(mu, mu)), exp(log_var)), 1.0);
  return scalar_mul(sum(inner), -0.5 / static_cast<double>(mu.rows()));
}

ReconstructionLoss reconstruction_loss(const Tensor& z, const LabeledPairs& adjacency_samples,
                                       const LabeledPairs& diffusion_samples,
                                       const VariationalTerms* variational) {
  if (adjacency_samples.size() == 0 || diffusion_samples.size() == 0) {
    throw ValidationError("reconstruction_loss: empty sample set");
  }
  ReconstructionLoss out;
  out.bce_adjacency = binary_cross_entropy(decode_edges(z, adjacency_samples.pairs), adjacency_samples.targets);
  out.bce_diffusion = binary_cross_entropy(decode_edges(z, diffusion_samples.pairs), diffusion_samples.targets);
  out.total = add(out.bce_adjacency, out.bce_diffusion);
  if (variational != nullptr) {
    out.kl_local = kl_standard_normal(variational->mu_local, variational->log_var_local);
    out.kl_diffused = kl_standard_normal(variational->mu_diffused, variational->log_var_diffused);
    out.total = add(out.total, add(*out.kl_local, *out.kl_diffused));
  }
  return out;
}

Tensor total_loss(const Tensor& reconstruction, const Tensor& covariance, double beta) {
  return add(reconstruction, scalar_mul(covariance, beta));
}

}  // namespace bgae
