#pragma once

#include <span>
#include <vector>

#include "bgae/graph.hpp"

namespace bgae {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// One bias-corrected Adam update with decoupled weight decay:
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * theta
/// Throws NumericError on a non-finite gradient, leaving params untouched.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config, double learning_rate, double weight_decay);

}  // namespace bgae
