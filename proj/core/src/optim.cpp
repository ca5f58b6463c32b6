#include "bgae/optim.hpp"

#include <cmath>
#include <string>

#include "bgae/errors.hpp"

namespace bgae {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config, double learning_rate, double weight_decay) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->rows() != grads[k].rows() || params[k]->cols() != grads[k].cols()) {
      throw ShapeError("adam_step: gradient shape mismatch for parameter #" + std::to_string(k));
    }
    if (!grads[k].allFinite()) {
      throw NumericError("adam_step: non-finite gradient for parameter #" + std::to_string(k));
    }
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameters");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& theta = *params[k];
    const auto& g = grads[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    const auto m_hat = m.array() / correction1;
    const auto v_hat = v.array() / correction2;
    theta.array() -= learning_rate * (m_hat / (v_hat.sqrt() + config.eps)) +
                     learning_rate * weight_decay * theta.array();
  }
}

}  // namespace bgae
