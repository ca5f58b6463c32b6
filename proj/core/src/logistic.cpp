#include <cmath>
#include <deque>
#include <string>

#include "bgae/errors.hpp"
#include "bgae/evaluation.hpp"

namespace bgae {
namespace {

/// Parameters packed as [vec(W) (d*C, column-major); b (C)].
struct Objective {
  const Matrix& x;
  const Matrix& onehot;
  double l2;

  Index d() const { return x.cols(); }
  Index c() const { return onehot.cols(); }

  double operator()(const Vector& theta, Vector& grad) const {
    const Eigen::Map<const Matrix> w(theta.data(), d(), c());
    const auto b = theta.tail(c());
    Matrix logits = x * w;
    logits.rowwise() += b.transpose();
    const Vector row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    Matrix p = logits.array().exp().matrix();
    const Vector z = p.rowwise().sum();
    const Vector log_z = z.array().log().matrix();
    double value = -(onehot.cwiseProduct(logits).sum() - log_z.sum());
    value += 0.5 * l2 * w.squaredNorm();
    p.array().colwise() /= z.array();
    const Matrix residual = p - onehot;

    grad.resize(theta.size());
    Eigen::Map<Matrix> gw(grad.data(), d(), c());
    gw = x.transpose() * residual + l2 * w;
    grad.tail(c()) = residual.colwise().sum().transpose();
    return value;
  }
};

}  // namespace

std::vector<int> LogisticModel::predict(const Matrix& x) const {
  if (x.cols() != weights.rows()) throw ShapeError("logistic predict: feature dimension mismatch");
  Matrix logits = x * weights;
  logits.rowwise() += bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> labels, int num_classes,
                           const LogisticOptions& options) {
  std::vector<std::string> problems;
  if (static_cast<std::size_t>(x.rows()) != labels.size()) problems.push_back("logistic: one label per row required");
  if (x.rows() == 0) problems.push_back("logistic: no training rows");
  if (num_classes < 2) problems.push_back("logistic: at least two classes required");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      problems.push_back("logistic: label " + std::to_string(y) + " out of range");
      break;
    }
  }
  if (!(options.l2 >= 0.0)) problems.push_back("logistic: l2 must be non-negative");
  if (options.max_iterations < 1 || options.history < 1) problems.push_back("logistic: iteration limits must be positive");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  Matrix onehot = Matrix::Zero(x.rows(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) onehot(static_cast<Index>(i), labels[i]) = 1.0;
  const Objective f{x, onehot, options.l2};

  Vector theta = Vector::Zero(x.cols() * num_classes + num_classes);
  Vector grad;
  double value = f(theta, grad);
  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;

  LogisticModel model;
  int iter = 0;
  while (iter < options.max_iterations) {
    if (grad.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      model.converged = true;
      break;
    }
    ++iter;

    // Two-loop recursion for the search direction.
    Vector q = grad;
    std::vector<double> alphas(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alphas[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alphas[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alphas[k] - beta) * s_hist[k];
    }
    Vector direction = -q;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      direction = -grad;
      slope = -grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Backtracking line search with the Armijo condition.
    double step = s_hist.empty() ? std::min(1.0, 1.0 / grad.lpNorm<Eigen::Infinity>()) : 1.0;
    Vector next;
    Vector next_grad;
    double next_value = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      next = theta + step * direction;
      next_value = f(next, next_grad);
      if (std::isfinite(next_value) && next_value <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector s = next - theta;
    Vector y = next_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(next);
    grad = std::move(next_grad);
    value = next_value;
  }
  if (!model.converged && grad.lpNorm<Eigen::Infinity>() <= options.tolerance) model.converged = true;

  model.weights = Eigen::Map<const Matrix>(theta.data(), x.cols(), num_classes);
  model.bias = theta.tail(num_classes);
  model.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  model.iterations = iter;
  return model;
}

std::vector<int> logistic_head(const Matrix& train_x, std::span<const int> train_y, const Matrix& eval_x,
                               int num_classes, const LogisticOptions& options) {
  return fit_logistic(train_x, train_y, num_classes, options).predict(eval_x);
}

}  // namespace bgae
