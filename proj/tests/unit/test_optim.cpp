#include <gtest/gtest.h>

#include "bgae/errors.hpp"
#include "bgae/optim.hpp"

namespace bgae {
namespace {

struct OneParam {
  Matrix theta;
  AdamState state;
  std::vector<Matrix*> params() { return {&theta}; }
};

TEST(Adam, FirstStepMovesByLearningRate) {
  OneParam p{Matrix::Zero(2, 2), {}};
  const std::vector<Matrix> g{Matrix::Ones(2, 2)};
  adam_step(p.params(), g, p.state, {}, 0.01, 0.0);
  EXPECT_LE((p.theta.array() + 0.01).abs().maxCoeff(), 1e-9);
  EXPECT_EQ(p.state.step, 1);
}

TEST(Adam, ZeroGradientNoDecayLeavesParams) {
  OneParam p{Matrix::Random(3, 2), {}};
  const Matrix before = p.theta;
  const std::vector<Matrix> g{Matrix::Zero(3, 2)};
  for (int i = 0; i < 5; ++i) adam_step(p.params(), g, p.state, {}, 0.01, 0.0);
  EXPECT_TRUE(p.theta == before);
}

TEST(Adam, DecoupledDecayArithmetic) {
  OneParam p{Matrix::Ones(1, 1), {}};
  const std::vector<Matrix> g{Matrix::Zero(1, 1)};
  adam_step(p.params(), g, p.state, {}, 0.01, 5e-6);
  EXPECT_DOUBLE_EQ(p.theta(0, 0), 1.0 - 0.01 * 5e-6);
}

TEST(Adam, MomentRecurrences) {
  OneParam p{Matrix::Zero(1, 1), {}};
  AdamConfig cfg;
  double m = 0.0;
  double v = 0.0;
  double theta = 0.0;
  const double grads[] = {0.5, -1.0, 2.0, 0.1};
  for (int t = 1; t <= 4; ++t) {
    const double g = grads[t - 1];
    adam_step(p.params(), std::vector<Matrix>{Matrix::Constant(1, 1, g)}, p.state, cfg, 0.05, 0.0);
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mh = m / (1 - std::pow(cfg.beta1, t));
    const double vh = v / (1 - std::pow(cfg.beta2, t));
    theta -= 0.05 * mh / (std::sqrt(vh) + cfg.eps);
    EXPECT_NEAR(p.theta(0, 0), theta, 1e-14);
  }
}

TEST(Adam, NonFiniteGradientLeavesParamsUntouched) {
  OneParam p{Matrix::Ones(2, 1), {}};
  Matrix g = Matrix::Ones(2, 1);
  g(1) = std::nan("");
  EXPECT_THROW(adam_step(p.params(), std::vector<Matrix>{g}, p.state, {}, 0.01, 0.0), NumericError);
  EXPECT_TRUE(p.theta == Matrix::Ones(2, 1));
  EXPECT_EQ(p.state.step, 0);
}

TEST(Adam, ShapeMismatchRejected) {
  OneParam p{Matrix::Ones(2, 1), {}};
  EXPECT_THROW(adam_step(p.params(), std::vector<Matrix>{Matrix::Ones(1, 2)}, p.state, {}, 0.01, 0.0), ShapeError);
}

TEST(Adam, TinyLearningRateKeepsParams) {
  OneParam p{Matrix::Random(3, 3), {}};
  const Matrix before = p.theta;
  for (int i = 0; i < 100; ++i) {
    adam_step(p.params(), std::vector<Matrix>{Matrix::Random(3, 3)}, p.state, {}, 1e-300, 5e-6);
  }
  EXPECT_TRUE(p.theta == before);
}

}  // namespace
}  // namespace bgae
