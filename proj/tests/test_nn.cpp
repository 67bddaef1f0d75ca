// tests/test_nn.cpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"
#include "vaereg/nn.hpp"

namespace vaereg {
namespace {

using testing::random_matrix;
using testing::rel_err;

// Scalar objective used by the finite-difference checks: sum(G .* output).
double objective(const Mlp &mlp, const Matrix &x, const Matrix &g) {
  const Matrix out = predict(mlp, x);
  double s = 0.0;
  for (std::size_t i = 0; i < out.data().size(); ++i) s += out.data()[i] * g.data()[i];
  return s;
}

void check_finite_differences(Mlp mlp, const Matrix &x, const Matrix &g) {
  for (auto &layer : mlp.layers)  // nonzero biases exercise the bias path
    for (std::size_t k = 0; k < layer.bias.size(); ++k)
      layer.bias[k] = 0.1 * static_cast<double>(k % 3);
  const GradientSet grads = backward(mlp, forward(mlp, x), g);
  const double h = 1e-5;
  auto check = [&](double &param, double analytic, const std::string &what) {
    const double keep = param;
    param = keep + h;
    const double up = objective(mlp, x, g);
    param = keep - h;
    const double down = objective(mlp, x, g);
    param = keep;
    const double numeric = (up - down) / (2 * h);
    EXPECT_LT(rel_err(analytic, numeric), 1e-4) << what;
  };
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    auto &layer = mlp.layers[l];
    for (std::size_t k = 0; k < layer.weight.data().size(); ++k)
      check(layer.weight.data()[k], grads.layers[l].weight.data()[k],
            "layer " + std::to_string(l) + " weight " + std::to_string(k));
    for (std::size_t k = 0; k < layer.bias.size(); ++k)
      check(layer.bias[k], grads.layers[l].bias[k],
            "layer " + std::to_string(l) + " bias " + std::to_string(k));
  }
  // Input gradient.
  Matrix xv = x;
  for (std::size_t k = 0; k < xv.data().size(); ++k) {
    const double keep = xv.data()[k];
    xv.data()[k] = keep + h;
    const double up = objective(mlp, xv, g);
    xv.data()[k] = keep - h;
    const double down = objective(mlp, xv, g);
    xv.data()[k] = keep;
    EXPECT_LT(rel_err(grads.input.data()[k], (up - down) / (2 * h)), 1e-4) << "input " << k;
  }
}

TEST(InitMlp, DeterministicPerSeed) {
  EXPECT_EQ(init_mlp({4, 3}, Activation::kTanh, 7), init_mlp({4, 3}, Activation::kTanh, 7));
  EXPECT_NE(init_mlp({4, 3}, Activation::kTanh, 7), init_mlp({4, 3}, Activation::kTanh, 8));
}

TEST(InitMlp, BiasesAreZeroAndWeightsInsideTheGlorotBox) {
  const Mlp m = init_mlp({5, 7, 2}, Activation::kTanh, 1);
  const double lim0 = std::sqrt(6.0 / 12.0);
  for (double b : m.layers[0].bias) EXPECT_EQ(b, 0.0);
  for (double b : m.layers[1].bias) EXPECT_EQ(b, 0.0);
  for (double w : m.layers[0].weight.data()) EXPECT_LE(std::abs(w), lim0);
}

TEST(InitMlp, WeightVarianceOverSeeds) {
  // uniform(-a, a) has variance a^2 / 3 = 2 / (fan_in + fan_out)
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Mlp m = init_mlp({4, 3}, Activation::kTanh, seed);
    for (double w : m.layers[0].weight.data()) {
      s += w;
      s2 += w * w;
      ++n;
    }
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var, 2.0 / 7.0, 0.1 * 2.0 / 7.0);
}

TEST(InitMlp, BadWidthsRejected) {
  EXPECT_THROW(init_mlp({4}, Activation::kTanh, 0), Error);
  EXPECT_THROW(init_mlp({4, 0, 2}, Activation::kTanh, 0), Error);
}

TEST(Forward, ZeroNetworkGivesZero) {
  Mlp m = init_mlp({3, 4, 2}, Activation::kTanh, 0);
  for (auto &l : m.layers) std::fill(l.weight.data().begin(), l.weight.data().end(), 0.0);
  Rng rng(1);
  const Matrix out = predict(m, random_matrix(rng, 5, 3));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityLinearLayer) {
  Mlp m{{DenseLayer{Matrix::identity(3), Vector(3, 0.0), Activation::kLinear}}};
  Rng rng(2);
  const Matrix x = random_matrix(rng, 4, 3);
  EXPECT_EQ(predict(m, x), x);
}

TEST(Forward, TwoLinearLayersEqualMatrixChain) {
  Rng rng(3);
  const Matrix w1 = random_matrix(rng, 4, 3);
  const Matrix w2 = random_matrix(rng, 2, 4);
  Mlp m{{DenseLayer{w1, Vector(4, 0.0), Activation::kLinear},
         DenseLayer{w2, Vector(2, 0.0), Activation::kLinear}}};
  const Matrix x = random_matrix(rng, 6, 3);
  const Matrix chain = testing::naive_transpose(
      testing::naive_matmul(testing::naive_matmul(w2, w1), testing::naive_transpose(x)));
  EXPECT_LT(testing::rel_frob(predict(m, x), chain), 1e-12);
}

TEST(Forward, ShapeMismatch) {
  const Mlp m = init_mlp({3, 2}, Activation::kTanh, 0);
  EXPECT_THROW(predict(m, Matrix(2, 4)), Error);
}

TEST(Forward, Pure) {
  Rng rng(4);
  const Mlp m = init_mlp({3, 5, 2}, Activation::kTanh, 4);
  const Matrix x = random_matrix(rng, 7, 3);
  EXPECT_EQ(predict(m, x), predict(m, x));
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(5);
  const Mlp m = init_mlp({3, 5, 2}, Activation::kTanh, 5);
  const Matrix x = random_matrix(rng, 4, 3);
  const GradientSet g = backward(m, forward(m, x), Matrix(4, 2));
  for (const auto &l : g.layers) {
    for (double v : l.weight.data()) EXPECT_EQ(v, 0.0);
    for (double v : l.bias) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, LinearSquaredErrorAnalyticGradient) {
  Rng rng(6);
  const Matrix w = random_matrix(rng, 2, 3);
  Mlp m{{DenseLayer{w, Vector(2, 0.0), Activation::kLinear}}};
  const Vector x{0.5, -1.0, 2.0};
  const Vector y{1.0, -1.0};
  const Matrix xb(1, 3, x);
  const Matrix out = predict(m, xb);
  Matrix r(1, 2);
  for (int j = 0; j < 2; ++j) r(0, j) = out(0, j) - y[j];
  const GradientSet g = backward(m, forward(m, xb), r);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(g.layers[0].weight(i, k), r(0, i) * x[k], 1e-14);
}

TEST(Backward, FiniteDifferencesEveryActivationAndDepth) {
  Rng rng(7);
  for (Activation act : {Activation::kTanh, Activation::kRelu, Activation::kLinear}) {
    for (std::size_t depth = 1; depth <= 4; ++depth) {
      std::vector<std::size_t> widths{3};
      for (std::size_t d = 0; d < depth; ++d) widths.push_back(d + 2 == depth + 1 ? 2 : 4);
      const Mlp m = init_mlp(widths, act, Activation::kLinear, 100 + depth);
      const Matrix x = random_matrix(rng, 5, 3);
      const Matrix g = random_matrix(rng, 5, widths.back());
      SCOPED_TRACE(std::string(activation_name(act)) + " depth " + std::to_string(depth));
      check_finite_differences(m, x, g);
    }
  }
}

TEST(Backward, ShapeMismatch) {
  const Mlp m = init_mlp({3, 2}, Activation::kTanh, 0);
  const Matrix x(4, 3);
  EXPECT_THROW(backward(m, forward(m, x), Matrix(4, 3)), Error);
}

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  Mlp m = init_mlp({3, 2}, Activation::kTanh, 1);
  const Mlp before = m;
  AdamState s = make_adam(m);
  GradientSet g;
  g.layers.push_back({Matrix(2, 3), Vector(2, 0.0)});
  adam_step(m, g, s);
  EXPECT_EQ(m, before);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, ZeroLearningRateLeavesParametersBitIdentical) {
  Mlp m = init_mlp({3, 2}, Activation::kTanh, 1);
  const Mlp before = m;
  AdamState s = make_adam(m, 0.0);
  GradientSet g;
  g.layers.push_back({Matrix(2, 3, 0.7), Vector(2, -0.3)});
  adam_step(m, g, s);
  EXPECT_EQ(m, before);
}

Mlp scalar_net(double w) {
  return Mlp{{DenseLayer{Matrix(1, 1, w), Vector{0.0}, Activation::kLinear}}};
}

GradientSet scalar_grad(double g) {
  GradientSet gs;
  gs.layers.push_back({Matrix(1, 1, g), Vector{0.0}});
  return gs;
}

TEST(Adam, FirstStepMagnitudeIsTheLearningRate) {
  Mlp m = scalar_net(1.0);
  AdamState s = make_adam(m, 1e-3);
  const double g = 0.37;
  adam_step(m, scalar_grad(g), s);
  // m_hat = g, v_hat = g^2 -> step = lr g / (|g| + eps)
  EXPECT_NEAR(m.layers[0].weight(0, 0), 1.0 - 1e-3 * g / (g + 1e-8), 1e-15);
}

TEST(Adam, ThreeStepsMatchHandUnrolledRecurrence) {
  Mlp m = scalar_net(0.5);
  AdamState s = make_adam(m, 0.01, 0.9, 0.999, 1e-8);
  const double g = -1.3;
  double p = 0.5, mom = 0.0, vel = 0.0;
  for (int t = 1; t <= 3; ++t) {
    adam_step(m, scalar_grad(g), s);
    mom = 0.9 * mom + 0.1 * g;
    vel = 0.999 * vel + 0.001 * g * g;
    const double mh = mom / (1 - std::pow(0.9, t));
    const double vh = vel / (1 - std::pow(0.999, t));
    p -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
  }
  EXPECT_NEAR(m.layers[0].weight(0, 0), p, 1e-12);
}

TEST(Adam, ShapeMismatch) {
  Mlp m = init_mlp({3, 2}, Activation::kTanh, 1);
  AdamState s = make_adam(m);
  GradientSet g;
  g.layers.push_back({Matrix(3, 3), Vector(2, 0.0)});
  EXPECT_THROW(adam_step(m, g, s), Error);
}

TEST(Serialization, RoundTripIsBitExact) {
  const Mlp m = init_mlp({4, 6, 3}, Activation::kRelu, Activation::kLinear, 12);
  std::stringstream ss;
  write_mlp(ss, m);
  EXPECT_EQ(ss.str().substr(0, 4), "MLP1");
  EXPECT_EQ(read_mlp(ss), m);
}

TEST(Serialization, BadMagicIsAParseError) {
  std::stringstream ss("MLPXjunk");
  try {
    read_mlp(ss);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kParseError);
  }
}

}  // namespace
}  // namespace vaereg
