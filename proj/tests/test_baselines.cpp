#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pion/baselines.hpp"
#include "pion/harness.hpp"
#include "pion/problems.hpp"
#include "pion/random.hpp"

using pion::Matrix;

TEST(Sgd, PlainStepWithoutMomentum) {
  pion::Xoshiro256 rng(1);
  const Matrix w = pion::gaussian_matrix(3, 4, rng), g = pion::gaussian_matrix(3, 4, rng);
  pion::SgdState st;
  pion::SgdHyper h;
  h.momentum = 0.0;
  h.lr = 0.1;
  Matrix expect = w;
  pion::axpy(expect, -0.1, g);
  EXPECT_EQ(pion::sgd_step(w, g, st, h), expect);
}

TEST(Sgd, HeavyBallBuffer) {
  const Matrix w{{1.0}}, g{{2.0}};
  pion::SgdState st;
  pion::SgdHyper h;
  h.lr = 0.5;
  h.momentum = 0.9;
  Matrix cur = pion::sgd_step(w, g, st, h); // buf = 2
  EXPECT_DOUBLE_EQ(cur(0, 0), 0.0);
  cur = pion::sgd_step(cur, g, st, h); // buf = 3.8
  EXPECT_DOUBLE_EQ(cur(0, 0), -1.9);
  EXPECT_THROW((void)pion::sgd_step(w, Matrix(2, 2), st, h), pion::ShapeError);
}

TEST(AdamW, ZeroGradientNoDecayLeavesWeight) {
  pion::Xoshiro256 rng(2);
  const Matrix w = pion::gaussian_matrix(3, 3, rng);
  pion::AdamWState st;
  EXPECT_EQ(pion::adamw_step(w, Matrix(3, 3), st, pion::AdamWHyper{}), w);
}

TEST(AdamW, FirstStepIsSignTimesLrAndDecayIsDecoupled) {
  const Matrix w{{1.0, -2.0}};
  const Matrix g{{0.3, -5.0}};
  pion::AdamWState st;
  pion::AdamWHyper h;
  h.lr = 0.01;
  h.weight_decay = 0.1;
  const Matrix out = pion::adamw_step(w, g, st, h);
  // Bias-corrected first step: m̂ = g, v̂ = g², update = lr·g/(|g|+eps).
  EXPECT_NEAR(out(0, 0), 1.0 * (1 - 0.001) - 0.01, 1e-9);
  EXPECT_NEAR(out(0, 1), -2.0 * (1 - 0.001) + 0.01, 1e-9);
}

TEST(MuonLite, UpdateSingularValuesWithinEnvelope) {
  // Momentum with singular values {5, 0.2}: after one step from m = 0,
  // m = (1−β₁)G, and NS normalizes scale away.
  pion::Xoshiro256 rng(3);
  const Matrix u = pion::random_orthogonal(4, rng);
  const Matrix v = pion::random_orthogonal(2, rng);
  Matrix sigma(4, 2);
  sigma(0, 0) = 5.0;
  sigma(1, 1) = 0.2;
  const Matrix g = pion::matmul(pion::matmul(u, sigma), v);
  const Matrix w(4, 2);
  pion::MuonLiteState st;
  pion::MuonLiteHyper h;
  const Matrix out = pion::muon_lite_step(w, g, st, h);
  const double unit = h.lr * std::sqrt(4.0 / 2.0);
  for (double s : pion::singular_values(pion::sub(w, out))) {
    EXPECT_GE(s / unit, 0.69);
    EXPECT_LE(s / unit, 0.96);
  }
  pion::MuonLiteState z;
  EXPECT_EQ(pion::muon_lite_step(w, Matrix(4, 2), z, h), w);
}

// Underdetermined least squares (n_samples < d_in) has an interpolating optimum.
TEST(Baselines, ReachTinyLossOnLeastSquares) {
  const auto p = pion::least_squares(6, 12, 8, 4);
  const Matrix w0 = p.initial_params(5)[0];
  const double f0 = p.loss({&w0, 1});
  {
    Matrix w = w0;
    pion::SgdState st;
    pion::SgdHyper h;
    h.lr = 5e-3;
    for (int t = 0; t < 5000; ++t) w = pion::sgd_step(w, p.gradients({&w, 1})[0], st, h);
    EXPECT_LE(p.loss({&w, 1}), 1e-6 * f0);
  }
  {
    Matrix w = w0;
    pion::AdamWState st;
    pion::AdamWHyper h;
    for (int t = 1; t <= 5000; ++t) {
      h.lr = pion::scheduled_lr({pion::ScheduleKind::cosine, 1e-3}, 2e-2, t, 5000);
      w = pion::adamw_step(w, p.gradients({&w, 1})[0], st, h);
    }
    EXPECT_LE(p.loss({&w, 1}), 1e-6 * f0);
  }
}
