#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pion/manifold.hpp"
#include "pion/random.hpp"

using pion::Matrix;

namespace {

const Matrix kW{{1, 0}, {0, 2}};
const Matrix kG{{0, 1}, {0, 0}};

} // namespace

TEST(LieGradients, HandComputedPair) {
  const auto lp = pion::lie_gradients(kW, kG);
  EXPECT_EQ(lp.g_in, (Matrix{{0, 1}, {-1, 0}}));
  EXPECT_EQ(lp.g_out, (Matrix{{0, 2}, {-2, 0}}));
}

TEST(LieGradients, DegenerateInputs) {
  const auto zero = pion::lie_gradients(kW, Matrix(2, 2));
  EXPECT_EQ(zero.g_in, Matrix(2, 2));
  EXPECT_EQ(zero.g_out, Matrix(2, 2));
  const Matrix sym{{1, 2, 3}, {2, 5, 6}, {3, 6, 9}};
  const auto id = pion::lie_gradients(Matrix::identity(3), sym);
  EXPECT_EQ(id.g_in, Matrix(3, 3));
  EXPECT_EQ(id.g_out, Matrix(3, 3));
  EXPECT_THROW((void)pion::lie_gradients(Matrix(2, 3), Matrix(3, 2)), pion::ShapeError);
}

TEST(LieGradients, ShapesAndSkewnessOnRandomInputs) {
  pion::Xoshiro256 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t o = 1 + trial % 13, i = 1 + (trial * 7) % 17;
    const Matrix w = pion::gaussian_matrix(o, i, rng);
    const Matrix g = pion::gaussian_matrix(o, i, rng);
    const auto lp = pion::lie_gradients(w, g);
    ASSERT_EQ(lp.g_in.rows(), i);
    ASSERT_EQ(lp.g_out.rows(), o);
    EXPECT_EQ(pion::skew_error(lp.g_in), 0.0);
    EXPECT_EQ(pion::skew_error(lp.g_out), 0.0);
    // Against the definition computed with naive products.
    const Matrix wtg = oracle::naive_matmul(pion::transpose(w), g);
    EXPECT_LT(oracle::max_abs_diff(lp.g_in, pion::sub(wtg, pion::transpose(wtg))), 1e-12);
  }
}

TEST(DescentPairing, HandComputedAndZero) {
  const auto [pin, pout] = pion::descent_pairing(kW, kG);
  EXPECT_DOUBLE_EQ(pin, 1.0);
  EXPECT_DOUBLE_EQ(pout, 4.0); // ½‖g_out‖² = ½·8
  const auto [zin, zout] = pion::descent_pairing(kW, Matrix(2, 2));
  EXPECT_EQ(zin, 0.0);
  EXPECT_EQ(zout, 0.0);
}

// ⟨G, W g_in⟩ = tr(Gᵀ W g_in) computed with naive products and compared to ½‖g_in‖².
TEST(DescentPairing, IdentitiesAgainstBruteForceTraces) {
  pion::Xoshiro256 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t o = 1 + trial % 16, i = 1 + (trial * 5) % 16;
    const Matrix w = pion::gaussian_matrix(o, i, rng);
    const Matrix g = pion::gaussian_matrix(o, i, rng);
    const auto lp = pion::lie_gradients(w, g);
    const double tin =
        oracle::trace(oracle::naive_matmul(pion::transpose(g), oracle::naive_matmul(w, lp.g_in)));
    const double tout =
        oracle::trace(oracle::naive_matmul(pion::transpose(g), oracle::naive_matmul(lp.g_out, w)));
    const double nin = pion::frobenius_norm(lp.g_in), nout = pion::frobenius_norm(lp.g_out);
    EXPECT_NEAR(tin, 0.5 * nin * nin, 1e-10 * std::max(1.0, nin * nin));
    EXPECT_NEAR(tout, 0.5 * nout * nout, 1e-10 * std::max(1.0, nout * nout));
    const auto [pin, pout] = pion::descent_pairing(w, g);
    EXPECT_NEAR(pin, tin, 1e-10 * std::max(1.0, nin * nin));
    EXPECT_NEAR(pout, tout, 1e-10 * std::max(1.0, nout * nout));
  }
}

TEST(Stationarity, MeasureAndPredicate) {
  EXPECT_DOUBLE_EQ(pion::stationarity_measure(kW, kG), 10.0);
  EXPECT_EQ(pion::stationarity_measure(kW, Matrix(2, 2)), 0.0);
  EXPECT_EQ(pion::stationarity_measure(kW, pion::scale(kW, 4.0)), 0.0);
  EXPECT_TRUE(pion::is_first_order_stationary(kW, Matrix(2, 2), 1e-6));
  EXPECT_TRUE(pion::is_first_order_stationary(kW, kW, 1e-6));
  EXPECT_FALSE(pion::is_first_order_stationary(kW, kG, 1e-6));
  EXPECT_THROW((void)pion::is_first_order_stationary(kW, kG, 0.0), pion::DomainError);
}

TEST(Stationarity, ZeroExactlyForSymmetricProductsPositiveOtherwise) {
  pion::Xoshiro256 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix w = pion::gaussian_matrix(3 + trial % 5, 2 + trial % 7, rng);
    EXPECT_EQ(pion::stationarity_measure(w, w), 0.0);
    EXPECT_EQ(pion::stationarity_measure(w, pion::scale(w, -0.5)), 0.0);
    EXPECT_GT(pion::stationarity_measure(w, pion::gaussian_matrix(w.rows(), w.cols(), rng)), 1e-6);
  }
}

TEST(RotationAngles, PlanarAndZero) {
  const auto a = pion::rotation_angles(Matrix{{0, 0.3}, {-0.3, 0}});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0], 0.3, 1e-15);
  const auto z = pion::rotation_angles(Matrix(4, 4));
  EXPECT_EQ(z, (std::vector<double>{0, 0}));
  EXPECT_TRUE(pion::rotation_angles(Matrix(1, 1)).empty());
  EXPECT_THROW((void)pion::rotation_angles(Matrix{{1, 0}, {0, 1}}), pion::DomainError);
}

TEST(RotationAngles, SkewSingularValuesPairUp) {
  pion::Xoshiro256 rng(4);
  for (std::size_t n : {5, 6, 11}) {
    const Matrix s = pion::random_skew(n, rng);
    const auto sv = oracle::singular_values(s);
    for (std::size_t k = 0; k + 1 < n; k += 2) {
      EXPECT_NEAR(sv[k], sv[k + 1], 1e-10 * sv[0]);
    }
    const auto ang = pion::rotation_angles(s);
    ASSERT_EQ(ang.size(), n / 2);
    for (std::size_t k = 0; k < ang.size(); ++k) {
      EXPECT_NEAR(ang[k], sv[2 * k], 1e-12 * sv[0]);
    }
  }
}

// A block-diagonal skew matrix is a set of independent planar rotations under exp.
TEST(RotationAngles, ConsistentWithExponentialOfBlocks) {
  const double t1 = 0.4, t2 = 0.15;
  Matrix s(4, 4);
  s(0, 1) = -t1;
  s(1, 0) = t1;
  s(2, 3) = -t2;
  s(3, 2) = t2;
  const auto ang = pion::rotation_angles(s);
  EXPECT_NEAR(ang[0], t1, 1e-15);
  EXPECT_NEAR(ang[1], t2, 1e-15);
  const Matrix e = pion::exp_taylor(s, 12);
  const Matrix r1 = oracle::rotation(t1), r2 = oracle::rotation(t2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(e(i, j), r1(i, j), 1e-12);
      EXPECT_NEAR(e(2 + i, 2 + j), r2(i, j), 1e-12);
    }
  }
}

TEST(BilateralNormalize, NormsSkewnessIdempotenceAndPassThrough) {
  pion::Xoshiro256 rng(5);
  const Matrix w = pion::gaussian_matrix(6, 4, rng);
  const auto out = pion::bilateral_normalize(pion::lie_gradients(w, pion::gaussian_matrix(6, 4, rng)));
  EXPECT_NEAR(pion::frobenius_norm(out.pair.g_in), 2.0, 1e-15);
  EXPECT_NEAR(pion::frobenius_norm(out.pair.g_out), std::sqrt(6.0), 1e-15);
  EXPECT_EQ(pion::skew_error(out.pair.g_in), 0.0);
  EXPECT_FALSE(out.in_passthrough || out.out_passthrough);
  const auto again = pion::bilateral_normalize(out.pair);
  EXPECT_LT(oracle::max_abs_diff(again.pair.g_in, out.pair.g_in), 1e-15);

  const auto zero = pion::bilateral_normalize({out.pair.g_in, Matrix(6, 6)});
  EXPECT_TRUE(zero.out_passthrough);
  EXPECT_FALSE(zero.in_passthrough);
  EXPECT_EQ(zero.pair.g_out, Matrix(6, 6));
}

TEST(RmsAlpha, HandComputedOutSide) {
  const auto lp = pion::lie_gradients(kW, kG);
  const double alpha = pion::rms_alpha(kW, nullptr, &lp.g_out, 0.2, 1e-8);
  // A_out·W = [[0,4],[-2,0]], norm √20.
  EXPECT_DOUBLE_EQ(alpha, 0.2 * 2.0 / (std::sqrt(20.0) + 1e-8));
}

TEST(RmsAlpha, ZeroDenominatorAndScalingContract) {
  const Matrix z2(2, 2);
  EXPECT_DOUBLE_EQ(pion::rms_alpha(kW, &z2, &z2, 0.2, 1e-8), 0.2 * 2.0 / 1e-8);
  pion::Xoshiro256 rng(6);
  const Matrix w = pion::gaussian_matrix(5, 3, rng);
  const auto lp = pion::lie_gradients(w, pion::gaussian_matrix(5, 3, rng));
  const double a = pion::rms_alpha(w, &lp.g_in, &lp.g_out, 0.2, 1e-8);
  Matrix first = pion::matmul(lp.g_out, w);
  pion::axpy(first, 1.0, pion::matmul(w, lp.g_in));
  EXPECT_NEAR(a * pion::frobenius_norm(first), 0.2 * std::sqrt(15.0), 1e-7);
  const double in_only = pion::rms_alpha(w, &lp.g_in, nullptr, 0.2, 1e-8);
  EXPECT_NEAR(in_only * pion::frobenius_norm(pion::matmul(w, lp.g_in)), 0.2 * std::sqrt(15.0), 1e-7);
  EXPECT_THROW((void)pion::rms_alpha(w, nullptr, nullptr, 0.2, 1e-8), std::invalid_argument);
  EXPECT_THROW((void)pion::rms_alpha(w, &lp.g_in, nullptr, 0.0, 1e-8), pion::DomainError);
}

TEST(SpectrumDrift, KnownCases) {
  pion::Xoshiro256 rng(7);
  const Matrix w0 = pion::gaussian_matrix(6, 4, rng);
  const auto ref = pion::capture_spectrum(w0, 3);
  EXPECT_EQ(ref.captured_at_step, 3);
  EXPECT_EQ(pion::spectrum_drift(w0, ref), 0.0);
  EXPECT_NEAR(pion::spectrum_drift(pion::scale(w0, 2.0), ref), 1.0, 1e-14);
  const Matrix moved =
      pion::matmul(pion::matmul(pion::random_orthogonal(6, rng), w0), pion::random_orthogonal(4, rng));
  EXPECT_LE(pion::spectrum_drift(moved, ref), 1e-12);
  EXPECT_THROW((void)pion::spectrum_drift(Matrix(3, 3), ref), pion::ShapeError);
}
