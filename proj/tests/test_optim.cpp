#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pion/optim.hpp"
#include "pion/problems.hpp"
#include "pion/random.hpp"

using pion::Matrix;
using pion::PionConfig;

namespace {

PionConfig cayley_config() {
  PionConfig c;
  c.exp_scheme.kind = pion::ExpKind::cayley;
  return c;
}

PionConfig ambient_config(pion::MomentumScheme m) {
  PionConfig c;
  c.momentum_scheme = m;
  c.second_moment = pion::SecondMoment::ambient;
  return c;
}

struct Rand {
  pion::Xoshiro256 rng;
  explicit Rand(std::uint64_t s) : rng(s) {}
  Matrix operator()(std::size_t r, std::size_t c) { return pion::gaussian_matrix(r, c, rng); }
};

bool all_zero(const Matrix& m) {
  for (double x : m.data()) {
    if (x != 0.0) return false;
  }
  return true;
}

} // namespace

TEST(PionConfig, DefaultsAndValidation) {
  const PionConfig c;
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.95);
  EXPECT_EQ(c.rms_c, 0.2);
  EXPECT_EQ(c.eps, 1e-8);
  EXPECT_EQ(c.exp_scheme.kind, pion::ExpKind::e2);
  EXPECT_FALSE(c.bias_correction);
  EXPECT_NO_THROW(pion::validate(c));

  auto bad = [](auto mutate) {
    PionConfig x;
    mutate(x);
    EXPECT_THROW(pion::validate(x), pion::ConfigError);
  };
  bad([](PionConfig& x) { x.lr = 0; });
  bad([](PionConfig& x) { x.beta1 = 1.0; });
  bad([](PionConfig& x) { x.beta2 = -0.1; });
  bad([](PionConfig& x) { x.rms_c = 0; });
  bad([](PionConfig& x) { x.eps = 0; });
  bad([](PionConfig& x) { x.exp_scheme = {pion::ExpKind::taylor, 0}; });
  bad([](PionConfig& x) { x.update_mode = {pion::UpdateKind::alternating, 0}; });
  bad([](PionConfig& x) { x.momentum_scheme = pion::MomentumScheme::transported_ambient; });
  bad([](PionConfig& x) { x.second_moment = pion::SecondMoment::ambient; });
  bad([](PionConfig& x) { x.fixed_alpha = -1.0; });
}

TEST(PionConfig, OrthogonalizeForcesFixedAlpha) {
  PionConfig c;
  c.mup_mode.kind = pion::MupKind::orthogonalize;
  EXPECT_FALSE(pion::effective_rms(c));
  EXPECT_EQ(pion::effective_fixed_alpha(c), 10.0);
  c.fixed_alpha = 3.0;
  EXPECT_EQ(pion::effective_fixed_alpha(c), 3.0);
}

TEST(PionInit, BufferShapesPerScheme) {
  Rand r(1);
  const Matrix w = r(4, 8);
  const auto lie = pion::pion_init(4, 8, w, PionConfig{});
  EXPECT_EQ(lie.m_in.rows(), 8u);
  EXPECT_EQ(lie.m_out.rows(), 4u);
  EXPECT_EQ(lie.v_in.rows(), 8u);
  EXPECT_TRUE(lie.m.empty());
  EXPECT_TRUE(all_zero(lie.m_in) && all_zero(lie.m_out) && all_zero(lie.v_in) && all_zero(lie.v_out));
  EXPECT_EQ(lie.step, 0);
  EXPECT_EQ(lie.spectrum_ref.values, pion::singular_values(w));

  const auto amb = pion::pion_init(4, 8, w, ambient_config(pion::MomentumScheme::ambient));
  EXPECT_EQ(amb.m.rows(), 4u);
  EXPECT_EQ(amb.m.cols(), 8u);
  EXPECT_TRUE(all_zero(amb.m) && all_zero(amb.v));
  EXPECT_TRUE(amb.m_in.empty());

  EXPECT_THROW((void)pion::pion_init(8, 4, w, PionConfig{}), pion::ShapeError);
  PionConfig bad;
  bad.lr = -1;
  EXPECT_THROW((void)pion::pion_init(4, 8, w, bad), pion::ConfigError);
}

TEST(PionStepRaw, ZeroGradientLeavesWeight) {
  Rand r(2);
  const Matrix w = r(3, 5);
  EXPECT_EQ(pion::pion_step_raw(w, Matrix(3, 5), PionConfig{}).w, w);
}

TEST(PionStepRaw, HighOrderTaylorPreservesSpectrum) {
  Rand r(3);
  const Matrix w = r(6, 4);
  PionConfig c;
  c.exp_scheme = {pion::ExpKind::taylor, 12};
  c.rms_enabled = false;
  c.lr = 1e-2;
  const auto out = pion::pion_step_raw(w, r(6, 4), c);
  EXPECT_LE(pion::spectrum_drift(out.w, pion::capture_spectrum(w)), 1e-12);
  EXPECT_EQ(out.report.side_taken, pion::Side::both);
}

TEST(PionStepRaw, MatchesDefinitionAndDecreasesLoss) {
  const Matrix w = Matrix::diag({1, 2});
  const Matrix t{{0.5, 1.5}, {-1.0, 0.7}};
  const Matrix g = pion::sub(w, t);
  PionConfig c;
  c.exp_scheme = {pion::ExpKind::taylor, 12};
  c.rms_enabled = false;
  c.lr = 1e-2;
  const auto lp = pion::lie_gradients(w, g);
  const Matrix expect = pion::matmul(pion::matmul(oracle::expm(pion::scale(lp.g_out, -c.lr)), w),
                                     oracle::expm(pion::scale(lp.g_in, -c.lr)));
  const auto out = pion::pion_step_raw(w, g, c);
  EXPECT_LT(oracle::max_abs_diff(out.w, expect), 1e-14);
  auto loss = [&t](const Matrix& x) {
    const double n = pion::frobenius_norm(pion::sub(x, t));
    return 0.5 * n * n;
  };
  EXPECT_LT(loss(out.w), loss(w));
  EXPECT_DOUBLE_EQ(out.report.stationarity, pion::stationarity_measure(w, g));
}

TEST(PionStepLie, FirstStepWithZeroBetasIsSignLike) {
  Rand r(4);
  const Matrix w = r(5, 3);
  const Matrix g = r(5, 3);
  PionConfig c;
  c.beta1 = 0.0;
  c.beta2 = 0.0;
  auto st = pion::pion_init(5, 3, w, c);
  (void)pion::pion_step_lie(w, g, st, c);
  const auto lp = pion::lie_gradients(w, g);
  const Matrix a_in = pion::scale(pion::elem_div_sqrt_eps(st.m_in, st.v_in, c.eps), -1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double gij = lp.g_in(i, j);
      const double expect = gij == 0.0 ? 0.0 : -std::copysign(1.0, gij);
      EXPECT_NEAR(a_in(i, j), expect, 1e-6);
    }
  }
  EXPECT_EQ(st.m_in, lp.g_in);
  EXPECT_EQ(st.v_in, pion::hadamard(lp.g_in, lp.g_in));
}

TEST(PionStepLie, ReproducesAlgorithmByHand) {
  Rand r(5);
  const Matrix w = r(4, 3);
  const Matrix g1 = r(4, 3), g2 = r(4, 3);
  PionConfig c;
  auto st = pion::pion_init(4, 3, w, c);
  const Matrix w1 = pion::pion_step_lie(w, g1, st, c).w;
  const auto out = pion::pion_step_lie(w1, g2, st, c);

  // Independent replay of two steps.
  Matrix m_in(3, 3), v_in(3, 3), m_out(4, 4), v_out(4, 4);
  Matrix cur = w;
  for (const Matrix* g : {&g1, &g2}) {
    const auto lp = pion::lie_gradients(cur, *g);
    for (std::size_t i = 0; i < m_in.size(); ++i) {
      m_in.data()[i] = 0.9 * m_in.data()[i] + 0.1 * lp.g_in.data()[i];
      v_in.data()[i] = 0.95 * v_in.data()[i] + 0.05 * lp.g_in.data()[i] * lp.g_in.data()[i];
    }
    for (std::size_t i = 0; i < m_out.size(); ++i) {
      m_out.data()[i] = 0.9 * m_out.data()[i] + 0.1 * lp.g_out.data()[i];
      v_out.data()[i] = 0.95 * v_out.data()[i] + 0.05 * lp.g_out.data()[i] * lp.g_out.data()[i];
    }
    Matrix a_in(3, 3), a_out(4, 4);
    for (std::size_t i = 0; i < a_in.size(); ++i) {
      a_in.data()[i] = -m_in.data()[i] / (std::sqrt(v_in.data()[i]) + 1e-8);
    }
    for (std::size_t i = 0; i < a_out.size(); ++i) {
      a_out.data()[i] = -m_out.data()[i] / (std::sqrt(v_out.data()[i]) + 1e-8);
    }
    const Matrix first = pion::add(oracle::naive_matmul(a_out, cur), oracle::naive_matmul(cur, a_in));
    const double alpha = 0.2 * std::sqrt(12.0) / (pion::frobenius_norm(first) + 1e-8);
    const double s = c.lr * alpha;
    auto e2 = [s](const Matrix& a) {
      const Matrix sa = pion::scale(a, s);
      return pion::add(pion::add(Matrix::identity(a.rows()), sa),
                       pion::scale(oracle::naive_matmul(sa, sa), 0.5));
    };
    cur = oracle::naive_matmul(oracle::naive_matmul(e2(a_out), cur), e2(a_in));
  }
  EXPECT_LT(oracle::max_abs_diff(out.w, cur), 1e-13);
  EXPECT_EQ(st.step, 2);
}

TEST(PionStepLie, ZeroGradientKeepsEverythingZero) {
  Rand r(6);
  const Matrix w = r(3, 3);
  PionConfig c;
  auto st = pion::pion_init(3, 3, w, c);
  const auto out = pion::pion_step_lie(w, Matrix(3, 3), st, c);
  EXPECT_EQ(out.w, w);
  EXPECT_TRUE(all_zero(st.m_in) && all_zero(st.m_out) && all_zero(st.v_in) && all_zero(st.v_out));
}

TEST(PionStepLie, AlternationParityAndBothSidesAccumulate) {
  const auto p = pion::least_squares(5, 4, 10, 7);
  Matrix w = p.initial_params(8)[0];
  PionConfig c;
  c.update_mode.kind = pion::UpdateKind::alternating;
  auto st = pion::pion_init(5, 4, w, c);
  const pion::Side expect[] = {pion::Side::in, pion::Side::out, pion::Side::in,
                               pion::Side::out, pion::Side::in, pion::Side::out};
  for (pion::Side s : expect) {
    const Matrix before = w;
    const auto out = pion::pion_step(w, p.gradients({&w, 1})[0], st, c);
    EXPECT_EQ(out.report.side_taken, s);
    EXPECT_FALSE(all_zero(st.m_in));
    EXPECT_FALSE(all_zero(st.m_out));
    // An in-side step leaves the column space; an out-side step the row space.
    const Matrix delta = pion::sub(out.w, before);
    EXPECT_GT(pion::frobenius_norm(delta), 0.0);
    w = out.w;
  }
}

TEST(PionStepLie, AlternatingPeriodGroupsSteps) {
  EXPECT_EQ(pion::detail::side_for_step({pion::UpdateKind::alternating, 2}, 1), pion::Side::in);
  EXPECT_EQ(pion::detail::side_for_step({pion::UpdateKind::alternating, 2}, 2), pion::Side::in);
  EXPECT_EQ(pion::detail::side_for_step({pion::UpdateKind::alternating, 2}, 3), pion::Side::out);
  EXPECT_EQ(pion::detail::side_for_step({pion::UpdateKind::alternating, 2}, 5), pion::Side::in);
  EXPECT_EQ(pion::detail::side_for_step({pion::UpdateKind::bilateral, 1}, 4), pion::Side::both);
}

TEST(PionStepLie, StateMismatchThrows) {
  Rand r(9);
  const Matrix w = r(3, 3);
  auto st = pion::pion_init(3, 3, w, ambient_config(pion::MomentumScheme::ambient));
  EXPECT_THROW((void)pion::pion_step_lie(w, r(3, 3), st, PionConfig{}), pion::StateError);
  auto lie = pion::pion_init(3, 3, w, PionConfig{});
  EXPECT_THROW((void)pion::pion_step_lie(r(4, 4), r(4, 4), lie, PionConfig{}), pion::StateError);
  EXPECT_THROW((void)pion::pion_step_transported(w, r(3, 3), lie,
                                                 ambient_config(pion::MomentumScheme::ambient)),
               pion::StateError);
}

TEST(PionStepTransported, ZeroGradientForever) {
  Rand r(10);
  const Matrix w = r(4, 3);
  const auto c = ambient_config(pion::MomentumScheme::transported_ambient);
  auto st = pion::pion_init(4, 3, w, c);
  Matrix cur = w;
  for (int t = 0; t < 5; ++t) {
    cur = pion::pion_step_transported(cur, Matrix(4, 3), st, c).w;
  }
  EXPECT_EQ(cur, w);
  EXPECT_TRUE(all_zero(st.m));
}

TEST(PionStepTransported, SecondMomentSquaresMomentum) {
  Rand r(11);
  const Matrix w = r(4, 3), g = r(4, 3);
  const auto c = ambient_config(pion::MomentumScheme::ambient);
  auto st = pion::pion_init(4, 3, w, c);
  (void)pion::pion_step_transported(w, g, st, c);
  const Matrix m = pion::scale(g, 0.1);
  EXPECT_LT(oracle::max_abs_diff(st.m, m), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(st.v, pion::scale(pion::hadamard(m, m), 0.05)), 1e-15);
}

TEST(PionStepTransported, TransportIsConjugationAndPreservesNorm) {
  const auto p = pion::least_squares(5, 4, 12, 12);
  Matrix w = p.initial_params(13)[0];
  auto c = ambient_config(pion::MomentumScheme::transported_ambient);
  c.exp_scheme.kind = pion::ExpKind::cayley;
  auto st = pion::pion_init(5, 4, w, c);
  for (int t = 0; t < 4; ++t) {
    const Matrix g = p.gradients({&w, 1})[0];
    Matrix m_expected = pion::scale(st.m, c.beta1);
    pion::axpy(m_expected, 1 - c.beta1, g);
    const double before = pion::frobenius_norm(m_expected);
    w = pion::pion_step_transported(w, g, st, c).w;
    EXPECT_NEAR(pion::frobenius_norm(st.m), before, 1e-10 * before);
  }
  // Without transport the momentum is left exactly where it was accumulated.
  auto na = ambient_config(pion::MomentumScheme::ambient);
  auto st2 = pion::pion_init(5, 4, w, na);
  const Matrix g = p.gradients({&w, 1})[0];
  (void)pion::pion_step_transported(w, g, st2, na);
  EXPECT_EQ(st2.m, pion::scale(g, 1 - na.beta1));
}

TEST(PionStepTransported, AlternationOddStepsMoveInSide) {
  const auto p = pion::least_squares(5, 4, 12, 14);
  Matrix w = p.initial_params(15)[0];
  auto c = ambient_config(pion::MomentumScheme::transported_ambient);
  c.update_mode.kind = pion::UpdateKind::alternating;
  auto st = pion::pion_init(5, 4, w, c);
  for (int t = 1; t <= 4; ++t) {
    const Matrix g = p.gradients({&w, 1})[0];
    const auto out = pion::pion_step_transported(w, g, st, c);
    EXPECT_EQ(out.report.side_taken, t % 2 == 1 ? pion::Side::in : pion::Side::out);
    // In-side updates act on the right: W' = W·E, so WᵀW changes but W Wᵀ does not.
    const Matrix wwt0 = pion::matmul_nt(w, w), wwt1 = pion::matmul_nt(out.w, out.w);
    const Matrix wtw0 = pion::matmul_tn(w, w), wtw1 = pion::matmul_tn(out.w, out.w);
    if (t % 2 == 1) {
      EXPECT_LT(oracle::max_abs_diff(wwt0, wwt1), 1e-6);
    } else {
      EXPECT_LT(oracle::max_abs_diff(wtw0, wtw1), 1e-6);
    }
    w = out.w;
  }
}

TEST(SpectrumPreservation, CayleySingleStepEveryVariant) {
  const auto p = pion::least_squares(7, 5, 20, 16);
  const Matrix w0 = p.initial_params(17)[0];
  for (auto [mom, second] : {std::pair{pion::MomentumScheme::none, pion::SecondMoment::none},
                             {pion::MomentumScheme::lie, pion::SecondMoment::lie},
                             {pion::MomentumScheme::lie, pion::SecondMoment::none},
                             {pion::MomentumScheme::ambient, pion::SecondMoment::ambient},
                             {pion::MomentumScheme::transported_ambient, pion::SecondMoment::none}}) {
    for (auto mode : {pion::UpdateKind::bilateral, pion::UpdateKind::alternating}) {
      for (auto mup : {pion::MupKind::none, pion::MupKind::spectral_normalize,
                       pion::MupKind::orthogonalize}) {
        PionConfig c = cayley_config();
        c.momentum_scheme = mom;
        c.second_moment = second;
        c.update_mode.kind = mode;
        c.mup_mode.kind = mup;
        auto st = pion::pion_init(7, 5, w0, c);
        Matrix w = w0;
        for (int t = 0; t < 5; ++t) {
          const auto ref = pion::capture_spectrum(w);
          w = pion::pion_step(w, p.gradients({&w, 1})[0], st, c).w;
          EXPECT_LE(pion::spectrum_drift(w, ref), 1e-12);
        }
      }
    }
  }
}

TEST(SpectrumPreservation, E2AccumulatesSlowly) {
  const auto p = pion::least_squares(6, 6, 24, 18);
  Matrix w = p.initial_params(19)[0];
  PionConfig c;
  auto st = pion::pion_init(6, 6, w, c);
  const int steps = 300;
  for (int t = 0; t < steps; ++t) {
    w = pion::pion_step(w, p.gradients({&w, 1})[0], st, c).w;
  }
  EXPECT_LE(pion::spectrum_drift(w, st.spectrum_ref), steps * 1e-6);
}

TEST(SkewPersistence, LieMomentsStaySkew) {
  const auto p = pion::mlp({5}, 2, 10, 20);
  auto params = p.initial_params(21);
  PionConfig c;
  c.lr = 5e-3;
  std::vector<pion::ParamState> st;
  for (const auto& w : params) {
    st.push_back(pion::pion_init(w.rows(), w.cols(), w, c));
  }
  for (int t = 0; t < 1000; ++t) {
    const auto g = p.gradients(params);
    for (std::size_t k = 0; k < params.size(); ++k) {
      params[k] = pion::pion_step(params[k], g[k], st[k], c).w;
      ASSERT_LE(pion::skew_error(st[k].m_in), 1e-10 * (1 + pion::frobenius_norm(st[k].m_in)));
      ASSERT_LE(pion::skew_error(st[k].m_out), 1e-10 * (1 + pion::frobenius_norm(st[k].m_out)));
      for (double v : st[k].v_in.data()) ASSERT_GE(v, 0.0);
    }
  }
}

TEST(RmsContract, NormalizedUpdateMagnitude) {
  Rand r(22);
  for (auto [o, i] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 4}, {3, 11}}) {
    for (auto mode : {pion::UpdateKind::bilateral, pion::UpdateKind::alternating}) {
      for (auto mom : {pion::MomentumScheme::lie, pion::MomentumScheme::transported_ambient}) {
        PionConfig c;
        c.lr = 1e-4;
        c.update_mode.kind = mode;
        c.momentum_scheme = mom;
        c.second_moment = mom == pion::MomentumScheme::lie ? pion::SecondMoment::lie
                                                           : pion::SecondMoment::ambient;
        const Matrix w = r(o, i);
        auto st = pion::pion_init(o, i, w, c);
        Matrix cur = w;
        for (int t = 0; t < 3; ++t) {
          const auto out = pion::pion_step(cur, r(o, i), st, c);
          const double ratio =
              out.report.delta_w_fro_over_eta / (c.rms_c * std::sqrt(double(o) * double(i)));
          EXPECT_GE(ratio, 0.9);
          EXPECT_LE(ratio, 1.1);
          EXPECT_GT(out.report.alpha, 0.0);
          cur = out.w;
        }
      }
    }
  }
}

TEST(MonotoneDescent, RawHighOrderTaylorOnQuadratic) {
  const auto p = pion::least_squares(10, 10, 10, 23);
  Matrix w = p.initial_params(24)[0];
  PionConfig c;
  c.exp_scheme = {pion::ExpKind::taylor, 12};
  c.rms_enabled = false;
  c.lr = 1e-3;
  double f = p.loss({&w, 1});
  for (int t = 0; t < 500; ++t) {
    w = pion::pion_step_raw(w, p.gradients({&w, 1})[0], c).w;
    const double next = p.loss({&w, 1});
    ASSERT_LE(next, f + 1e-12) << "step " << t;
    f = next;
  }
}

TEST(ApplyMup, SpectralNormalizeOrthogonalizeAndZero) {
  Rand r(25);
  Matrix s = pion::lie_gradients(r(16, 16), r(16, 16)).g_in;
  s = pion::scale(s, 4.0 / pion::singular_values(s)[0]);
  pion::MupMode sn;
  sn.kind = pion::MupKind::spectral_normalize;
  const auto out = pion::apply_mup({s, Matrix(3, 3)}, sn);
  EXPECT_NEAR(pion::singular_values(out.g_in)[0], 1.0, 1e-8);
  EXPECT_EQ(out.g_out, Matrix(3, 3));
  // Positive rescaling only.
  EXPECT_NEAR(pion::frobenius_inner(out.g_in, s),
              pion::frobenius_norm(out.g_in) * pion::frobenius_norm(s), 1e-10);

  pion::MupMode orth;
  orth.kind = pion::MupKind::orthogonalize;
  const auto o = pion::apply_mup({s, Matrix(3, 3)}, orth);
  EXPECT_LE(pion::skew_error(o.g_in), 1e-8);
  for (double v : pion::singular_values(o.g_in)) {
    EXPECT_LE(v, 1.3);
  }
  EXPECT_EQ(pion::apply_mup({s, s}, pion::MupMode{}).g_in, s);
}

TEST(ExpFactor, DispatchesPerScheme) {
  Rand r(26);
  const Matrix a = pion::lie_gradients(r(4, 4), r(4, 4)).g_in;
  EXPECT_EQ(pion::exp_factor({pion::ExpKind::e2, 2}, a, 0.1), pion::exp_e2(a, 0.1));
  EXPECT_EQ(pion::exp_factor({pion::ExpKind::taylor, 5}, a, 0.1),
            pion::exp_taylor(pion::scale(a, 0.1), 5));
  EXPECT_EQ(pion::exp_factor({pion::ExpKind::cayley, 2}, a, 0.1),
            pion::exp_cayley(pion::scale(a, 0.1)));
}

TEST(BiasCorrection, FirstStepUsesUnbiasedMoments) {
  Rand r(27);
  const Matrix w = r(3, 3), g = r(3, 3);
  PionConfig with;
  with.bias_correction = true;
  with.beta1 = 0.5;
  with.beta2 = 0.5;
  PionConfig plain = with;
  plain.bias_correction = false;
  plain.beta1 = 0.0;
  plain.beta2 = 0.0;
  auto s1 = pion::pion_init(3, 3, w, with);
  auto s2 = pion::pion_init(3, 3, w, plain);
  // At t = 1 the corrected moments equal the raw gradient statistics.
  EXPECT_LT(oracle::max_abs_diff(pion::pion_step(w, g, s1, with).w, pion::pion_step(w, g, s2, plain).w),
            1e-14);
}
