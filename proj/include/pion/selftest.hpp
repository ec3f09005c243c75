#pragma once

// Invariant suites run by `pion selftest`. Each suite is a deterministic check
// at fixed seeds and reports pass/fail with a one-line detail. The e2 kernel
// is injectable so a deliberately broken variant can be shown to fail.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pion/baselines.hpp"
#include "pion/config.hpp"
#include "pion/harness.hpp"
#include "pion/linalg.hpp"
#include "pion/manifold.hpp"
#include "pion/optim.hpp"
#include "pion/problems.hpp"
#include "pion/random.hpp"

namespace pion {

struct SelftestKernels {
  std::function<Matrix(const Matrix&, double)> exp_e2 = pion::exp_e2;
};

/// I + sA + (sA)²: the e2 surrogate with its ½ dropped.
[[nodiscard]] inline Matrix corrupted_exp_e2(const Matrix& a, double s) {
  const Matrix sa = scale(a, s);
  Matrix r = add(Matrix::identity(a.rows()), sa);
  axpy(r, 1.0, matmul(sa, sa));
  return r;
}

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

namespace detail {

/// Collects the worst observed value against a limit.
class Check {
public:
  explicit Check(std::string name) { r_.name = std::move(name); }

  void le(double value, double limit, const std::string& what) {
    if (!(value <= limit)) {
      fail(what + " = " + num(value) + " > " + num(limit));
    } else if (r_.passed) {
      r_.detail = what + " = " + num(value) + " <= " + num(limit);
    }
  }

  void gt(double value, double limit, const std::string& what) {
    if (!(value > limit)) {
      fail(what + " = " + num(value) + " <= " + num(limit));
    }
  }

  void ok(bool cond, const std::string& what) {
    if (!cond) {
      fail(what);
    }
  }

  void fail(const std::string& what) {
    if (r_.passed) {
      r_.passed = false;
      r_.detail = what;
    }
  }

  SuiteResult done() {
    if (r_.passed && r_.detail.empty()) {
      r_.detail = "ok";
    }
    return r_;
  }

  template <class F>
  SuiteResult guarded(F&& body) {
    try {
      body(*this);
    } catch (const std::exception& e) {
      fail(std::string("exception: ") + e.what());
    }
    return done();
  }

private:
  static std::string num(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
  }
  SuiteResult r_;
};

inline std::size_t uniform_int(Xoshiro256& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

inline Matrix scaled_to(const Matrix& a, double norm) {
  return scale(a, norm / frobenius_norm(a));
}

inline double rel(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min());
}

} // namespace detail

namespace suites {

using detail::Check;

inline SuiteResult linalg_cayley_orthogonality() {
  return Check("linalg.cayley_orthogonality").guarded([](Check& c) {
    Xoshiro256 rng(101);
    for (std::size_t n : {2, 5, 16, 33, 64}) {
      for (double norm : {0.1, 1.0, 10.0}) {
        const Matrix s = detail::scaled_to(random_skew(n, rng), norm);
        c.le(orthogonality_error(exp_cayley(s)), 1e-12, "orthogonality error n=" + std::to_string(n));
      }
    }
  });
}

/// E2ᵀE2 − I = (sA)⁴/4 for skew A, so the defect is fourth order.
inline SuiteResult linalg_e2_orthogonality(const SelftestKernels& k) {
  return Check("linalg.e2_orthogonality").guarded([&k](Check& c) {
    Xoshiro256 rng(102);
    for (std::size_t n : {3, 8, 16}) {
      const Matrix a = detail::scaled_to(random_skew(n, rng), 1.0);
      for (double s : {0.05, 0.02}) {
        const double err = orthogonality_error(k.exp_e2(a, s));
        c.le(err, 0.25 * std::pow(s, 4) * 1.001 + 1e-15, "e2 defect s=" + std::to_string(s));
      }
    }
  });
}

/// Halving ‖S‖ divides the truncation error ‖T_L(S) − exp(S)‖ by ≈ 2^{L+1}.
inline SuiteResult linalg_taylor_order() {
  return Check("linalg.taylor_order").guarded([](Check& c) {
    Xoshiro256 rng(103);
    for (std::size_t n : {4, 9, 16}) {
      const Matrix s = detail::scaled_to(random_skew(n, rng), 0.4);
      const Matrix h = scale(s, 0.5);
      const Matrix es = exp_taylor(s, 30);
      const Matrix eh = exp_taylor(h, 30);
      for (int l = 1; l <= 4; ++l) {
        const double ratio = frobenius_norm(sub(exp_taylor(s, l), es)) /
                             frobenius_norm(sub(exp_taylor(h, l), eh));
        const double expect = std::pow(2.0, l + 1);
        c.ok(ratio >= 0.7 * expect && ratio <= 1.3 * expect,
             "L=" + std::to_string(l) + " halving ratio " + std::to_string(ratio));
      }
    }
  });
}

inline SuiteResult linalg_svd_reconstruct() {
  return Check("linalg.svd_reconstruct").guarded([](Check& c) {
    Xoshiro256 rng(104);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a = gaussian_matrix(detail::uniform_int(rng, 1, 24),
                                       detail::uniform_int(rng, 1, 24), rng);
      double sum = 0.0;
      for (double s : singular_values(a)) {
        sum += s * s;
      }
      const double f = frobenius_norm(a);
      c.le(detail::rel(sum, f * f), 1e-10, "relative sigma^2 mismatch");
    }
  });
}

inline SuiteResult linalg_solve_roundtrip() {
  return Check("linalg.solve_roundtrip").guarded([](Check& c) {
    Xoshiro256 rng(105);
    for (std::size_t n : {1, 4, 17, 40}) {
      Matrix a = gaussian_matrix(n, n, rng);
      for (std::size_t i = 0; i < n; ++i) {
        a(i, i) += 2.0 * std::sqrt(static_cast<double>(n));
      }
      const Matrix b = gaussian_matrix(n, 3, rng);
      const double res = frobenius_norm(sub(matmul(a, solve(a, b)), b));
      c.le(res, 1e-10 * frobenius_norm(b), "residual n=" + std::to_string(n));
    }
  });
}

inline SuiteResult linalg_spectral_le_frobenius() {
  return Check("linalg.spectral_le_frobenius").guarded([](Check& c) {
    Xoshiro256 rng(106);
    for (int trial = 0; trial < 30; ++trial) {
      const Matrix a = gaussian_matrix(detail::uniform_int(rng, 1, 20),
                                       detail::uniform_int(rng, 1, 20), rng);
      c.le(spectral_norm(a) - frobenius_norm(a), 1e-12 * frobenius_norm(a), "spectral - frobenius");
    }
  });
}

inline SuiteResult manifold_lie_skew() {
  return Check("manifold.lie_skew").guarded([](Check& c) {
    Xoshiro256 rng(201);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t o = detail::uniform_int(rng, 1, 64);
      const std::size_t i = detail::uniform_int(rng, 1, 64);
      const Matrix w = gaussian_matrix(o, i, rng);
      const Matrix g = gaussian_matrix(o, i, rng);
      const LiePair lp = lie_gradients(w, g);
      c.le(skew_error(lp.g_in), 1e-12 * (1.0 + frobenius_norm(lp.g_in)), "skew error g_in");
      c.le(skew_error(lp.g_out), 1e-12 * (1.0 + frobenius_norm(lp.g_out)), "skew error g_out");
    }
  });
}

inline SuiteResult manifold_descent_identities() {
  return Check("manifold.descent_identities").guarded([](Check& c) {
    Xoshiro256 rng(202);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t o = detail::uniform_int(rng, 1, 16);
      const std::size_t i = detail::uniform_int(rng, 1, 16);
      const Matrix w = gaussian_matrix(o, i, rng);
      const Matrix g = gaussian_matrix(o, i, rng);
      const LiePair lp = lie_gradients(w, g);
      const auto [pin, pout] = descent_pairing(w, g);
      const double nin = frobenius_norm(lp.g_in), nout = frobenius_norm(lp.g_out);
      const double scale_in = std::max(1.0, 0.5 * nin * nin);
      const double scale_out = std::max(1.0, 0.5 * nout * nout);
      c.le(std::abs(pin - 0.5 * nin * nin) / scale_in, 1e-10, "in-side identity");
      c.le(std::abs(pout - 0.5 * nout * nout) / scale_out, 1e-10, "out-side identity");
    }
  });
}

inline SuiteResult manifold_skew_pairing() {
  return Check("manifold.skew_pairing").guarded([](Check& c) {
    for (double theta : {-0.5, -0.1, 0.03, 0.3, 0.5}) {
      const Matrix s{{0.0, -theta}, {theta, 0.0}};
      const Matrix rot{{std::cos(theta), -std::sin(theta)}, {std::sin(theta), std::cos(theta)}};
      c.le(frobenius_norm(sub(exp_taylor(s, 12), rot)), 1e-12, "planar exp vs rotation");
      const auto ang = rotation_angles(s);
      c.ok(ang.size() == 1 && std::abs(ang[0] - std::abs(theta)) <= 1e-14, "planar angle");
    }
    Xoshiro256 rng(203);
    for (std::size_t n : {4, 7, 12}) {
      const auto ang = rotation_angles(random_skew(n, rng));
      c.ok(ang.size() == n / 2, "angle count for n=" + std::to_string(n));
    }
  });
}

inline SuiteResult manifold_stationarity_characterization() {
  return Check("manifold.stationarity_characterization").guarded([](Check& c) {
    Xoshiro256 rng(204);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix w = gaussian_matrix(detail::uniform_int(rng, 2, 12),
                                       detail::uniform_int(rng, 2, 12), rng);
      // G = 2W keeps WᵀG and GWᵀ symmetric to the last bit (scaling by 2 is exact).
      c.ok(stationarity_measure(w, scale(w, 2.0)) == 0.0, "symmetric products give zero");
      const Matrix g = gaussian_matrix(w.rows(), w.cols(), rng);
      c.gt(stationarity_measure(w, g), 1e-6, "generic gradient measure");
    }
  });
}

inline SuiteResult manifold_orthogonal_equivalence() {
  return Check("manifold.orthogonal_equivalence").guarded([](Check& c) {
    Xoshiro256 rng(205);
    for (auto [o, i] : {std::pair<std::size_t, std::size_t>{5, 5}, {8, 3}, {3, 9}, {16, 12}}) {
      const Matrix w = gaussian_matrix(o, i, rng);
      const Matrix moved = matmul(matmul(random_orthogonal(o, rng), w), random_orthogonal(i, rng));
      c.le(spectrum_drift(moved, capture_spectrum(w)), 1e-12, "drift under Q W P^T");
    }
  });
}

inline SuiteResult manifold_bilateral_normalize() {
  return Check("manifold.bilateral_normalize").guarded([](Check& c) {
    Xoshiro256 rng(206);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t o = detail::uniform_int(rng, 2, 20);
      const std::size_t i = detail::uniform_int(rng, 2, 20);
      const auto n = bilateral_normalize(
          lie_gradients(gaussian_matrix(o, i, rng), gaussian_matrix(o, i, rng)));
      c.le(detail::rel(frobenius_norm(n.pair.g_in), std::sqrt(double(i))), 1e-14, "in norm");
      c.le(detail::rel(frobenius_norm(n.pair.g_out), std::sqrt(double(o))), 1e-14, "out norm");
      c.le(skew_error(n.pair.g_in) + skew_error(n.pair.g_out), 1e-13, "skewness");
    }
  });
}

inline std::vector<PionConfig> variant_grid(ExpKind exp) {
  std::vector<PionConfig> out;
  for (auto [mom, second] :
       {std::pair{MomentumScheme::none, SecondMoment::none}, {MomentumScheme::lie, SecondMoment::lie},
        {MomentumScheme::ambient, SecondMoment::ambient},
        {MomentumScheme::transported_ambient, SecondMoment::ambient}}) {
    for (auto mode : {UpdateKind::bilateral, UpdateKind::alternating}) {
      PionConfig cfg;
      cfg.exp_scheme.kind = exp;
      cfg.momentum_scheme = mom;
      cfg.second_moment = second;
      cfg.update_mode.kind = mode;
      out.push_back(cfg);
    }
  }
  return out;
}

inline SuiteResult optim_spectrum_preservation(const SelftestKernels& k) {
  return Check("optim.spectrum_preservation").guarded([&k](Check& c) {
    const Problem p = least_squares(7, 5, 20, 301);
    const ParamList w0 = p.initial_params(302);
    const SpectrumRef ref = capture_spectrum(w0[0]);
    for (ExpKind exp : {ExpKind::cayley, ExpKind::e2}) {
      const double limit = exp == ExpKind::cayley ? 1e-12 : 1e-6;
      for (const auto& cfg : variant_grid(exp)) {
        ParamState st = pion_init(7, 5, w0[0], cfg);
        Matrix w = w0[0];
        for (int t = 0; t < 6; ++t) {
          const Matrix before = w;
          const SpectrumRef before_ref = capture_spectrum(before);
          w = pion_step(w, p.gradients({&w, 1})[0], st, cfg).w;
          c.le(spectrum_drift(w, before_ref), limit,
               std::string(to_string(exp)) + " single-step drift (" +
                   std::string(to_string(cfg.momentum_scheme)) + ")");
        }
      }
    }
    // The same bilateral step assembled from the injected e2 kernel.
    const Matrix g = p.gradients(w0)[0];
    const LiePair lp = lie_gradients(w0[0], g);
    const Matrix a_in = detail::scaled_to(scale(lp.g_in, -1.0), 1.0);
    const Matrix a_out = detail::scaled_to(scale(lp.g_out, -1.0), 1.0);
    for (double s : {0.05, 0.01}) {
      const Matrix w1 = matmul(matmul(k.exp_e2(a_out, s), w0[0]), k.exp_e2(a_in, s));
      c.le(spectrum_drift(w1, ref), 1e-6, "e2 kernel single-step drift");
    }
  });
}

inline SuiteResult optim_skew_persistence() {
  return Check("optim.skew_persistence").guarded([](Check& c) {
    const Problem p = least_squares(6, 4, 12, 303);
    Matrix w = p.initial_params(304)[0];
    PionConfig cfg;
    cfg.lr = 1e-2;
    ParamState st = pion_init(6, 4, w, cfg);
    for (int t = 0; t < 1000; ++t) {
      w = pion_step(w, p.gradients({&w, 1})[0], st, cfg).w;
      for (const Matrix* m : {&st.m_in, &st.m_out}) {
        c.le(skew_error(*m), 1e-10 * (1.0 + frobenius_norm(*m)), "moment skew error");
      }
    }
  });
}

inline SuiteResult optim_rms_contract() {
  return Check("optim.rms_contract").guarded([](Check& c) {
    Xoshiro256 rng(305);
    for (auto [o, i] : {std::pair<std::size_t, std::size_t>{8, 8}, {12, 5}, {4, 10}}) {
      const Matrix w = gaussian_matrix(o, i, rng);
      const Matrix g = gaussian_matrix(o, i, rng);
      for (auto mode : {UpdateKind::bilateral, UpdateKind::alternating}) {
        PionConfig cfg;
        cfg.lr = 1e-4;
        cfg.update_mode.kind = mode;
        ParamState st = pion_init(o, i, w, cfg);
        const auto r = pion_step(w, g, st, cfg);
        const double ratio =
            r.report.delta_w_fro_over_eta / (cfg.rms_c * std::sqrt(double(o) * double(i)));
        c.ok(ratio >= 0.9 && ratio <= 1.1, "RMS ratio " + std::to_string(ratio));
      }
    }
  });
}

inline SuiteResult optim_alternation_parity() {
  return Check("optim.alternation_parity").guarded([](Check& c) {
    const Problem p = least_squares(5, 4, 10, 306);
    Matrix w = p.initial_params(307)[0];
    PionConfig cfg;
    cfg.update_mode.kind = UpdateKind::alternating;
    ParamState st = pion_init(5, 4, w, cfg);
    const Side expect[] = {Side::in, Side::out, Side::in, Side::out, Side::in, Side::out};
    for (Side s : expect) {
      auto r = pion_step(w, p.gradients({&w, 1})[0], st, cfg);
      c.ok(r.report.side_taken == s, "side at step " + std::to_string(st.step));
      w = std::move(r.w);
    }
  });
}

inline SuiteResult optim_monotone_descent() {
  return Check("optim.monotone_descent").guarded([](Check& c) {
    const Problem p = least_squares(8, 8, 8, 308);
    Matrix w = p.initial_params(309)[0];
    PionConfig cfg;
    cfg.lr = 1e-3;
    cfg.exp_scheme = {ExpKind::taylor, 12};
    cfg.rms_enabled = false;
    double f = p.loss({&w, 1});
    for (int t = 0; t < 300; ++t) {
      w = pion_step_raw(w, p.gradients({&w, 1})[0], cfg).w;
      const double next = p.loss({&w, 1});
      c.le(next - f, 1e-12, "loss increase");
      f = next;
    }
  });
}

inline SuiteResult optim_mup_direction() {
  return Check("optim.mup_direction").guarded([](Check& c) {
    Xoshiro256 rng(310);
    MupMode mode;
    mode.kind = MupKind::spectral_normalize;
    for (std::size_t n : {3, 8, 20}) {
      const LiePair lp = lie_gradients(gaussian_matrix(n, n + 2, rng), gaussian_matrix(n, n + 2, rng));
      const LiePair out = apply_mup(lp, mode);
      for (auto [a, b] : {std::pair{&lp.g_in, &out.g_in}, {&lp.g_out, &out.g_out}}) {
        const Matrix da = scale(*a, 1.0 / spectral_norm(*a, 500, 1e-15));
        const Matrix db = scale(*b, 1.0 / spectral_norm(*b, 500, 1e-15));
        c.le(frobenius_norm(sub(da, db)), 1e-12, "direction change");
      }
    }
  });
}

inline SuiteResult optim_baselines_anchor() {
  return Check("optim.baselines_anchor").guarded([](Check& c) {
    // n_samples < d_in, so the optimum interpolates and has zero loss.
    const Problem p = least_squares(6, 12, 8, 311);
    const Matrix w0 = p.initial_params(312)[0];
    const double f0 = p.loss({&w0, 1});
    {
      Matrix w = w0;
      SgdState st;
      SgdHyper h;
      h.lr = 5e-3;
      for (int t = 0; t < 5000; ++t) {
        w = sgd_step(w, p.gradients({&w, 1})[0], st, h);
      }
      c.le(p.loss({&w, 1}) / f0, 1e-6, "sgd loss ratio");
    }
    {
      Matrix w = w0;
      AdamWState st;
      AdamWHyper h;
      for (int t = 0; t < 5000; ++t) {
        h.lr = scheduled_lr({ScheduleKind::cosine, 1e-3}, 2e-2, t + 1, 5000);
        w = adamw_step(w, p.gradients({&w, 1})[0], st, h);
      }
      c.le(p.loss({&w, 1}) / f0, 1e-6, "adamw loss ratio");
    }
  });
}

inline double max_rel_grad_error(const Problem& p, const ParamList& params, double h) {
  const auto analytic = p.gradients(params);
  const auto fd = finite_difference_grads(p, params, h);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double e = frobenius_norm(sub(analytic[k], fd[k]));
    const double n = frobenius_norm(analytic[k]);
    num += e * e;
    den += n * n;
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline SuiteResult problems_gradient_oracle() {
  return Check("problems.gradient_oracle").guarded([](Check& c) {
    const std::vector<Problem> probs = {least_squares(5, 7, 11, 401), procrustes(6, 402),
                                        mlp({6}, 3, 9, 403), mlp({4, 8, 5, 3}, 3, 7, 404)};
    for (const auto& p : probs) {
      for (std::uint64_t s = 0; s < 10; ++s) {
        c.le(max_rel_grad_error(p, p.initial_params(1000 + s), 1e-5), 1e-5, p.name + " gradient");
      }
    }
  });
}

inline SuiteResult problems_convexity() {
  return Check("problems.convexity").guarded([](Check& c) {
    const Problem p = least_squares(5, 6, 10, 405);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Matrix a = p.initial_params(2 * s)[0];
      const Matrix b = p.initial_params(2 * s + 1)[0];
      const Matrix mid = scale(add(a, b), 0.5);
      c.le(p.loss({&mid, 1}) - 0.5 * (p.loss({&a, 1}) + p.loss({&b, 1})), 1e-12, "Jensen gap");
    }
  });
}

inline SuiteResult problems_procrustes_reachable() {
  return Check("problems.procrustes_reachable").guarded([](Check& c) {
    for (std::size_t d : {2, 5, 12}) {
      const auto inst = procrustes_instance(d, 406 + d);
      c.le(spectrum_drift(inst.target, capture_spectrum(inst.w0)), 1e-12, "target spectrum");
      const auto sv = singular_values(inst.w0);
      for (std::size_t i = 0; i < d; ++i) {
        c.le(std::abs(sv[i] - static_cast<double>(d - i)), 1e-12 * double(d), "W0 singular value");
      }
    }
  });
}

inline RunConfig small_run_config(ExpKind exp, std::int64_t steps) {
  RunConfig cfg;
  cfg.problem.kind = ProblemKind::least_squares;
  cfg.problem.d_out = 6;
  cfg.problem.d_in = 5;
  cfg.problem.n_samples = 20;
  cfg.problem.seed = 501;
  PionConfig pc;
  pc.exp_scheme.kind = exp;
  cfg.optimizer = pc;
  cfg.steps = steps;
  cfg.seed = 502;
  return cfg;
}

inline SuiteResult harness_determinism() {
  return Check("harness.determinism").guarded([](Check& c) {
    const RunConfig cfg = small_run_config(ExpKind::e2, 50);
    c.ok(metrics_csv(run(cfg)) == metrics_csv(run(cfg)), "repeat runs produce different CSV");
  });
}

inline SuiteResult harness_divergence() {
  return Check("harness.divergence").guarded([](Check& c) {
    const RunConfig cfg = small_run_config(ExpKind::e2, 20);
    Problem p = make_problem(cfg.problem);
    auto calls = std::make_shared<int>(0);
    const auto base = p.evaluate;
    p.evaluate = [base, calls](std::span<const Matrix> w) {
      Evaluation e = base(w);
      if (++*calls > 8) {
        e.loss = std::numeric_limits<double>::quiet_NaN();
      }
      return e;
    };
    try {
      (void)run(cfg, p);
      c.fail("no divergence reported");
    } catch (const DivergenceError& e) {
      c.ok(e.record().rows.size() == 8 && e.record().rows.back().step == 7,
           "partial record has " + std::to_string(e.record().rows.size()) + " rows");
      c.ok(e.record().summary.diverged, "summary not flagged");
    }
  });
}

inline SuiteResult harness_spectrum_columns() {
  return Check("harness.spectrum_columns").guarded([](Check& c) {
    const auto cay = run(small_run_config(ExpKind::cayley, 200));
    for (const auto& r : cay.rows) {
      c.le(r.spectrum_drift, 1e-10, "cayley recorded drift");
    }
    const auto e2 = run(small_run_config(ExpKind::e2, 200));
    for (const auto& r : e2.rows) {
      c.le(r.spectrum_drift, 200 * 1e-6, "e2 recorded drift");
    }
  });
}

} // namespace suites

/// All suites in a fixed order; each name appears once.
[[nodiscard]] inline std::vector<SuiteResult> run_selftest(const SelftestKernels& k = {}) {
  using namespace suites;
  return {
      linalg_cayley_orthogonality(),
      linalg_e2_orthogonality(k),
      linalg_taylor_order(),
      linalg_svd_reconstruct(),
      linalg_solve_roundtrip(),
      linalg_spectral_le_frobenius(),
      manifold_lie_skew(),
      manifold_descent_identities(),
      manifold_skew_pairing(),
      manifold_stationarity_characterization(),
      manifold_orthogonal_equivalence(),
      manifold_bilateral_normalize(),
      optim_spectrum_preservation(k),
      optim_skew_persistence(),
      optim_rms_contract(),
      optim_alternation_parity(),
      optim_monotone_descent(),
      optim_mup_direction(),
      optim_baselines_anchor(),
      problems_gradient_oracle(),
      problems_convexity(),
      problems_procrustes_reachable(),
      harness_determinism(),
      harness_divergence(),
      harness_spectrum_columns(),
  };
}

} // namespace pion
