#pragma once

// The Pion optimizer family. Every variant updates a weight by orthogonal
// equivalence, W ← E_out · W · E_in, where E_out and E_in approximate the
// exponentials of skew generators built from the gradient. Variants differ in
// where momentum lives (Lie algebra, ambient space, ambient with transport),
// how the exponential is approximated, and whether both sides move each step.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "pion/errors.hpp"
#include "pion/linalg.hpp"
#include "pion/manifold.hpp"

namespace pion {

enum class ExpKind { taylor, cayley, e2 };
enum class MomentumScheme { none, lie, ambient, transported_ambient };
enum class SecondMoment { none, lie, ambient };
enum class UpdateKind { bilateral, alternating };
enum class MupKind { none, spectral_normalize, orthogonalize };
enum class Side { in, out, both };

struct ExpScheme {
  ExpKind kind = ExpKind::e2;
  int taylor_order = 2; ///< used when kind == taylor

  friend bool operator==(const ExpScheme&, const ExpScheme&) = default;
};

struct UpdateMode {
  UpdateKind kind = UpdateKind::bilateral;
  int period = 1; ///< steps per side when alternating

  friend bool operator==(const UpdateMode&, const UpdateMode&) = default;
};

struct MupMode {
  MupKind kind = MupKind::none;
  double target = 1.0; ///< spectral norm each generator is scaled to
  int ns_iters = 5;    ///< Newton-Schulz iterations for orthogonalize
  int power_iters = 100;
  double power_tol = 1e-12;

  friend bool operator==(const MupMode&, const MupMode&) = default;
};

struct PionConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double rms_c = 0.2;
  double eps = 1e-8;
  ExpScheme exp_scheme{};
  MomentumScheme momentum_scheme = MomentumScheme::lie;
  SecondMoment second_moment = SecondMoment::lie;
  UpdateMode update_mode{};
  MupMode mup_mode{};
  bool rms_enabled = true;
  bool bias_correction = false;
  /// Scale used in place of the RMS coefficient when RMS control is off.
  /// Unset means 1.0, or 10.0 under mup orthogonalize.
  std::optional<double> fixed_alpha;

  friend bool operator==(const PionConfig&, const PionConfig&) = default;
};

inline std::string_view to_string(ExpKind k) {
  switch (k) {
  case ExpKind::taylor: return "taylor";
  case ExpKind::cayley: return "cayley";
  case ExpKind::e2: return "e2";
  }
  return "?";
}

inline std::string_view to_string(MomentumScheme m) {
  switch (m) {
  case MomentumScheme::none: return "none";
  case MomentumScheme::lie: return "lie";
  case MomentumScheme::ambient: return "ambient";
  case MomentumScheme::transported_ambient: return "transported_ambient";
  }
  return "?";
}

inline std::string_view to_string(SecondMoment s) {
  switch (s) {
  case SecondMoment::none: return "none";
  case SecondMoment::lie: return "lie";
  case SecondMoment::ambient: return "ambient";
  }
  return "?";
}

inline std::string_view to_string(UpdateKind u) {
  return u == UpdateKind::bilateral ? "bilateral" : "alternating";
}

inline std::string_view to_string(MupKind m) {
  switch (m) {
  case MupKind::none: return "none";
  case MupKind::spectral_normalize: return "spectral_normalize";
  case MupKind::orthogonalize: return "orthogonalize";
  }
  return "?";
}

inline std::string_view to_string(Side s) {
  switch (s) {
  case Side::in: return "in";
  case Side::out: return "out";
  case Side::both: return "both";
  }
  return "?";
}

[[nodiscard]] inline bool uses_lie_state(const PionConfig& c) {
  return c.momentum_scheme == MomentumScheme::lie || c.momentum_scheme == MomentumScheme::none;
}

/// RMS control is switched off by mup orthogonalize, which runs at a fixed scale.
[[nodiscard]] inline bool effective_rms(const PionConfig& c) {
  return c.rms_enabled && c.mup_mode.kind != MupKind::orthogonalize;
}

[[nodiscard]] inline double effective_fixed_alpha(const PionConfig& c) {
  if (c.fixed_alpha) {
    return *c.fixed_alpha;
  }
  return c.mup_mode.kind == MupKind::orthogonalize ? 10.0 : 1.0;
}

inline void validate(const PionConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("PionConfig: " + msg); };
  if (!(c.lr > 0.0)) fail("lr must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(c.rms_c > 0.0)) fail("rms_c must be > 0");
  if (!(c.eps > 0.0)) fail("eps must be > 0");
  if (c.exp_scheme.kind == ExpKind::taylor && c.exp_scheme.taylor_order < 1) {
    fail("taylor order must be >= 1");
  }
  if (c.update_mode.kind == UpdateKind::alternating && c.update_mode.period < 1) {
    fail("alternating period must be >= 1");
  }
  if (c.mup_mode.kind == MupKind::spectral_normalize && !(c.mup_mode.target > 0.0)) {
    fail("mup target must be > 0");
  }
  if (c.mup_mode.kind == MupKind::orthogonalize && c.mup_mode.ns_iters < 1) {
    fail("ns_iters must be >= 1");
  }
  if (c.fixed_alpha && !(*c.fixed_alpha > 0.0)) fail("fixed_alpha must be > 0");
  const bool ambient_family = c.momentum_scheme == MomentumScheme::ambient ||
                              c.momentum_scheme == MomentumScheme::transported_ambient;
  if (ambient_family && c.second_moment == SecondMoment::lie) {
    fail(std::string(to_string(c.momentum_scheme)) +
         " momentum pairs with second_moment none or ambient");
  }
  if (!ambient_family && c.second_moment == SecondMoment::ambient) {
    fail(std::string(to_string(c.momentum_scheme)) +
         " momentum pairs with second_moment none or lie");
  }
}

/// Per-weight optimizer state. Unused buffers stay empty.
struct ParamState {
  std::int64_t step = 0;
  Matrix m_in, v_in;   ///< d_in×d_in
  Matrix m_out, v_out; ///< d_out×d_out
  Matrix m, v;         ///< d_out×d_in
  SpectrumRef spectrum_ref;
  MomentumScheme momentum_scheme = MomentumScheme::lie;
  SecondMoment second_moment = SecondMoment::lie;
};

struct StepReport {
  double alpha = 0.0;
  double delta_w_fro_over_eta = 0.0;
  double stationarity = 0.0;
  Side side_taken = Side::both;
};

struct StepResult {
  Matrix w;
  StepReport report;
};

[[nodiscard]] inline ParamState pion_init(std::size_t d_out, std::size_t d_in, const Matrix& w0,
                                          const PionConfig& config) {
  validate(config);
  if (w0.rows() != d_out || w0.cols() != d_in) {
    throw ShapeError("pion_init: weight is " + detail::shape_str(w0) + ", expected " +
                     std::to_string(d_out) + "x" + std::to_string(d_in));
  }
  ParamState s;
  s.momentum_scheme = config.momentum_scheme;
  s.second_moment = config.second_moment;
  if (uses_lie_state(config)) {
    s.m_in = Matrix::zeros(d_in, d_in);
    s.m_out = Matrix::zeros(d_out, d_out);
    if (config.second_moment == SecondMoment::lie) {
      s.v_in = Matrix::zeros(d_in, d_in);
      s.v_out = Matrix::zeros(d_out, d_out);
    }
  } else {
    s.m = Matrix::zeros(d_out, d_in);
    if (config.second_moment == SecondMoment::ambient) {
      s.v = Matrix::zeros(d_out, d_in);
    }
  }
  s.spectrum_ref = capture_spectrum(w0, 0);
  return s;
}

/// Exponential surrogate of s·A under the configured scheme.
[[nodiscard]] inline Matrix exp_factor(const ExpScheme& scheme, const Matrix& a, double s) {
  switch (scheme.kind) {
  case ExpKind::e2: return exp_e2(a, s);
  case ExpKind::taylor: return exp_taylor(scale(a, s), scheme.taylor_order);
  case ExpKind::cayley: return exp_cayley(scale(a, s));
  }
  throw ConfigError("unknown exp scheme");
}

/// Conditions both generators toward Θ(1) spectral norm. Zero sides pass through.
[[nodiscard]] inline LiePair apply_mup(const LiePair& lp, const MupMode& mode) {
  if (mode.kind == MupKind::none) {
    return lp;
  }
  auto condition = [&mode](const Matrix& g) {
    if (frobenius_norm(g) == 0.0) {
      return g;
    }
    if (mode.kind == MupKind::spectral_normalize) {
      return scale(g, mode.target / spectral_norm(g, mode.power_iters, mode.power_tol));
    }
    // The odd polynomial keeps skewness only up to rounding; the elementwise
    // second-moment division would amplify the symmetric residue.
    return skew_part(newton_schulz_orthogonalize(g, mode.ns_iters));
  };
  return {condition(lp.g_in), condition(lp.g_out)};
}

namespace detail {

inline Side side_for_step(const UpdateMode& mode, std::int64_t t) {
  if (mode.kind == UpdateKind::bilateral) {
    return Side::both;
  }
  // Blocks of `period` steps counted from t = 1; odd blocks move the input side.
  const std::int64_t block = (t - 1) / mode.period + 1;
  return block % 2 == 0 ? Side::out : Side::in;
}

inline void ema(Matrix& acc, double beta, const Matrix& x) {
  auto ad = acc.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    ad[i] = beta * ad[i] + (1.0 - beta) * xd[i];
  }
}

inline void ema_square(Matrix& acc, double beta, const Matrix& x) {
  auto ad = acc.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    ad[i] = beta * ad[i] + (1.0 - beta) * (xd[i] * xd[i]);
  }
}

struct RotationFactors {
  std::optional<Matrix> out;
  std::optional<Matrix> in;
};

/// Picks α, builds the exponential factors for the moving sides, and applies
/// them to W. A_in/A_out are the descent generators (already negated).
inline std::pair<Matrix, RotationFactors> rotate(const Matrix& w, const Matrix& a_in,
                                                 const Matrix& a_out, Side side,
                                                 const PionConfig& config, double& alpha) {
  const Matrix* in = side == Side::out ? nullptr : &a_in;
  const Matrix* out = side == Side::in ? nullptr : &a_out;
  alpha = effective_rms(config) ? rms_alpha(w, in, out, config.rms_c, config.eps)
                                : effective_fixed_alpha(config);
  const double s = config.lr * alpha;
  RotationFactors f;
  Matrix next = w;
  if (out != nullptr) {
    f.out = exp_factor(config.exp_scheme, *out, s);
    next = matmul(*f.out, next);
  }
  if (in != nullptr) {
    f.in = exp_factor(config.exp_scheme, *in, s);
    next = matmul(next, *f.in);
  }
  return {std::move(next), std::move(f)};
}

inline void require_lie_state(const ParamState& st, const Matrix& w) {
  if (st.m_in.rows() != w.cols() || st.m_out.rows() != w.rows()) {
    throw StateError("pion_step_lie: state does not hold Lie moments for a " +
                     shape_str(w) + " weight");
  }
}

} // namespace detail

/// Stateless update W' = E(−η g_out)·W·E(−η g_in), optionally RMS-scaled.
[[nodiscard]] inline StepResult pion_step_raw(const Matrix& w, const Matrix& g,
                                              const PionConfig& config) {
  LiePair lp = lie_gradients(w, g);
  StepReport rep;
  rep.stationarity = stationarity_measure(lp);
  lp = apply_mup(lp, config.mup_mode);
  const Matrix a_in = scale(lp.g_in, -1.0);
  const Matrix a_out = scale(lp.g_out, -1.0);
  auto [next, factors] = detail::rotate(w, a_in, a_out, Side::both, config, rep.alpha);
  rep.side_taken = Side::both;
  rep.delta_w_fro_over_eta = frobenius_norm(sub(next, w)) / config.lr;
  return {std::move(next), rep};
}

/// Lie-algebra momentum variant: moments accumulate on both generators every
/// step; under alternation only the weight update alternates.
[[nodiscard]] inline StepResult pion_step_lie(const Matrix& w, const Matrix& g, ParamState& state,
                                              const PionConfig& config) {
  detail::require_same_shape(w, g, "pion_step_lie");
  if (!uses_lie_state(config) || state.momentum_scheme != config.momentum_scheme ||
      state.second_moment != config.second_moment) {
    throw StateError("pion_step_lie: state was initialized for a different scheme");
  }
  detail::require_lie_state(state, w);
  const bool second = config.second_moment == SecondMoment::lie;
  if (second && (state.v_in.rows() != w.cols() || state.v_out.rows() != w.rows())) {
    throw StateError("pion_step_lie: missing Lie second moments");
  }

  const std::int64_t t = ++state.step;
  LiePair lp = lie_gradients(w, g);
  StepReport rep;
  rep.stationarity = stationarity_measure(lp);
  lp = apply_mup(lp, config.mup_mode);

  const double beta1 = config.momentum_scheme == MomentumScheme::none ? 0.0 : config.beta1;
  detail::ema(state.m_in, beta1, lp.g_in);
  detail::ema(state.m_out, beta1, lp.g_out);
  if (second) {
    detail::ema_square(state.v_in, config.beta2, lp.g_in);
    detail::ema_square(state.v_out, config.beta2, lp.g_out);
  }

  const double c1 = config.bias_correction ? 1.0 - std::pow(beta1, static_cast<double>(t)) : 1.0;
  const double c2 =
      config.bias_correction ? 1.0 - std::pow(config.beta2, static_cast<double>(t)) : 1.0;
  auto direction = [&](const Matrix& m, const Matrix& v) {
    const Matrix mh = c1 == 1.0 ? m : scale(m, 1.0 / c1);
    if (!second) {
      return scale(mh, -1.0);
    }
    const Matrix vh = c2 == 1.0 ? v : scale(v, 1.0 / c2);
    return scale(elem_div_sqrt_eps(mh, vh, config.eps), -1.0);
  };
  const Matrix a_in = direction(state.m_in, state.v_in);
  const Matrix a_out = direction(state.m_out, state.v_out);

  rep.side_taken = detail::side_for_step(config.update_mode, t);
  auto [next, factors] = detail::rotate(w, a_in, a_out, rep.side_taken, config, rep.alpha);
  rep.delta_w_fro_over_eta = frobenius_norm(sub(next, w)) / config.lr;
  return {std::move(next), rep};
}

/// Ambient-space momentum variant. With transported_ambient the first moment
/// is carried along by the same rotation factors applied to W; with ambient it
/// is left in place.
[[nodiscard]] inline StepResult pion_step_transported(const Matrix& w, const Matrix& g,
                                                      ParamState& state,
                                                      const PionConfig& config) {
  detail::require_same_shape(w, g, "pion_step_transported");
  if (uses_lie_state(config) || state.momentum_scheme != config.momentum_scheme ||
      state.second_moment != config.second_moment) {
    throw StateError("pion_step_transported: state was initialized for a different scheme");
  }
  const bool second = config.second_moment == SecondMoment::ambient;
  if (state.m.rows() != w.rows() || state.m.cols() != w.cols() ||
      (second && (state.v.rows() != w.rows() || state.v.cols() != w.cols()))) {
    throw StateError("pion_step_transported: state does not hold ambient moments for a " +
                     detail::shape_str(w) + " weight");
  }

  const std::int64_t t = ++state.step;
  StepReport rep;
  rep.stationarity = stationarity_measure(w, g);

  detail::ema(state.m, config.beta1, g);
  if (second) {
    // The second moment squares the momentum, not the raw gradient.
    detail::ema_square(state.v, config.beta2, state.m);
  }
  const double c1 =
      config.bias_correction ? 1.0 - std::pow(config.beta1, static_cast<double>(t)) : 1.0;
  const double c2 =
      config.bias_correction ? 1.0 - std::pow(config.beta2, static_cast<double>(t)) : 1.0;
  const Matrix mh = c1 == 1.0 ? state.m : scale(state.m, 1.0 / c1);
  const Matrix g_tilde =
      second ? elem_div_sqrt_eps(mh, c2 == 1.0 ? state.v : scale(state.v, 1.0 / c2), config.eps)
             : mh;

  LiePair lp = apply_mup(lie_gradients(w, g_tilde), config.mup_mode);
  const Matrix a_in = scale(lp.g_in, -1.0);
  const Matrix a_out = scale(lp.g_out, -1.0);

  rep.side_taken = detail::side_for_step(config.update_mode, t);
  auto [next, factors] = detail::rotate(w, a_in, a_out, rep.side_taken, config, rep.alpha);
  if (config.momentum_scheme == MomentumScheme::transported_ambient) {
    if (factors.out) {
      state.m = matmul(*factors.out, state.m);
    }
    if (factors.in) {
      state.m = matmul(state.m, *factors.in);
    }
  }
  rep.delta_w_fro_over_eta = frobenius_norm(sub(next, w)) / config.lr;
  return {std::move(next), rep};
}

/// Dispatches on the configured momentum scheme.
[[nodiscard]] inline StepResult pion_step(const Matrix& w, const Matrix& g, ParamState& state,
                                          const PionConfig& config) {
  return uses_lie_state(config) ? pion_step_lie(w, g, state, config)
                                : pion_step_transported(w, g, state, config);
}

} // namespace pion
