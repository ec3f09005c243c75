#pragma once

// Reference optimizers for comparison runs: SGD with heavy-ball momentum,
// AdamW, and a minimal Muon (Newton-Schulz on the momentum).

#include <cmath>
#include <cstdint>

#include "pion/linalg.hpp"

namespace pion {

struct SgdHyper {
  double lr = 1e-2;
  double momentum = 0.9;
  double weight_decay = 0.0;

  friend bool operator==(const SgdHyper&, const SgdHyper&) = default;
};

struct SgdState {
  Matrix buf;
};

inline Matrix sgd_step(const Matrix& w, const Matrix& g, SgdState& state, const SgdHyper& h) {
  detail::require_same_shape(w, g, "sgd_step");
  Matrix d = g;
  if (h.weight_decay != 0.0) {
    axpy(d, h.weight_decay, w);
  }
  if (state.buf.empty()) {
    state.buf = Matrix::zeros(w.rows(), w.cols());
  }
  detail::require_same_shape(state.buf, w, "sgd_step");
  auto bd = state.buf.data();
  auto dd = d.data();
  for (std::size_t i = 0; i < bd.size(); ++i) {
    bd[i] = h.momentum * bd[i] + dd[i];
  }
  Matrix next = w;
  axpy(next, -h.lr, state.buf);
  return next;
}

struct AdamWHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  friend bool operator==(const AdamWHyper&, const AdamWHyper&) = default;
};

struct AdamWState {
  std::int64_t step = 0;
  Matrix m, v;
};

inline Matrix adamw_step(const Matrix& w, const Matrix& g, AdamWState& state,
                         const AdamWHyper& h) {
  detail::require_same_shape(w, g, "adamw_step");
  if (state.m.empty()) {
    state.m = Matrix::zeros(w.rows(), w.cols());
    state.v = Matrix::zeros(w.rows(), w.cols());
  }
  detail::require_same_shape(state.m, w, "adamw_step");
  const auto t = static_cast<double>(++state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  Matrix next = scale(w, 1.0 - h.lr * h.weight_decay);
  auto md = state.m.data();
  auto vd = state.v.data();
  auto gd = g.data();
  auto nd = next.data();
  for (std::size_t i = 0; i < md.size(); ++i) {
    md[i] = h.beta1 * md[i] + (1.0 - h.beta1) * gd[i];
    vd[i] = h.beta2 * vd[i] + (1.0 - h.beta2) * gd[i] * gd[i];
    nd[i] -= h.lr * (md[i] / c1) / (std::sqrt(vd[i] / c2) + h.eps);
  }
  return next;
}

struct MuonLiteHyper {
  double lr = 2e-2;
  double beta1 = 0.95;
  int ns_iters = 5;

  friend bool operator==(const MuonLiteHyper&, const MuonLiteHyper&) = default;
};

struct MuonLiteState {
  Matrix m;
};

/// W ← W − η·√(d_out/d_in)·NS(m), with m an EMA of the gradient.
inline Matrix muon_lite_step(const Matrix& w, const Matrix& g, MuonLiteState& state,
                             const MuonLiteHyper& h) {
  detail::require_same_shape(w, g, "muon_lite_step");
  if (state.m.empty()) {
    state.m = Matrix::zeros(w.rows(), w.cols());
  }
  detail::require_same_shape(state.m, w, "muon_lite_step");
  auto md = state.m.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < md.size(); ++i) {
    md[i] = h.beta1 * md[i] + (1.0 - h.beta1) * gd[i];
  }
  if (frobenius_norm(state.m) == 0.0) {
    return w;
  }
  const double shape =
      std::sqrt(static_cast<double>(w.rows()) / static_cast<double>(w.cols()));
  Matrix next = w;
  axpy(next, -h.lr * shape, newton_schulz_orthogonalize(state.m, h.ns_iters));
  return next;
}

} // namespace pion
