#pragma once

// Geometry of the isospectral manifold {U W₀ Vᵀ}: Lie-algebra gradients of
// the two orthogonal factors, their normalizations, and the diagnostics used
// to check that an iterate stayed on the manifold.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pion/errors.hpp"
#include "pion/linalg.hpp"

namespace pion {

/// Input-side (d_in×d_in) and output-side (d_out×d_out) skew generators.
struct LiePair {
  Matrix g_in;
  Matrix g_out;
};

/// Reference singular values of the initial weight.
struct SpectrumRef {
  std::vector<double> values;
  std::int64_t captured_at_step = 0;
};

[[nodiscard]] inline SpectrumRef capture_spectrum(const Matrix& w, std::int64_t step = 0) {
  return {singular_values(w), step};
}

namespace detail {

/// M − Mᵀ, written so the result is skew to the last bit.
inline Matrix antisymmetrize(const Matrix& m) {
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double v = m(i, j) - m(j, i);
      s(i, j) = v;
      s(j, i) = -v;
    }
  }
  return s;
}

} // namespace detail

/// g_in = WᵀG − GᵀW and g_out = GWᵀ − WGᵀ.
[[nodiscard]] inline LiePair lie_gradients(const Matrix& w, const Matrix& g) {
  detail::require_same_shape(w, g, "lie_gradients");
  return {detail::antisymmetrize(matmul_tn(w, g)), detail::antisymmetrize(matmul_nt(g, w))};
}

/// (⟨G, W·g_in⟩, ⟨G, g_out·W⟩); each equals half the squared norm of its generator.
[[nodiscard]] inline std::pair<double, double> descent_pairing(const Matrix& w, const Matrix& g) {
  const LiePair lp = lie_gradients(w, g);
  return {frobenius_inner(g, matmul(w, lp.g_in)), frobenius_inner(g, matmul(lp.g_out, w))};
}

/// ‖g_in‖² + ‖g_out‖².
[[nodiscard]] inline double stationarity_measure(const LiePair& lp) {
  const double a = frobenius_norm(lp.g_in);
  const double b = frobenius_norm(lp.g_out);
  return a * a + b * b;
}

[[nodiscard]] inline double stationarity_measure(const Matrix& w, const Matrix& g) {
  return stationarity_measure(lie_gradients(w, g));
}

[[nodiscard]] inline bool is_first_order_stationary(const Matrix& w, const Matrix& g, double tol) {
  if (!(tol > 0.0)) {
    throw DomainError("is_first_order_stationary: tol must be positive");
  }
  const double wn = frobenius_norm(w);
  const double gn = frobenius_norm(g);
  return stationarity_measure(w, g) <= tol * tol * (1.0 + wn * wn * gn * gn);
}

inline constexpr double kAnglePairingTolerance = 1e-8;

/// Planar rotation angles |θ_j| of a skew matrix, one per invariant plane,
/// descending. The unpaired zero of an odd dimension is dropped.
[[nodiscard]] inline std::vector<double> rotation_angles(const Matrix& s) {
  const double err = skew_error(s);
  if (err > 1e-10 * (1.0 + frobenius_norm(s))) {
    throw DomainError("rotation_angles: input is not skew-symmetric (skew error " +
                      std::to_string(err) + ")");
  }
  const auto sv = singular_values(s);
  const double scale_ref = sv.empty() ? 0.0 : sv.front();
  std::vector<double> angles;
  angles.reserve(sv.size() / 2);
  for (std::size_t k = 0; k + 1 < sv.size(); k += 2) {
    if (std::abs(sv[k] - sv[k + 1]) > kAnglePairingTolerance * scale_ref + 1e-300) {
      throw DomainError("rotation_angles: singular values failed to pair");
    }
    angles.push_back(0.5 * (sv[k] + sv[k + 1]));
  }
  return angles;
}

struct BilateralNormalized {
  LiePair pair;
  bool in_passthrough = false;  ///< g_in was zero and left unchanged
  bool out_passthrough = false; ///< g_out was zero and left unchanged
};

/// Rescales each generator to Frobenius norm √d of its side.
[[nodiscard]] inline BilateralNormalized bilateral_normalize(const LiePair& lp) {
  BilateralNormalized out{lp};
  auto normalize = [](Matrix& g, bool& passthrough) {
    const double n = frobenius_norm(g);
    if (n == 0.0) {
      passthrough = true;
      return;
    }
    g = scale(g, std::sqrt(static_cast<double>(g.rows())) / n);
  };
  normalize(out.pair.g_in, out.in_passthrough);
  normalize(out.pair.g_out, out.out_passthrough);
  return out;
}

/// RMS scaling coefficient c·√(d_out·d_in) / (‖first-order ΔW/η‖_F + ε).
/// Pass nullptr for a side that does not move this step.
[[nodiscard]] inline double rms_alpha(const Matrix& w, const Matrix* a_in, const Matrix* a_out,
                                      double c, double eps) {
  if (!(c > 0.0) || !(eps > 0.0)) {
    throw DomainError("rms_alpha: c and eps must be positive");
  }
  if (a_in == nullptr && a_out == nullptr) {
    throw std::invalid_argument("rms_alpha: at least one side must be present");
  }
  Matrix first_order(w.rows(), w.cols());
  if (a_out != nullptr) {
    first_order = matmul(*a_out, w);
  }
  if (a_in != nullptr) {
    axpy(first_order, 1.0, matmul(w, *a_in));
  }
  const double dims = static_cast<double>(w.rows()) * static_cast<double>(w.cols());
  return c * std::sqrt(dims) / (frobenius_norm(first_order) + eps);
}

/// Worst singular-value deviation from the reference, relative to its top value.
[[nodiscard]] inline double spectrum_drift(const Matrix& w, const SpectrumRef& ref) {
  const auto sv = singular_values(w);
  if (sv.size() != ref.values.size()) {
    throw ShapeError("spectrum_drift: " + std::to_string(sv.size()) +
                     " singular values vs reference of " + std::to_string(ref.values.size()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    worst = std::max(worst, std::abs(sv[i] - ref.values[i]));
  }
  return worst / ((ref.values.empty() ? 0.0 : ref.values.front()) + 1e-300);
}

} // namespace pion
