#pragma once

// Dense row-major double matrices and the handful of kernels the optimizer
// family needs: products, norms, skew projections, LU solves, one-sided
// Jacobi singular values, power iteration, Newton-Schulz, and three
// approximations to the matrix exponential.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pion/errors.hpp"

namespace pion {

class Matrix {
public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  /// Row-wise literal, e.g. `Matrix{{1, 2}, {3, 4}}`.
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) {
        throw ShapeError("Matrix: ragged initializer");
      }
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = 1.0;
    }
    return m;
  }

  static Matrix diag(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      m(i, i) = values[i];
    }
    return m;
  }

  static Matrix diag(std::initializer_list<double> values) {
    return diag(std::span<const double>(values.begin(), values.size()));
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

inline void require_square(const Matrix& a, const char* op) {
  if (!a.is_square()) {
    throw ShapeError(std::string(op) + ": expected square matrix, got " + shape_str(a));
  }
}

} // namespace detail

[[nodiscard]] inline bool all_finite(const Matrix& a) noexcept {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double x) { return std::isfinite(x); });
}

[[nodiscard]] inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = a(i, j);
    }
  }
  return t;
}

/// a * b.
[[nodiscard]] inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + detail::shape_str(a) + " * " +
                     detail::shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) {
        continue;
      }
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

/// aᵀ * b without materializing the transpose.
[[nodiscard]] inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ " + detail::shape_str(a) + " vs " +
                     detail::shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k).data();
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) {
        continue;
      }
      double* crow = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += aki * brow[j];
      }
    }
  }
  return c;
}

/// a * bᵀ. Transposing b first keeps the inner loop contiguous, which beats
/// row-by-row dot products once the operands are larger than a few rows.
[[nodiscard]] inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ " + detail::shape_str(a) + " vs " +
                     detail::shape_str(b));
  }
  return matmul(a, transpose(b));
}

[[nodiscard]] inline Matrix add(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "add");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) {
    cd[i] += bd[i];
  }
  return c;
}

[[nodiscard]] inline Matrix sub(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "sub");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) {
    cd[i] -= bd[i];
  }
  return c;
}

[[nodiscard]] inline Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& x : c.data()) {
    x *= s;
  }
  return c;
}

[[nodiscard]] inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "hadamard");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) {
    cd[i] *= bd[i];
  }
  return c;
}

/// m[i,j] / (sqrt(v[i,j]) + eps), the Adam-style preconditioner map.
[[nodiscard]] inline Matrix elem_div_sqrt_eps(const Matrix& m, const Matrix& v, double eps) {
  detail::require_same_shape(m, v, "elem_div_sqrt_eps");
  Matrix c(m.rows(), m.cols());
  auto md = m.data();
  auto vd = v.data();
  auto cd = c.data();
  for (std::size_t i = 0; i < cd.size(); ++i) {
    if (vd[i] < 0.0) {
      throw DomainError("elem_div_sqrt_eps: negative second moment entry");
    }
    cd[i] = md[i] == 0.0 ? 0.0 : md[i] / (std::sqrt(vd[i]) + eps);
  }
  return c;
}

/// dst += s * src, in place.
inline void axpy(Matrix& dst, double s, const Matrix& src) {
  detail::require_same_shape(dst, src, "axpy");
  auto dd = dst.data();
  auto sd = src.data();
  for (std::size_t i = 0; i < dd.size(); ++i) {
    dd[i] += s * sd[i];
  }
}

inline Matrix operator+(const Matrix& a, const Matrix& b) { return add(a, b); }
inline Matrix operator-(const Matrix& a, const Matrix& b) { return sub(a, b); }
inline Matrix operator-(const Matrix& a) { return scale(a, -1.0); }
inline Matrix operator*(double s, const Matrix& a) { return scale(a, s); }
inline Matrix operator*(const Matrix& a, double s) { return scale(a, s); }
inline Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

[[nodiscard]] inline double frobenius_inner(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "frobenius_inner");
  double s = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    s += ad[i] * bd[i];
  }
  return s;
}

[[nodiscard]] inline double frobenius_norm(const Matrix& a) noexcept {
  // Scaled accumulation keeps huge entries from overflowing the square.
  double amax = 0.0;
  for (double x : a.data()) {
    amax = std::max(amax, std::abs(x));
  }
  if (amax == 0.0 || !std::isfinite(amax)) {
    return amax;
  }
  double s = 0.0;
  for (double x : a.data()) {
    const double r = x / amax;
    s += r * r;
  }
  return amax * std::sqrt(s);
}

/// ‖A + Aᵀ‖_F; zero exactly when A is skew-symmetric.
[[nodiscard]] inline double skew_error(const Matrix& a) {
  detail::require_square(a, "skew_error");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double e = a(i, j) + a(j, i);
      s += e * e;
    }
  }
  return std::sqrt(s);
}

/// ½(A − Aᵀ).
[[nodiscard]] inline Matrix skew_part(const Matrix& a) {
  detail::require_square(a, "skew_part");
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      s(i, j) = 0.5 * (a(i, j) - a(j, i));
    }
  }
  return s;
}

/// ‖QᵀQ − I‖_F.
[[nodiscard]] inline double orthogonality_error(const Matrix& q) {
  Matrix g = matmul_tn(q, q);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    g(i, i) -= 1.0;
  }
  return frobenius_norm(g);
}

/// Truncated power series Σ_{k=0..order} A^k / k!.
[[nodiscard]] inline Matrix exp_taylor(const Matrix& a, int order) {
  detail::require_square(a, "exp_taylor");
  if (order < 1) {
    throw DomainError("exp_taylor: order must be >= 1");
  }
  Matrix result = Matrix::identity(a.rows());
  Matrix term = Matrix::identity(a.rows());
  for (int k = 1; k <= order; ++k) {
    term = scale(matmul(term, a), 1.0 / k);
    axpy(result, 1.0, term);
  }
  return result;
}

/// I + sA + ½(sA)², with s = η·α folded into one scalar.
[[nodiscard]] inline Matrix exp_e2(const Matrix& a, double eta_alpha) {
  detail::require_square(a, "exp_e2");
  const Matrix sa = scale(a, eta_alpha);
  Matrix result = matmul(sa, sa);
  for (double& x : result.data()) {
    x *= 0.5;
  }
  axpy(result, 1.0, sa);
  for (std::size_t i = 0; i < result.rows(); ++i) {
    result(i, i) += 1.0;
  }
  return result;
}

/// Solves A·X = B by LU with partial pivoting.
[[nodiscard]] inline Matrix solve(const Matrix& a, const Matrix& b) {
  detail::require_square(a, "solve");
  if (b.rows() != a.rows()) {
    throw ShapeError("solve: rhs has " + std::to_string(b.rows()) + " rows, expected " +
                     std::to_string(a.rows()));
  }
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  Matrix lu = a;
  Matrix x = b;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > best) {
        best = std::abs(lu(i, k));
        piv = i;
      }
    }
    if (!(best >= 1e-300)) {
      throw SingularityError("solve: matrix is singular to working precision (pivot " +
                             std::to_string(k) + ")");
    }
    if (piv != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(piv).begin());
      std::swap_ranges(x.row(k).begin(), x.row(k).end(), x.row(piv).begin());
    }
    const double pivot = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / pivot;
      if (f == 0.0) {
        continue;
      }
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) {
        lu(i, j) -= f * lu(k, j);
      }
      for (std::size_t j = 0; j < m; ++j) {
        x(i, j) -= f * x(k, j);
      }
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = x(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) {
        s -= lu(kk, c) * x(c, j);
      }
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

/// (I − A/2)⁻¹(I + A/2). Exactly orthogonal, up to the solve, for skew A.
[[nodiscard]] inline Matrix exp_cayley(const Matrix& a) {
  detail::require_square(a, "exp_cayley");
  const std::size_t n = a.rows();
  Matrix lhs = scale(a, -0.5);
  Matrix rhs = scale(a, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    lhs(i, i) += 1.0;
    rhs(i, i) += 1.0;
  }
  return solve(lhs, rhs);
}

inline constexpr double kJacobiTolerance = 1e-13;
inline constexpr int kJacobiMaxSweeps = 100;

/// Singular values, descending, by cyclic one-sided (Hestenes) Jacobi.
[[nodiscard]] inline std::vector<double> singular_values(const Matrix& a) {
  // Orthogonalize the columns of the taller orientation, stored column-major.
  const bool tall = a.rows() >= a.cols();
  const std::size_t m = tall ? a.rows() : a.cols();
  const std::size_t n = tall ? a.cols() : a.rows();
  std::vector<double> cols(m * n);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (tall) {
        cols[j * m + i] = a(i, j);
      } else {
        cols[i * m + j] = a(i, j);
      }
    }
  }

  std::vector<double> norms2(n);
  auto col = [&](std::size_t j) { return cols.data() + j * m; };
  auto dot = [m](const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      s += x[i] * y[i];
    }
    return s;
  };
  for (std::size_t j = 0; j < n; ++j) {
    norms2[j] = dot(col(j), col(j));
  }

  bool converged = n < 2;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    double max_rel = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = norms2[p];
        const double beta = norms2[q];
        if (alpha == 0.0 || beta == 0.0) {
          continue;
        }
        double* cp = col(p);
        double* cq = col(q);
        const double gamma = dot(cp, cq);
        const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
        max_rel = std::max(max_rel, rel);
        if (rel <= kJacobiTolerance) {
          continue;
        }
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = cp[i];
          const double xq = cq[i];
          cp[i] = c * xp - s * xq;
          cq[i] = s * xp + c * xq;
        }
        norms2[p] = dot(cp, cp);
        norms2[q] = dot(cq, cq);
      }
    }
    converged = max_rel <= kJacobiTolerance;
  }
  if (!converged) {
    throw ConvergenceError("singular_values: Jacobi did not converge in " +
                           std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    sv[j] = std::sqrt(dot(col(j), col(j)));
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

/// Largest singular value by power iteration on AᵀA from a fixed start.
[[nodiscard]] inline double spectral_norm(const Matrix& a, int iters = 50, double tol = 1e-8) {
  const std::size_t n = a.cols();
  const double fro = frobenius_norm(a);
  if (fro == 0.0) {
    return 0.0;
  }
  auto apply = [&a](const std::vector<double>& v) {
    std::vector<double> u(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto r = a.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) {
        s += r[j] * v[j];
      }
      u[i] = s;
    }
    return u;
  };
  auto apply_t = [&a, n](const std::vector<double>& u) {
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto r = a.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        v[j] += r[j] * u[i];
      }
    }
    return v;
  };
  auto norm = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) {
      s += e * e;
    }
    return std::sqrt(s);
  };
  auto normalize = [&norm](std::vector<double>& x) {
    const double s = norm(x);
    for (double& e : x) {
      e /= s;
    }
  };

  std::vector<double> v(n, 1.0);
  normalize(v);
  if (norm(apply(v)) <= 1e-12 * fro) {
    // All-ones lies (numerically) in the null space; fall back to an
    // irregular deterministic start.
    for (std::size_t j = 0; j < n; ++j) {
      v[j] = std::cos(0.7548776662466927 * static_cast<double>(j + 1)) + 0.1;
    }
    normalize(v);
  }

  double sigma = 0.0;
  for (int it = 0; it < std::max(iters, 1); ++it) {
    const auto u = apply(v);
    const double next = norm(u);
    auto w = apply_t(u);
    const double wn = norm(w);
    if (wn == 0.0) {
      return next;
    }
    for (std::size_t j = 0; j < n; ++j) {
      v[j] = w[j] / wn;
    }
    // The remaining error is a multiple of the last change, so stop well below tol.
    const bool done = it > 0 && std::abs(next - sigma) <= 1e-2 * tol * next;
    sigma = next;
    if (done) {
      break;
    }
  }
  return std::max(sigma, norm(apply(v)));
}

/// Coefficients of the quintic Newton-Schulz map used by Muon.
struct NewtonSchulzCoefficients {
  double a = 3.4445;
  double b = -4.7750;
  double c = 2.0315;
};

/// Approximate polar factor: pushes nonzero singular values toward 1.
[[nodiscard]] inline Matrix newton_schulz_orthogonalize(const Matrix& a, int iters = 5,
                                                        NewtonSchulzCoefficients k = {}) {
  const double fro = frobenius_norm(a);
  if (fro == 0.0) {
    throw DomainError("newton_schulz_orthogonalize: zero matrix has no polar factor");
  }
  const bool wide = a.rows() <= a.cols();
  Matrix x = scale(wide ? a : transpose(a), 1.0 / fro);
  for (int i = 0; i < iters; ++i) {
    const Matrix gram = matmul_nt(x, x);
    Matrix poly = scale(matmul(gram, gram), k.c);
    axpy(poly, k.b, gram);
    Matrix next = matmul(poly, x);
    axpy(next, k.a, x);
    x = std::move(next);
  }
  return wide ? x : transpose(x);
}

} // namespace pion
