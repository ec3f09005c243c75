#pragma once

// Small differentiable objectives over lists of weight matrices, each with an
// analytic gradient. Problems are immutable values; their data lives behind a
// shared const pointer so copies are cheap and evaluation is thread-safe.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pion/errors.hpp"
#include "pion/linalg.hpp"
#include "pion/manifold.hpp"
#include "pion/random.hpp"

namespace pion {

struct Shape {
  std::size_t d_out = 0;
  std::size_t d_in = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct Evaluation {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

using ParamList = std::vector<Matrix>;

struct Problem {
  std::string name;
  std::vector<Shape> shapes;
  std::function<double(std::span<const Matrix>)> loss;
  std::function<Evaluation(std::span<const Matrix>)> evaluate;
  /// Starting point; `seed` drives any randomness in it.
  std::function<ParamList(std::uint64_t seed)> initial_params;
  std::optional<double> optimum_hint;
  /// Per-layer RMS of hidden activations, when the problem has any.
  std::function<std::vector<double>(std::span<const Matrix>)> activation_rms;

  [[nodiscard]] std::vector<Matrix> gradients(std::span<const Matrix> params) const {
    return evaluate(params).grads;
  }

  void check_params(std::span<const Matrix> params) const {
    if (params.size() != shapes.size()) {
      throw ShapeError(name + ": expected " + std::to_string(shapes.size()) +
                       " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k].rows() != shapes[k].d_out || params[k].cols() != shapes[k].d_in) {
        throw ShapeError(name + ": parameter " + std::to_string(k) + " is " +
                         detail::shape_str(params[k]));
      }
    }
  }
};

/// f(W) = ½‖WX − Y‖_F² with standard-normal X (d_in×n) and Y (d_out×n).
/// Initial W has N(0, 1/d_in) entries.
[[nodiscard]] inline Problem least_squares(std::size_t d_out, std::size_t d_in,
                                           std::size_t n_samples, std::uint64_t seed) {
  if (d_out < 1 || d_in < 1 || n_samples < 1) {
    throw DomainError("least_squares: dimensions must be positive");
  }
  struct Data {
    Matrix x, y;
  };
  Xoshiro256 rng(seed);
  auto data = std::make_shared<Data>();
  data->x = gaussian_matrix(d_in, n_samples, rng);
  data->y = gaussian_matrix(d_out, n_samples, rng);
  std::shared_ptr<const Data> d = std::move(data);

  Problem p;
  p.name = "least_squares";
  p.shapes = {{d_out, d_in}};
  p.loss = [d](std::span<const Matrix> params) {
    const double r = frobenius_norm(sub(matmul(params[0], d->x), d->y));
    return 0.5 * r * r;
  };
  p.evaluate = [d](std::span<const Matrix> params) {
    const Matrix r = sub(matmul(params[0], d->x), d->y);
    const double rn = frobenius_norm(r);
    Evaluation e;
    e.loss = 0.5 * rn * rn;
    e.grads.push_back(matmul_nt(r, d->x));
    return e;
  };
  p.initial_params = [d_out, d_in](std::uint64_t s) {
    Xoshiro256 rng(s);
    return ParamList{gaussian_matrix(d_out, d_in, rng, 1.0 / std::sqrt(static_cast<double>(d_in)))};
  };
  p.optimum_hint = std::nullopt;
  return p;
}

struct ProcrustesInstance {
  Matrix w0;     ///< U·diag(1..d)·Vᵀ
  Matrix target; ///< Q·W₀·Pᵀ
  Matrix q, p;
};

/// W₀ with singular values {1, …, d}, rotated to a target by random Q and P.
[[nodiscard]] inline ProcrustesInstance procrustes_instance(std::size_t d, std::uint64_t seed) {
  if (d < 2) {
    throw DomainError("procrustes: d must be >= 2");
  }
  Xoshiro256 rng(seed);
  std::vector<double> sigma(d);
  for (std::size_t i = 0; i < d; ++i) {
    sigma[i] = static_cast<double>(i + 1);
  }
  const Matrix u = random_orthogonal(d, rng);
  const Matrix v = random_orthogonal(d, rng);
  ProcrustesInstance inst;
  inst.w0 = matmul_nt(matmul(u, Matrix::diag(sigma)), v);
  inst.q = random_orthogonal(d, rng);
  inst.p = random_orthogonal(d, rng);
  inst.target = matmul_nt(matmul(inst.q, inst.w0), inst.p);
  return inst;
}

/// f(W) = ½‖W − Q·W₀·Pᵀ‖_F². The optimum lies on W₀'s isospectral manifold,
/// and the run always starts from W₀.
[[nodiscard]] inline Problem procrustes(std::size_t d, std::uint64_t seed) {
  auto inst = std::make_shared<const ProcrustesInstance>(procrustes_instance(d, seed));
  Problem p;
  p.name = "procrustes";
  p.shapes = {{d, d}};
  p.loss = [inst](std::span<const Matrix> params) {
    const double r = frobenius_norm(sub(params[0], inst->target));
    return 0.5 * r * r;
  };
  p.evaluate = [inst](std::span<const Matrix> params) {
    Evaluation e;
    Matrix r = sub(params[0], inst->target);
    const double rn = frobenius_norm(r);
    e.loss = 0.5 * rn * rn;
    e.grads.push_back(std::move(r));
    return e;
  };
  p.initial_params = [inst](std::uint64_t) { return ParamList{inst->w0}; };
  p.optimum_hint = 0.0;
  return p;
}

/// Bias-free tanh network with a linear last layer on fixed data:
/// loss = (1/2n)·‖net(X) − Y‖_F². `layer_sizes` = {d_0, …, d_depth}.
[[nodiscard]] inline Problem mlp_with_data(std::vector<std::size_t> layer_sizes, Matrix x,
                                           Matrix y) {
  if (layer_sizes.size() < 2) {
    throw DomainError("mlp: need at least one layer");
  }
  if (x.rows() != layer_sizes.front() || y.rows() != layer_sizes.back() ||
      x.cols() != y.cols()) {
    throw ShapeError("mlp: data does not match layer sizes");
  }
  struct Data {
    std::vector<std::size_t> sizes;
    Matrix x, y;
  };
  auto d = std::make_shared<const Data>(Data{layer_sizes, std::move(x), std::move(y)});
  const std::size_t depth = layer_sizes.size() - 1;

  // Hidden activations H_0 = X, H_l = tanh(W_l H_{l−1}); the last layer is linear.
  auto forward = [d, depth](std::span<const Matrix> params) {
    std::vector<Matrix> h;
    h.reserve(depth + 1);
    h.push_back(d->x);
    for (std::size_t l = 0; l < depth; ++l) {
      Matrix z = matmul(params[l], h.back());
      if (l + 1 < depth) {
        for (double& v : z.data()) {
          v = std::tanh(v);
        }
      }
      h.push_back(std::move(z));
    }
    return h;
  };
  const double inv_n = 1.0 / static_cast<double>(d->x.cols());

  Problem p;
  p.name = "mlp";
  for (std::size_t l = 0; l < depth; ++l) {
    p.shapes.push_back({layer_sizes[l + 1], layer_sizes[l]});
  }
  p.loss = [d, forward, inv_n](std::span<const Matrix> params) {
    const auto h = forward(params);
    const double r = frobenius_norm(sub(h.back(), d->y));
    return 0.5 * inv_n * r * r;
  };
  p.evaluate = [d, forward, inv_n, depth](std::span<const Matrix> params) {
    const auto h = forward(params);
    Matrix delta = sub(h.back(), d->y);
    const double r = frobenius_norm(delta);
    Evaluation e;
    e.loss = 0.5 * inv_n * r * r;
    e.grads.resize(depth);
    delta = scale(delta, inv_n);
    for (std::size_t l = depth; l-- > 0;) {
      e.grads[l] = matmul_nt(delta, h[l]);
      if (l == 0) {
        break;
      }
      Matrix back = matmul_tn(params[l], delta);
      auto bd = back.data();
      auto hd = h[l].data();
      for (std::size_t i = 0; i < bd.size(); ++i) {
        bd[i] *= 1.0 - hd[i] * hd[i];
      }
      delta = std::move(back);
    }
    return e;
  };
  p.initial_params = [sizes = layer_sizes, depth](std::uint64_t s) {
    Xoshiro256 rng(s);
    ParamList ps;
    for (std::size_t l = 0; l < depth; ++l) {
      ps.push_back(gaussian_matrix(sizes[l + 1], sizes[l], rng,
                                   1.0 / std::sqrt(static_cast<double>(sizes[l]))));
    }
    return ps;
  };
  p.activation_rms = [forward, depth](std::span<const Matrix> params) {
    const auto h = forward(params);
    std::vector<double> rms;
    for (std::size_t l = 1; l < depth; ++l) {
      rms.push_back(frobenius_norm(h[l]) / std::sqrt(static_cast<double>(h[l].size())));
    }
    return rms;
  };
  return p;
}

/// Layer sizes for an mlp: one entry means every layer is width×width,
/// otherwise `widths` lists {d_0, …, d_depth} and must have depth+1 entries.
[[nodiscard]] inline std::vector<std::size_t> mlp_layer_sizes(const std::vector<std::size_t>& widths,
                                                              std::size_t depth) {
  if (depth < 1) {
    throw DomainError("mlp: depth must be >= 1");
  }
  if (widths.size() == 1) {
    return std::vector<std::size_t>(depth + 1, widths.front());
  }
  if (widths.size() != depth + 1) {
    throw ShapeError("mlp: widths must have 1 or depth+1 entries");
  }
  return widths;
}

/// Regression onto a random teacher network of the same architecture.
[[nodiscard]] inline Problem mlp(const std::vector<std::size_t>& widths, std::size_t depth,
                                 std::size_t n_samples, std::uint64_t seed) {
  auto sizes = mlp_layer_sizes(widths, depth);
  for (auto s : sizes) {
    if (s < 1) {
      throw DomainError("mlp: widths must be positive");
    }
  }
  Xoshiro256 rng(seed);
  Matrix x = gaussian_matrix(sizes.front(), n_samples, rng);
  Matrix h = x;
  for (std::size_t l = 0; l < depth; ++l) {
    const Matrix w = gaussian_matrix(sizes[l + 1], sizes[l], rng,
                                     1.0 / std::sqrt(static_cast<double>(sizes[l])));
    h = matmul(w, h);
    if (l + 1 < depth) {
      for (double& v : h.data()) {
        v = std::tanh(v);
      }
    }
  }
  return mlp_with_data(std::move(sizes), std::move(x), std::move(h));
}

/// Central differences (f(θ + h·e) − f(θ − h·e)) / 2h, entry by entry.
[[nodiscard]] inline std::vector<Matrix> finite_difference_grads(const Problem& p,
                                                                 const ParamList& params,
                                                                 double h) {
  if (!(h > 0.0)) {
    throw DomainError("finite_difference_grads: h must be positive");
  }
  p.check_params(params);
  ParamList probe = params;
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix g(params[k].rows(), params[k].cols());
    auto pd = probe[k].data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double orig = pd[i];
      pd[i] = orig + h;
      const double fp = p.loss(probe);
      pd[i] = orig - h;
      const double fm = p.loss(probe);
      pd[i] = orig;
      gd[i] = (fp - fm) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

} // namespace pion
