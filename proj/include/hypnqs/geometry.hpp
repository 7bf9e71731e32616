// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Gyrovector operations on the Poincare ball of curvature parameter c.
//
// The kernels are templates over the vector type so the same formulas run on
// plain Eigen vectors (sampling, local energies) and on tape variables
// (gradients). Every ball-valued kernel finishes with a projection into the
// closed ball of radius (1 - eps) / sqrt(c). c = 0 selects the Euclidean
// limit of each formula.

#pragma once

#include "hypnqs/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace hypnqs::geo {

struct Ball {
  double c = 1.0;
  double eps = 1e-5;
};

// Below this norm the closed forms are 0/0; first-order Taylor is used.
inline constexpr double kTaylorNorm = 1e-12;
inline constexpr double kAtanhLimit = 1.0 - 1e-15;

// Conformal factor 2 / (1 - c |x|^2) as a plain number.
inline double conformal_factor(double c, double sq_norm) { return 2.0 / (1.0 - c * sq_norm); }

template <class V>
V to_ball(const V& x, const Ball& b) {
  return project(x, b.c, b.eps);
}

template <class V>
V mobius_add(const V& x, const V& y, const Ball& b) {
  const double c = b.c;
  const auto xy = dot(x, y);
  const auto x2 = sqnorm(x);
  const auto y2 = sqnorm(y);
  const auto coef_x = 1.0 + 2.0 * c * xy + c * y2;
  const auto coef_y = 1.0 - c * x2;
  const auto den = 1.0 + 2.0 * c * xy + (c * c) * x2 * y2;
  V num = coef_x * x + coef_y * y;
  return to_ball(V(num / den), b);
}

template <class V>
V exp0(const V& v, const Ball& b) {
  const auto n = norm(v);
  if (b.c == 0.0 || value_of(n) < kTaylorNorm) return to_ball(v, b);
  const double sc = std::sqrt(b.c);
  const auto scaled = sc * n;
  const auto factor = tanh(scaled) / scaled;
  return to_ball(V(factor * v), b);
}

template <class V>
V log0(const V& y, const Ball& b) {
  const auto n = norm(y);
  if (b.c == 0.0 || value_of(n) < kTaylorNorm) return y;
  const double sc = std::sqrt(b.c);
  const auto scaled = sc * n;
  const auto factor = atanh(clamp(scaled, -kAtanhLimit, kAtanhLimit)) / scaled;
  return V(factor * y);
}

template <class V>
V expmap(const V& x, const V& v, const Ball& b) {
  if (b.c == 0.0) return V(x + v);
  const auto n = norm(v);
  const auto inv_half_lambda = 1.0 - b.c * sqnorm(x);  // 2 / lambda_x
  if (value_of(n) < kTaylorNorm) return mobius_add(x, V(v / inv_half_lambda), b);
  const double sc = std::sqrt(b.c);
  const auto factor = tanh(sc * n / inv_half_lambda) / (sc * n);
  return mobius_add(x, V(factor * v), b);
}

template <class V>
V logmap(const V& x, const V& y, const Ball& b) {
  if (b.c == 0.0) return V(y - x);
  const V w = mobius_add(V(-x), y, b);
  const auto n = norm(w);
  const auto inv_half_lambda = 1.0 - b.c * sqnorm(x);
  if (value_of(n) < kTaylorNorm) return V(inv_half_lambda * w);
  const double sc = std::sqrt(b.c);
  const auto factor = inv_half_lambda * atanh(clamp(sc * n, -kAtanhLimit, kAtanhLimit)) / (sc * n);
  return V(factor * w);
}

// Transport of a tangent vector from the origin to x, built from the
// exp/log maps: log_x(x (+) exp_0(v)).
template <class V>
V transport0(const V& x, const V& v, const Ball& b) {
  return logmap(x, mobius_add(x, exp0(v, b), b), b);
}

template <class V>
V scalar_mul(double r, const V& x, const Ball& b) {
  const auto n = norm(x);
  if (b.c == 0.0 || value_of(n) < kTaylorNorm) return to_ball(V(r * x), b);
  const double sc = std::sqrt(b.c);
  const auto scaled = sc * n;
  const auto factor = tanh(r * atanh(clamp(scaled, -kAtanhLimit, kAtanhLimit))) / scaled;
  return to_ball(V(factor * x), b);
}

// M (x) x given the Euclidean product mx = M x. Covers plain matrices,
// diag(r) (mx = r * x) and the W diag(r) product of the gated cells.
// Mx = 0 maps to the origin; near it the first-order form keeps gradients.
template <class V>
V mobius_apply(const V& mx, const V& x, const Ball& b) {
  const auto nx = norm(x);
  if (b.c == 0.0 || value_of(nx) < kTaylorNorm) return to_ball(mx, b);
  const double sc = std::sqrt(b.c);
  const auto artanh_x = atanh(clamp(sc * nx, -kAtanhLimit, kAtanhLimit));
  const auto nm = norm(mx);
  if (value_of(nm) < kTaylorNorm) return to_ball(V((artanh_x / (sc * nx)) * mx), b);
  const auto factor = tanh(nm / nx * artanh_x) / (sc * nm);
  return to_ball(V(factor * mx), b);
}

template <class M, class V>
V mobius_matvec(const M& w, const V& x, const Ball& b) {
  return mobius_apply(V(matvec(w, x)), x, b);
}

template <class F, class V>
V pointwise(F&& f, const V& x, const Ball& b) {
  return exp0(V(std::forward<F>(f)(log0(x, b))), b);
}

// ---------------------------------------------------------------------------
// Value types for the standalone geometry API.

class BallPoint {
 public:
  BallPoint(Vec coords, double c = 1.0) : coords_(std::move(coords)), c_(c) {
    if (!(c_ >= 0.0) || !std::isfinite(c_)) throw std::invalid_argument("BallPoint: curvature must be >= 0");
    if (!coords_.allFinite()) throw std::invalid_argument("BallPoint: non-finite coordinates");
    if (c_ > 0.0 && !(c_ * coords_.squaredNorm() < 1.0)) {
      throw std::invalid_argument("BallPoint: point lies outside the open ball");
    }
  }

  static BallPoint origin(Eigen::Index dim, double c = 1.0) { return {Vec::Zero(dim), c}; }

  const Vec& coords() const { return coords_; }
  double c() const { return c_; }
  Eigen::Index dim() const { return coords_.size(); }
  double conformal_factor() const { return geo::conformal_factor(c_, coords_.squaredNorm()); }

 private:
  Vec coords_;
  double c_;
};

struct TangentVector {
  Vec coords;
  BallPoint base;

  TangentVector(Vec v, BallPoint at) : coords(std::move(v)), base(std::move(at)) {
    if (coords.size() != base.dim()) throw std::invalid_argument("TangentVector: dimension differs from base point");
  }
  static TangentVector at_origin(Vec v, double c = 1.0) {
    const auto dim = v.size();
    return {std::move(v), BallPoint::origin(dim, c)};
  }
};

namespace detail {

inline void require_same_space(const BallPoint& x, const BallPoint& y, const char* op) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch " + std::to_string(x.dim()) +
                                " vs " + std::to_string(y.dim()));
  }
  if (x.c() != y.c()) throw std::invalid_argument(std::string(op) + ": curvature mismatch");
}

}  // namespace detail

inline BallPoint mobius_add(const BallPoint& x, const BallPoint& y, double eps = 1e-5) {
  detail::require_same_space(x, y, "mobius_add");
  return {mobius_add(x.coords(), y.coords(), Ball{x.c(), eps}), x.c()};
}

inline BallPoint mobius_scalar_mul(double r, const BallPoint& x, double eps = 1e-5) {
  return {scalar_mul(r, x.coords(), Ball{x.c(), eps}), x.c()};
}

inline BallPoint exp_map(const BallPoint& x, const Vec& v, double eps = 1e-5) {
  if (v.size() != x.dim()) throw std::invalid_argument("exp_map: dimension mismatch");
  if (!v.allFinite()) throw std::invalid_argument("exp_map: non-finite tangent vector");
  return {expmap(x.coords(), v, Ball{x.c(), eps}), x.c()};
}

inline BallPoint exp_map(const TangentVector& v, double eps = 1e-5) { return exp_map(v.base, v.coords, eps); }

inline TangentVector log_map(const BallPoint& x, const BallPoint& y, double eps = 1e-5) {
  detail::require_same_space(x, y, "log_map");
  return {logmap(x.coords(), y.coords(), Ball{x.c(), eps}), x};
}

inline TangentVector parallel_transport0(const BallPoint& x, const TangentVector& v, double eps = 1e-5) {
  if (v.base.dim() != x.dim()) throw std::invalid_argument("parallel_transport0: dimension mismatch");
  if (v.base.coords().squaredNorm() != 0.0) {
    throw std::invalid_argument("parallel_transport0: vector must be attached to the origin");
  }
  return {transport0(x.coords(), v.coords, Ball{x.c(), eps}), x};
}

inline BallPoint mobius_matvec(const RowMat& w, const BallPoint& x, double eps = 1e-5) {
  if (w.cols() != x.dim()) {
    throw std::invalid_argument("mobius_matvec: matrix has " + std::to_string(w.cols()) +
                                " columns, point has dimension " + std::to_string(x.dim()));
  }
  return {mobius_matvec(w, x.coords(), Ball{x.c(), eps}), x.c()};
}

template <class F>
BallPoint mobius_pointwise(F&& f, const BallPoint& x, double eps = 1e-5) {
  const Ball b{x.c(), eps};
  auto elementwise = [&](const Vec& t) {
    Vec out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = f(t[i]);
    return out;
  };
  return {pointwise(elementwise, x.coords(), b), x.c()};
}

inline BallPoint project_to_ball(const Vec& x, double c = 1.0, double eps = 1e-5) {
  if (!x.allFinite()) throw std::invalid_argument("project_to_ball: non-finite input");
  return {project(x, c, eps), c};
}

}  // namespace hypnqs::geo
