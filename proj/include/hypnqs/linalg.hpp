// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Plain double-precision vector primitives. The geometry kernels and the
// recurrent cells are templates that call these by unqualified name; the
// autodiff backend provides overloads with identical names for ad::Var.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypnqs {

using Vec = Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double value_of(double x) { return x; }

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: size mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  return a.dot(b);
}
inline double sqnorm(const Vec& a) { return a.squaredNorm(); }
inline double norm(const Vec& a) { return a.norm(); }

inline Vec matvec(const RowMat& m, const Vec& x) {
  if (m.cols() != x.size()) {
    throw std::invalid_argument("matvec: matrix has " + std::to_string(m.cols()) +
                                " columns, vector has " + std::to_string(x.size()));
  }
  return m * x;
}

inline Vec hadamard(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hadamard: size mismatch");
  return a.cwiseProduct(b);
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

inline double tanh(double x) { return std::tanh(x); }
inline double atanh(double x) { return std::atanh(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double log(double x) { return std::log(x); }
inline double exp(double x) { return std::exp(x); }
inline double clamp(double x, double lo, double hi) { return std::clamp(x, lo, hi); }

inline Vec tanh(const Vec& x) { return x.array().tanh().matrix(); }
inline Vec atanh(const Vec& x) { return x.array().atanh().matrix(); }
inline Vec sigmoid(const Vec& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }
inline Vec softsign(const Vec& x) { return (x.array() / (1.0 + x.array().abs())).matrix(); }
inline Vec log(const Vec& x) { return x.array().log().matrix(); }
inline Vec exp(const Vec& x) { return x.array().exp().matrix(); }

inline Vec softmax(const Vec& x) {
  const double shift = x.maxCoeff();
  Vec e = (x.array() - shift).exp().matrix();
  return e / e.sum();
}

// Number of times a point had to be pulled back inside the ball. Reads 0 in
// healthy runs; tests and diagnostics inspect it.
inline std::atomic<std::uint64_t>& projection_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

// In-place rescale onto the ball of radius (1 - eps) / sqrt(c). Returns true
// when the point was moved.
inline bool project_values(double* x, std::size_t n, double c, double eps) {
  if (c <= 0.0) return false;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sq += x[i] * x[i];
  const double limit = 1.0 - eps;
  if (c * sq < limit * limit) return false;
  const double scale = limit / (std::sqrt(c) * std::sqrt(sq));
  for (std::size_t i = 0; i < n; ++i) x[i] *= scale;
  projection_counter().fetch_add(1, std::memory_order_relaxed);
  return true;
}

inline Vec project(const Vec& x, double c, double eps) {
  if (!x.allFinite()) throw std::invalid_argument("project: non-finite input");
  Vec out = x;
  project_values(out.data(), static_cast<std::size_t>(out.size()), c, eps);
  return out;
}

// Scalar type paired with a vector type: double for Vec, the node handle
// itself for the tape backend.
template <class V>
struct scalar_of;

template <>
struct scalar_of<Vec> {
  using type = double;
};

template <class V>
using scalar_t = typename scalar_of<V>::type;

// Builds a zero vector of the same backend as `like`.
inline Vec zeros_like(const Vec& like, Eigen::Index n) {
  static_cast<void>(like);
  return Vec::Zero(n);
}

}  // namespace hypnqs
