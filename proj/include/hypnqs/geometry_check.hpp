// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Randomized property suite over the gyrovector operations.

#pragma once

#include "hypnqs/geometry.hpp"
#include "hypnqs/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace hypnqs::geo {

struct PropertyResult {
  std::string name;
  int trials = 0;
  double worst = 0.0;  // largest observed error (or slope deviation)
  double tolerance = 0.0;
  bool passed = false;
};

struct GeometryCheckOptions {
  int trials = 1000;
  std::uint64_t seed = 2024;
  int dim = 4;
  double curvature = 1.0;
};

namespace detail {

inline Vec random_direction(Engine& rng, int dim) {
  std::normal_distribution<double> gauss;
  Vec v(dim);
  for (auto& x : v) x = gauss(rng);
  const double n = v.norm();
  return n > 0.0 ? Vec(v / n) : Vec(Vec::Unit(dim, 0));
}

// Norm drawn uniformly in [0, max_norm).
inline Vec random_point(Engine& rng, int dim, double max_norm) {
  return random_direction(rng, dim) * (max_norm * uniform01(rng));
}

inline PropertyResult finish(std::string name, int trials, double worst, double tol) {
  return {std::move(name), trials, worst, tol, std::isfinite(worst) && worst <= tol};
}

}  // namespace detail

inline std::vector<PropertyResult> run_geometry_checks(const GeometryCheckOptions& opt = {}) {
  if (opt.trials < 1 || opt.dim < 1 || !(opt.curvature > 0.0)) {
    throw std::invalid_argument("geometry-check: trials, dim and curvature must be positive");
  }
  const Ball ball{opt.curvature, 1e-5};
  const double r = 1.0 / std::sqrt(opt.curvature);
  std::vector<PropertyResult> out;

  {
    Engine rng(derive_seed(opt.seed, {1}));
    double worst = 0.0;
    for (int i = 0; i < opt.trials; ++i) {
      const Vec x = detail::random_point(rng, opt.dim, 0.99 * r);
      const Vec zero = Vec::Zero(opt.dim);
      worst = std::max({worst, mobius_add(Vec(-x), x, ball).norm(), mobius_add(x, Vec(-x), ball).norm(),
                        (mobius_add(zero, x, ball) - x).norm(), (mobius_add(x, zero, ball) - x).norm()});
    }
    out.push_back(detail::finish("mobius_inverse_identity", opt.trials, worst, 1e-10));
  }
  {
    Engine rng(derive_seed(opt.seed, {2}));
    double worst = 0.0;
    for (int i = 0; i < opt.trials; ++i) {
      const Vec x = detail::random_point(rng, opt.dim, 0.7 * r);
      const Vec v = detail::random_point(rng, opt.dim, 1.0);
      worst = std::max(worst, (logmap(x, expmap(x, v, ball), ball) - v).norm());
    }
    out.push_back(detail::finish("exp_log_roundtrip", opt.trials, worst, 1e-9));
  }
  {
    Engine rng(derive_seed(opt.seed, {3}));
    double worst = 0.0;
    for (int i = 0; i < opt.trials; ++i) {
      const Vec x = detail::random_point(rng, opt.dim, 0.95 * r);
      const double t = uniform(rng, -3.0, 3.0);
      worst = std::max(worst, (scalar_mul(t, x, ball) - exp0(Vec(t * log0(x, ball)), ball)).norm());
    }
    out.push_back(detail::finish("scalar_mul_exp_log", opt.trials, worst, 1e-10));
  }
  {
    Engine rng(derive_seed(opt.seed, {4}));
    double worst = 0.0;
    for (int i = 0; i < opt.trials; ++i) {
      const Vec x = detail::random_point(rng, opt.dim, 0.8 * r);
      const Vec b = detail::random_point(rng, opt.dim, 0.8 * r);
      const Vec lhs = mobius_add(x, b, ball);
      const Vec rhs = expmap(x, transport0(x, log0(b, ball), ball), ball);
      worst = std::max(worst, (lhs - rhs).norm());
    }
    out.push_back(detail::finish("transport_gyroaddition", opt.trials, worst, 1e-9));
  }
  {
    // x (+)_c y - (x + y) is O(c): the log-log slope between c = 1e-3 and
    // c = 1e-4 must be 1.
    Engine rng(derive_seed(opt.seed, {5}));
    double worst = 0.0;
    int counted = 0;
    for (int i = 0; i < opt.trials; ++i) {
      const Vec x = detail::random_point(rng, opt.dim, 1.0);
      const Vec y = detail::random_point(rng, opt.dim, 1.0);
      const double e3 = (mobius_add(x, y, Ball{1e-3, 1e-5}) - (x + y)).norm();
      const double e4 = (mobius_add(x, y, Ball{1e-4, 1e-5}) - (x + y)).norm();
      if (e3 < 1e-9) continue;
      ++counted;
      worst = std::max(worst, std::abs(std::log10(e3 / e4) - 1.0));
    }
    out.push_back(detail::finish("flat_limit_slope", counted, worst, 0.01));
  }
  return out;
}

inline bool all_passed(const std::vector<PropertyResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.passed; });
}

}  // namespace hypnqs::geo
