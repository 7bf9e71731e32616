// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Central-difference gradient checks.

#pragma once

#include "hypnqs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace hypnqs {

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  Vec analytic;
  Vec numeric;
  std::vector<double> rel_errors;
};

// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero components from
// turning round-off into large relative errors.
inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <class Fn>
Vec numeric_gradient(Fn&& fn, const Vec& theta, double h = 1e-5) {
  Vec g(theta.size());
  Vec probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = fn(probe);
    probe[i] = theta[i] - h;
    const double down = fn(probe);
    probe[i] = theta[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// fn: Vec -> double, grad: Vec -> Vec (the analytic gradient under test).
template <class Fn, class Grad>
FiniteDiffReport finite_diff_check(Fn&& fn, Grad&& grad, const Vec& theta, double h = 1e-5,
                                   double floor = 1e-3) {
  FiniteDiffReport report;
  report.analytic = grad(theta);
  report.numeric = numeric_gradient(fn, theta, h);
  report.rel_errors.resize(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double e = relative_error(report.analytic[i], report.numeric[i], floor);
    report.rel_errors[static_cast<std::size_t>(i)] = e;
    if (report.worst_index < 0 || e > report.max_rel_error) {
      report.max_rel_error = e;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace hypnqs
