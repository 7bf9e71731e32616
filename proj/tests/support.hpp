// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Shared helpers for the test binaries.

#pragma once

#include "hypnqs/ansatz.hpp"
#include "hypnqs/hamiltonian.hpp"

#include <Eigen/Dense>

#include <complex>

namespace hypnqs::testing {

using CMat = Eigen::MatrixXcd;

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

// Single-site operator embedded at `site`; site 0 is the least significant
// bit of the basis index, so it is the rightmost Kronecker factor.
inline CMat site_operator(const CMat& op, int site, int n) {
  CMat out = CMat::Identity(1, 1);
  for (int k = n - 1; k >= 0; --k) out = kron(out, k == site ? op : CMat::Identity(2, 2));
  return out;
}

inline CMat pauli(char axis) {
  using C = std::complex<double>;
  CMat m(2, 2);
  switch (axis) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, C(0, -1), C(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

// Hamiltonian built from Pauli matrices and Kronecker products, without
// going through the connection generator.
inline CMat kronecker_hamiltonian(const HamiltonianSpec& spec) {
  const int n = spec.n;
  const auto dim = Eigen::Index{1} << n;
  CMat h = CMat::Zero(dim, dim);
  auto zz = [&](int i, int j) { return CMat(site_operator(pauli('z'), i, n) * site_operator(pauli('z'), j, n)); };
  auto ss = [&](int i, int j) {
    CMat acc = CMat::Zero(dim, dim);
    for (char a : {'x', 'y', 'z'}) acc += site_operator(pauli(a), i, n) * site_operator(pauli(a), j, n);
    return CMat(0.25 * acc);
  };
  switch (spec.kind) {
    case ModelKind::TFIM1D:
      for (int i = 0; i + 1 < n; ++i) h -= spec.J * zz(i, i + 1);
      for (int i = 0; i < n; ++i) h -= spec.B * site_operator(pauli('x'), i, n);
      break;
    case ModelKind::TFIM2D:
      for (int r = 1; r <= spec.nx; ++r) {
        for (int c = 1; c <= spec.ny; ++c) {
          const int s = lattice_map_2d(r, c, spec.nx, spec.ny) - 1;
          if (c < spec.ny) h -= spec.J * zz(s, lattice_map_2d(r, c + 1, spec.nx, spec.ny) - 1);
          if (r < spec.nx) h -= spec.J * zz(s, lattice_map_2d(r + 1, c, spec.nx, spec.ny) - 1);
        }
      }
      for (int i = 0; i < n; ++i) h -= spec.B * site_operator(pauli('x'), i, n);
      break;
    case ModelKind::J1J2:
    case ModelKind::J1J2J3: {
      const double couplings[3] = {spec.J1, spec.J2, spec.J3};
      for (int d = 1; d <= 3; ++d) {
        for (int i = 0; i + d < n; ++i) h += couplings[d - 1] * ss(i, i + d);
      }
      break;
    }
  }
  return h;
}

// Glorot weights plus small random biases so every parameter is exercised.
inline ParameterStore random_params(const AnsatzConfig& cfg, std::uint64_t seed, double bias_scale = 0.2) {
  ParameterStore p = ParameterStore::for_config(cfg);
  p.glorot_init(seed);
  Engine rng(seed + 17);
  for (auto& t : p.tensors()) {
    if (t.is_bias()) {
      for (double& x : t.data) x = uniform(rng, -bias_scale, bias_scale);
    }
  }
  return p;
}

inline AnsatzConfig small_ansatz(CellKind cell, int n, int d_h, bool complex_output, int rows = 0, int cols = 0) {
  AnsatzConfig cfg;
  cfg.cell = cell;
  cfg.n = n;
  cfg.d_h = d_h;
  cfg.complex_output = complex_output;
  cfg.rows = rows;
  cfg.cols = cols;
  return cfg;
}

}  // namespace hypnqs::testing
