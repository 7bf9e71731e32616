// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.

#include "hypnqs/exact.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using hypnqs::ExactMethod;
using hypnqs::HamiltonianSpec;
using hypnqs::Vec;

TEST(Exact, TwoSiteSinglet) {
  EXPECT_NEAR(hypnqs::ground_energy(HamiltonianSpec::j1j2(2, 1.0, 0.0), ExactMethod::Dense).energy, -0.75, 1e-12);
  EXPECT_NEAR(hypnqs::ground_energy(HamiltonianSpec::j1j2(2, 1.0, 0.0), ExactMethod::Lanczos).energy, -0.75, 1e-12);
}

TEST(Exact, TwoSiteIsing) {
  // Symmetric subspace {|00>, (|01> + |10>)/sqrt2, |11>}:
  // [[-1, -sqrt2, 0], [-sqrt2, 1, -sqrt2], [0, -sqrt2, -1]].
  const double r2 = std::sqrt(2.0);
  Eigen::Matrix3d m;
  m << -1, -r2, 0, -r2, 1, -r2, 0, -r2, -1;
  const double oracle = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m).eigenvalues()[0];
  EXPECT_NEAR(oracle, -std::sqrt(5.0), 1e-14);
  EXPECT_NEAR(hypnqs::ground_energy(HamiltonianSpec::tfim1d(2), ExactMethod::Dense).energy, oracle, 1e-12);
}

TEST(Exact, MajumdarGhoshTenSites) {
  const auto spec = HamiltonianSpec::j1j2(10, 1.0, 0.5);
  EXPECT_NEAR(hypnqs::ground_energy(spec, ExactMethod::Dense).energy, -3.75, 1e-9);
  EXPECT_NEAR(hypnqs::ground_energy(spec, ExactMethod::Lanczos).energy, -3.75, 1e-9);
}

TEST(Exact, DenseAndLanczosAgree) {
  const std::vector<HamiltonianSpec> specs{HamiltonianSpec::tfim1d(10), HamiltonianSpec::tfim1d(9, 1.0, 0.5),
                                           HamiltonianSpec::tfim2d(3, 3), HamiltonianSpec::j1j2(12, 1.0, 0.3),
                                           HamiltonianSpec::j1j2j3(11, 1.0, 0.2, 0.5)};
  for (const auto& spec : specs) {
    const auto d = hypnqs::ground_energy(spec, ExactMethod::Dense);
    const auto l = hypnqs::ground_energy(spec, ExactMethod::Lanczos);
    EXPECT_NEAR(d.energy, l.energy, 1e-8) << hypnqs::model_name(spec.kind) << " " << spec.n;
    EXPECT_NEAR(std::abs(d.psi.dot(l.psi)), 1.0, 1e-8);
  }
}

TEST(Exact, SectorRestrictionMatchesFullSpectrum) {
  // Full-basis dense minimum against the smallest-|Sz| sector.
  for (const auto& spec : {HamiltonianSpec::j1j2(8, 1.0, 0.7), HamiltonianSpec::j1j2j3(7, 1.0, -0.4, 0.3)}) {
    const hypnqs::Hamiltonian h(spec);
    const auto full = hypnqs::DenseOperator::assemble(h, hypnqs::Basis::full(spec.n));
    const double e_full = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(full.matrix).eigenvalues()[0];
    EXPECT_NEAR(hypnqs::ground_energy(spec, ExactMethod::Dense).energy, e_full, 1e-10);
  }
}

TEST(Exact, GroundStateIsNormalizedEigenvector) {
  const auto spec = HamiltonianSpec::j1j2(8, 1.0, 0.2);
  const auto gs = hypnqs::ground_energy(spec, ExactMethod::Lanczos);
  ASSERT_EQ(gs.psi.size(), 256);
  EXPECT_NEAR(gs.psi.norm(), 1.0, 1e-12);
  const Eigen::MatrixXd oracle = hypnqs::testing::kronecker_hamiltonian(spec).real();
  EXPECT_LT((oracle * gs.psi - gs.energy * gs.psi).norm(), 1e-8);
}

TEST(Exact, LanczosBasisStaysOrthonormal) {
  const hypnqs::Hamiltonian h(HamiltonianSpec::tfim1d(12));
  const auto basis = hypnqs::Basis::full(12);
  const hypnqs::SparseHamiltonian sparse(h, basis);
  const auto r = hypnqs::lanczos_ground_state(sparse);
  EXPECT_LT(r.max_basis_overlap, 1e-8);
  EXPECT_LT(r.residual, 1e-8);
}

TEST(Exact, SizeLimits) {
  EXPECT_THROW(hypnqs::ground_energy(HamiltonianSpec::tfim1d(13), ExactMethod::Dense), std::invalid_argument);
  EXPECT_THROW(hypnqs::ground_energy(HamiltonianSpec::tfim1d(21), ExactMethod::Lanczos), std::invalid_argument);
  auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::EGru, 11, 2, false);
  const hypnqs::Network net(cfg, hypnqs::ParameterStore::for_config(cfg));
  EXPECT_THROW(hypnqs::enumerate_probabilities(net), std::invalid_argument);
}

TEST(Exact, LanczosReportsNonConvergence) {
  const hypnqs::Hamiltonian h(HamiltonianSpec::tfim1d(10));
  const auto basis = hypnqs::Basis::full(10);
  const hypnqs::SparseHamiltonian sparse(h, basis);
  hypnqs::LanczosOptions opt;
  opt.krylov_dim = 3;
  opt.max_restarts = 1;
  EXPECT_THROW(hypnqs::lanczos_ground_state(sparse, opt), std::runtime_error);
}

TEST(Exact, EnumerationOfZeroNetworkIsUniform) {
  auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::EGru, 3, 4, false);
  const hypnqs::Network net(cfg, hypnqs::ParameterStore::for_config(cfg));
  const auto t = hypnqs::enumerate_probabilities(net);
  ASSERT_EQ(t.prob.size(), 8);
  for (double p : t.prob) EXPECT_NEAR(p, 0.125, 1e-15);
}

TEST(Exact, EnumerationSumsToOne) {
  for (auto cell : {hypnqs::CellKind::ERnn, hypnqs::CellKind::HGru}) {
    auto cfg = hypnqs::testing::small_ansatz(cell, 10, 6, true);
    const hypnqs::Network net(cfg, hypnqs::testing::random_params(cfg, 19));
    EXPECT_NEAR(hypnqs::enumerate_probabilities(net).prob.sum(), 1.0, 1e-10);
  }
}

TEST(Exact, EnumeratedEnergyMatchesRayleighQuotient) {
  const auto spec = HamiltonianSpec::tfim1d(6, 1.0, 0.9);
  const hypnqs::Hamiltonian h(spec);
  auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::EGru, 6, 5, true);
  const hypnqs::Network net(cfg, hypnqs::testing::random_params(cfg, 8));
  const auto op = hypnqs::DenseOperator::assemble(h, hypnqs::Basis::full(6));
  const auto rq = hypnqs::rayleigh_quotient(op, hypnqs::enumerate_probabilities(net).amplitudes());
  const auto e = hypnqs::exact_energy(net, h);
  EXPECT_NEAR(e.real(), rq.real(), 1e-9);
  EXPECT_NEAR(e.imag(), rq.imag(), 1e-9);
}

TEST(Exact, VariationalGap) {
  for (const auto& spec : {HamiltonianSpec::tfim1d(6), HamiltonianSpec::j1j2(6, 1.0, 0.3)}) {
    const auto gs = hypnqs::ground_energy(spec);
    const hypnqs::LookupWavefunction exact(spec.n, gs.psi);
    EXPECT_NEAR(hypnqs::variational_gap(exact, spec), 0.0, 1e-10);
    auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::HGru, 6, 4, true);
    cfg.marshall_sign = hypnqs::is_heisenberg(spec.kind);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const hypnqs::Network net(cfg, hypnqs::testing::random_params(cfg, seed));
      EXPECT_GT(hypnqs::variational_gap(net, spec), 0.0);
    }
  }
}

}  // namespace
