// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.

#include "hypnqs/exact.hpp"
#include "hypnqs/finite_diff.hpp"
#include "hypnqs/vmc.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using hypnqs::HamiltonianSpec;
using hypnqs::SpinConfiguration;
using hypnqs::Vec;
using cplx = std::complex<double>;

std::vector<SpinConfiguration> all_configs(int n) {
  std::vector<SpinConfiguration> out;
  for (std::uint64_t i = 0; i < (1ULL << n); ++i) out.push_back(hypnqs::config_from_index(i, n));
  return out;
}

TEST(EnergyStats, EmptyAndDegenerateBatches) {
  EXPECT_THROW(hypnqs::energy_statistics({}), std::invalid_argument);
  const auto one = hypnqs::energy_statistics({cplx(-1.5, 0.0)});
  EXPECT_TRUE(one.degenerate);
  EXPECT_EQ(one.variance, 0.0);
  EXPECT_EQ(one.mean, cplx(-1.5, 0.0));
}

TEST(EnergyStats, ConstantBatchHasZeroVariance) {
  const auto st = hypnqs::energy_statistics(std::vector<cplx>(7, cplx(2.0, 0.0)));
  EXPECT_EQ(st.variance, 0.0);
  EXPECT_EQ(st.stderr_, 0.0);
}

TEST(EnergyStats, PopulationVarianceAndStderr) {
  const auto st = hypnqs::energy_statistics({cplx(1, 0), cplx(3, 0), cplx(2, 1), cplx(2, -1)});
  EXPECT_DOUBLE_EQ(st.mean.real(), 2.0);
  EXPECT_DOUBLE_EQ(st.variance, 1.0);
  EXPECT_DOUBLE_EQ(st.stderr_, 0.5);
}

TEST(EnergyEstimate, UniformStateTwoSiteIsing) {
  const hypnqs::Hamiltonian h(HamiltonianSpec::tfim1d(2));
  const hypnqs::LookupWavefunction uniform(2, Vec::Constant(4, 0.5));
  const auto est = hypnqs::energy_estimate(all_configs(2), h, uniform);
  EXPECT_DOUBLE_EQ(est.eloc[0].real(), -3.0);
  EXPECT_DOUBLE_EQ(est.eloc[1].real(), -1.0);
  EXPECT_DOUBLE_EQ(est.eloc[2].real(), -1.0);
  EXPECT_DOUBLE_EQ(est.eloc[3].real(), -3.0);
  EXPECT_DOUBLE_EQ(est.stats.mean.real(), -2.0);
}

TEST(EnergyEstimate, ExactExpectationIsRealForHeisenberg) {
  for (const auto& spec : {HamiltonianSpec::j1j2(6, 1.0, 0.4), HamiltonianSpec::j1j2j3(6, 1.0, 0.2, 0.5)}) {
    auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::EGru, 6, 6, true);
    cfg.marshall_sign = true;
    const hypnqs::Network net(cfg, hypnqs::testing::random_params(cfg, 12));
    const hypnqs::Hamiltonian h(spec);
    const auto table = hypnqs::enumerate_probabilities(net);
    const auto eloc = hypnqs::local_energies(all_configs(6), h, net);
    const std::vector<double> w(table.prob.begin(), table.prob.end());
    EXPECT_NEAR(hypnqs::energy_statistics(eloc, w).mean.imag(), 0.0, 1e-9);
  }
}

TEST(EnergyEstimate, ZeroVarianceAtExactGroundState) {
  for (const auto& spec : {HamiltonianSpec::tfim1d(6), HamiltonianSpec::j1j2(6, 1.0, 0.5),
                           HamiltonianSpec::tfim2d(2, 3)}) {
    const auto gs = hypnqs::ground_energy(spec);
    const hypnqs::LookupWavefunction exact(spec.n, gs.psi);
    const hypnqs::Hamiltonian h(spec);
    std::vector<cplx> eloc;
    std::vector<double> w;
    for (const auto& s : all_configs(spec.n)) {
      const double amp = gs.psi[static_cast<Eigen::Index>(hypnqs::config_index(s))];
      if (amp * amp < 1e-14) continue;
      eloc.push_back(hypnqs::local_energy(s, h, exact));
      w.push_back(amp * amp);
    }
    const auto st = hypnqs::energy_statistics(eloc, w);
    EXPECT_NEAR(st.mean.real(), gs.energy, 1e-10);
    EXPECT_LT(st.variance, 1e-18);
  }
}

TEST(Gradient, SingleSampleGivesZero) {
  const Vec g = hypnqs::gradient_estimate({cplx(-3.0, 0.2)}, {Vec::Ones(4)}, {Vec::Ones(4)});
  EXPECT_EQ(g, Vec::Zero(4));
}

TEST(Gradient, LinearInLocalEnergies) {
  hypnqs::Engine rng(5);
  std::vector<cplx> e;
  std::vector<Vec> a;
  std::vector<Vec> p;
  for (int k = 0; k < 6; ++k) {
    e.emplace_back(hypnqs::uniform(rng, -3, 3), hypnqs::uniform(rng, -1, 1));
    a.push_back(Vec::Random(5));
    p.push_back(Vec::Random(5));
  }
  std::vector<cplx> e2;
  for (const auto& x : e) e2.push_back(2.0 * x);
  const Vec g = hypnqs::gradient_estimate(e, a, p);
  EXPECT_LT((hypnqs::gradient_estimate(e2, a, p) - 2.0 * g).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(hypnqs::gradient_estimate(e, a, {}, std::vector<double>(5, 1.0)), std::invalid_argument);
}

// psi_theta(s) = exp(theta * (number of spin-1 sites)) on two sites: the
// estimator with exact weights against d/dtheta of <psi|H|psi>/<psi|psi>.
TEST(Gradient, ToyAnsatzMatchesRayleighQuotientDerivative) {
  const auto spec = HamiltonianSpec::tfim1d(2, 1.0, 0.8);
  const Eigen::MatrixXd hm = hypnqs::testing::kronecker_hamiltonian(spec).real();
  auto amps = [](double theta) {
    Vec a(4);
    for (int i = 0; i < 4; ++i) a[i] = std::exp(theta * __builtin_popcount(static_cast<unsigned>(i)));
    return a;
  };
  auto energy = [&](double theta) {
    const Vec a = amps(theta);
    return a.dot(hm * a) / a.squaredNorm();
  };
  const double theta = 0.3;
  const hypnqs::LookupWavefunction wf(2, amps(theta));
  const hypnqs::Hamiltonian h(spec);
  std::vector<cplx> eloc;
  std::vector<Vec> d_amp;
  std::vector<double> w;
  for (const auto& s : all_configs(2)) {
    eloc.push_back(hypnqs::local_energy(s, h, wf));
    d_amp.push_back(Vec::Constant(1, s[0] + s[1]));
    w.push_back(std::exp(2.0 * wf.log_psi(s).log_amp));
  }
  const double analytic = hypnqs::gradient_estimate(eloc, d_amp, {}, w)[0];
  const double h_step = 1e-5;
  const double numeric = (energy(theta + h_step) - energy(theta - h_step)) / (2.0 * h_step);
  EXPECT_LT(hypnqs::relative_error(analytic, numeric), 1e-6);
}

class NetworkEstimator : public ::testing::TestWithParam<hypnqs::CellKind> {};

TEST_P(NetworkEstimator, ExactWeightsMatchFiniteDifferences) {
  const int n = 4;
  const auto spec = HamiltonianSpec::j1j2(n, 1.0, 0.3);
  const hypnqs::Hamiltonian h(spec);
  auto cfg = hypnqs::testing::small_ansatz(GetParam(), n, 5, true, 2, 2);
  cfg.marshall_sign = true;
  const hypnqs::ParameterStore params = hypnqs::testing::random_params(cfg, 61);
  const hypnqs::Network net(cfg, params);
  const auto configs = all_configs(n);
  std::vector<cplx> eloc = hypnqs::local_energies(configs, h, net);
  std::vector<double> w;
  std::vector<Vec> d_amp;
  std::vector<Vec> d_phase;
  hypnqs::TapedNetwork taped(cfg, params);
  for (const auto& s : configs) {
    const auto g = taped.gradient(s);
    w.push_back(std::exp(2.0 * g.value.log_amp));
    d_amp.push_back(g.d_amp);
    d_phase.push_back(g.d_phase);
  }
  const Vec reference = hypnqs::gradient_estimate(eloc, d_amp, d_phase, w);
  const Vec fused =
      hypnqs::fused_gradient(cfg, params, configs, hypnqs::gradient_coefficients(eloc, w));
  EXPECT_LT((fused - reference).cwiseAbs().maxCoeff(), 1e-12);

  auto fn = [&](const Vec& th) {
    hypnqs::ParameterStore q = params;
    q.assign(th);
    return hypnqs::exact_energy(hypnqs::Network(cfg, q), h).real();
  };
  const auto report = hypnqs::finite_diff_check(fn, [&](const Vec&) { return reference; }, params.flatten());
  EXPECT_LT(report.max_rel_error, 1e-6) << "index " << report.worst_index;
}

INSTANTIATE_TEST_SUITE_P(Cells, NetworkEstimator,
                         ::testing::Values(hypnqs::CellKind::ERnn, hypnqs::CellKind::EGru, hypnqs::CellKind::HGru,
                                           hypnqs::CellKind::ERnn2D));

TEST(Adam, ZeroGradientLeavesParameters) {
  hypnqs::Adam adam({}, 3);
  Vec theta(3);
  theta << 1, -2, 3;
  const Vec before = theta;
  adam.step(theta, Vec::Zero(3));
  EXPECT_EQ(theta, before);
}

TEST(Adam, FirstStepIsSignLike) {
  hypnqs::AdamOptions opt;
  hypnqs::Adam adam(opt, 3);
  Vec theta = Vec::Zero(3);
  Vec g(3);
  g << 0.5, -2.0, 1e-3;
  adam.step(theta, g);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(theta[i], -opt.lr * g[i] / (std::abs(g[i]) + opt.eps), 1e-16);
}

TEST(Adam, ScheduleAndMask) {
  hypnqs::AdamOptions opt;
  opt.lr = 2e-3;
  const hypnqs::Adam adam(opt, 1);
  EXPECT_DOUBLE_EQ(adam.learning_rate(0), 2e-3);
  EXPECT_NEAR(adam.learning_rate(100), 2e-3 * 0.95, 1e-18);
  hypnqs::Adam masked(opt, 2);
  Vec theta = Vec::Zero(2);
  masked.step(theta, Vec::Ones(2), {true, false});
  EXPECT_LT(theta[0], 0.0);
  EXPECT_EQ(theta[1], 0.0);
  opt.beta1 = 1.0;
  EXPECT_THROW(hypnqs::Adam(opt, 1), std::invalid_argument);
}

TEST(Rsgd, ZeroGradientIsIdentity) {
  Vec x(2);
  x << 0.3, -0.2;
  EXPECT_LT((hypnqs::rsgd_step(x, Vec(Vec::Zero(2)), 0.1, hypnqs::geo::Ball{}) - x).norm(), 1e-15);
}

TEST(Rsgd, OriginUsesQuarterMetricFactor) {
  Vec g(2);
  g << 0.4, -1.0;
  const hypnqs::geo::Ball ball{};
  const Vec expected = hypnqs::geo::exp0(Vec(-0.01 * g / 4.0), ball);
  EXPECT_LT((hypnqs::rsgd_step(Vec::Zero(2), g, 0.01, ball) - expected).norm(), 1e-15);
}

TEST(Rsgd, FlatLimitIsScaledEuclideanStep) {
  // The inverse metric tends to 1/4 as c -> 0, so the step tends to x - alpha g / 4.
  Vec x(3);
  x << 0.2, -0.1, 0.4;
  Vec g(3);
  g << 1.0, 0.5, -2.0;
  const hypnqs::geo::Ball flat{1e-8, 1e-5};
  const Vec got = hypnqs::rsgd_step(x, g, 0.05, flat);
  EXPECT_LT((got - (x - 0.05 * g / 4.0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Rsgd, StaysInsideBall) {
  Vec x(2);
  x << 0.99, 0.0;
  Vec g(2);
  g << -1e6, 0.0;
  const hypnqs::geo::BallPoint next = hypnqs::rsgd_step(hypnqs::geo::BallPoint(x), g, 1.0);
  EXPECT_LT(next.coords().norm(), 1.0);
}

TEST(Clip, Modes) {
  Vec g(2);
  g << 3.0, -4.0;
  EXPECT_EQ(hypnqs::clip_gradients(g, hypnqs::ClipMode::None, 1.0), g);
  const Vec n = hypnqs::clip_gradients(g, hypnqs::ClipMode::Norm, 1.0);
  EXPECT_NEAR(n[0], 0.6, 1e-15);
  EXPECT_NEAR(n[1], -0.8, 1e-15);
  const Vec v = hypnqs::clip_gradients(g, hypnqs::ClipMode::Value, 2.0);
  EXPECT_EQ(v[0], 2.0);
  EXPECT_EQ(v[1], -2.0);
  EXPECT_EQ(hypnqs::clip_gradients(g, hypnqs::ClipMode::Norm, 10.0), g);
  g[0] = std::nan("");
  EXPECT_THROW(hypnqs::clip_gradients(g, hypnqs::ClipMode::None, 1.0), hypnqs::NumericalError);
  EXPECT_EQ(hypnqs::parse_clip_mode("norm"), hypnqs::ClipMode::Norm);
}

TEST(BestModelGate, RequiresImprovementAndLowVariance) {
  hypnqs::BestModelGate gate(1.0);
  EXPECT_FALSE(gate.has_best());
  EXPECT_FALSE(gate.offer(-5.0, 2.0));
  EXPECT_TRUE(gate.offer(-5.0, 0.5));
  EXPECT_FALSE(gate.offer(-4.0, 0.1));
  EXPECT_FALSE(gate.offer(-5.0, 0.1));
  EXPECT_TRUE(gate.offer(-6.0, 0.9));
  EXPECT_DOUBLE_EQ(gate.best(), -6.0);
}

TEST(BestModelGate, StoredBestIsNonIncreasing) {
  hypnqs::BestModelGate gate(0.5);
  hypnqs::Engine rng(2);
  double last = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    gate.offer(hypnqs::uniform(rng, -10, 0), hypnqs::uniform(rng, 0, 1));
    EXPECT_LE(gate.best(), last);
    last = gate.best();
  }
}

hypnqs::TrainResult small_run(unsigned threads, hypnqs::CellKind cell = hypnqs::CellKind::EGru) {
  auto cfg = hypnqs::testing::small_ansatz(cell, 6, 6, false);
  hypnqs::TrainOptions opt;
  opt.epochs = 6;
  opt.batch_size = 20;
  opt.seed = 9;
  opt.threads = threads;
  opt.adam.lr = 1e-2;
  hypnqs::ParameterStore p = hypnqs::ParameterStore::for_config(cfg);
  p.glorot_init(opt.seed);
  return hypnqs::train(cfg, HamiltonianSpec::tfim1d(6), opt, p);
}

TEST(Train, SameSeedGivesIdenticalRecords) {
  const auto a = small_run(1);
  const auto b = small_run(1);
  const auto c = small_run(3);
  ASSERT_EQ(a.history.size(), 6u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].mean, b.history[i].mean);
    EXPECT_EQ(a.history[i].variance, b.history[i].variance);
    EXPECT_EQ(a.history[i].best_saved, b.history[i].best_saved);
    EXPECT_EQ(a.history[i].mean, c.history[i].mean);
  }
  EXPECT_EQ(a.last.flatten(), c.last.flatten());
}

TEST(Train, BestCheckpointIsTheGatedModel) {
  const auto r = small_run(1);
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  for (const auto& rec : r.history) {
    if (rec.best_saved) {
      EXPECT_LT(rec.mean.real(), best);
      best = rec.mean.real();
      best_epoch = rec.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  if (best_epoch > 0) {
    EXPECT_DOUBLE_EQ(r.best_mean, best);
  }
}

TEST(Train, HyperbolicBiasesStayInBall) {
  const auto r = small_run(1, hypnqs::CellKind::HGru);
  for (const auto& t : r.last.tensors()) {
    if (t.manifold == hypnqs::Manifold::Hyperbolic) {
      EXPECT_LT(t.data.norm(), 1.0);
    }
  }
  EXPECT_NE(r.last.at("b_r").data, Vec::Zero(6));
}

TEST(Train, RejectsInvalidOptions) {
  auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::EGru, 4, 3, false);
  hypnqs::TrainOptions opt;
  opt.batch_size = 1;
  EXPECT_THROW(hypnqs::train(cfg, HamiltonianSpec::tfim1d(4), opt, hypnqs::ParameterStore::for_config(cfg)),
               std::invalid_argument);
  opt.batch_size = 10;
  EXPECT_THROW(hypnqs::train(cfg, HamiltonianSpec::tfim1d(5), opt, hypnqs::ParameterStore::for_config(cfg)),
               std::invalid_argument);
}

TEST(Infer, UniformAnsatzTwoSiteIsing) {
  auto cfg = hypnqs::testing::small_ansatz(hypnqs::CellKind::EGru, 2, 4, false);
  const auto params = hypnqs::ParameterStore::for_config(cfg);
  const auto r = hypnqs::infer(cfg, params, HamiltonianSpec::tfim1d(2), 4000, 3);
  // Local energies are -3 or -1 with equal probability: variance 1.
  EXPECT_NEAR(r.stats.mean.real(), -2.0, 5.0 * r.stats.stderr_);
  EXPECT_NEAR(r.stats.variance, 1.0, 1e-2);
  const auto one = hypnqs::infer(cfg, params, HamiltonianSpec::tfim1d(2), 1, 3);
  EXPECT_TRUE(one.stats.degenerate);
  EXPECT_EQ(one.stats.variance, 0.0);
  EXPECT_EQ(hypnqs::format_energy(-25.08381, 0.003), "-25.0838 (0.0030)");
}

}  // namespace
