// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Exact ground states for small systems and exhaustive ansatz enumeration.

#pragma once

#include "hypnqs/ansatz.hpp"
#include "hypnqs/hamiltonian.hpp"
#include "hypnqs/parallel.hpp"
#include "hypnqs/random.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypnqs {

// Computational basis, optionally restricted to a fixed number of spin-1
// sites. Bit i of a state is the spin at site i.
class Basis {
 public:
  static Basis full(int n) {
    check_size(n, 30);
    Basis b;
    b.n_ = n;
    b.states_.resize(std::size_t{1} << n);
    for (std::size_t i = 0; i < b.states_.size(); ++i) b.states_[i] = i;
    return b;
  }

  static Basis sector(int n, int ones) {
    check_size(n, 30);
    if (ones < 0 || ones > n) throw std::invalid_argument("Basis: invalid sector");
    Basis b;
    b.n_ = n;
    b.ones_ = ones;
    b.index_.assign(std::size_t{1} << n, -1);
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
      if (std::popcount(x) == ones) {
        b.index_[x] = static_cast<std::int32_t>(b.states_.size());
        b.states_.push_back(x);
      }
    }
    return b;
  }

  // Smallest |S^z| sector for the spin-rotation invariant models, the full
  // basis otherwise.
  static Basis for_spec(const HamiltonianSpec& spec) {
    return is_heisenberg(spec.kind) ? sector(spec.n, spec.n / 2) : full(spec.n);
  }

  int sites() const { return n_; }
  bool is_full() const { return ones_ < 0; }
  std::size_t size() const { return states_.size(); }
  std::uint64_t state(std::size_t k) const { return states_[k]; }
  const std::vector<std::uint64_t>& states() const { return states_; }

  // Position of a state, -1 when it lies outside the sector.
  std::int64_t find(std::uint64_t x) const {
    if (is_full()) return static_cast<std::int64_t>(x);
    return index_[x];
  }

  // Embeds a sector vector into the full 2^n basis.
  Vec embed(const Vec& v) const {
    if (static_cast<std::size_t>(v.size()) != size()) throw std::invalid_argument("Basis::embed: size mismatch");
    if (is_full()) return v;
    Vec out = Vec::Zero(Eigen::Index{1} << n_);
    for (std::size_t k = 0; k < size(); ++k) out[static_cast<Eigen::Index>(states_[k])] = v[static_cast<Eigen::Index>(k)];
    return out;
  }

 private:
  static void check_size(int n, int limit) {
    if (n < 1 || n > limit) throw std::invalid_argument("Basis: N must be in [1, " + std::to_string(limit) + "]");
  }

  int n_ = 0;
  int ones_ = -1;
  std::vector<std::uint64_t> states_;
  std::vector<std::int32_t> index_;
};

// y = H x on a basis, straight from the bond list with bit operations.
class SparseHamiltonian {
 public:
  SparseHamiltonian(const Hamiltonian& h, const Basis& basis, unsigned threads = 1)
      : h_(&h), basis_(&basis), threads_(threads) {
    if (basis.sites() != h.sites()) throw std::invalid_argument("SparseHamiltonian: basis size differs from model");
    const bool ising = !is_heisenberg(h.spec().kind);
    diag_.resize(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const std::uint64_t x = basis.state(k);
      double d = 0.0;
      for (const Bond& b : h.bond_list()) {
        const double zz = ((x >> b.i) & 1u) == ((x >> b.j) & 1u) ? 1.0 : -1.0;
        d += ising ? -b.coupling * zz : 0.25 * b.coupling * zz;
      }
      diag_[static_cast<Eigen::Index>(k)] = d;
    }
  }

  std::size_t dim() const { return basis_->size(); }

  void apply(const Vec& x, Vec& y) const {
    if (static_cast<std::size_t>(x.size()) != dim()) throw std::invalid_argument("SparseHamiltonian: size mismatch");
    y.resize(x.size());
    const bool ising = !is_heisenberg(h_->spec().kind);
    const double field = h_->spec().B;
    const int n = h_->sites();
    parallel_for(dim(), threads_, [&](std::size_t k) {
      const std::uint64_t s = basis_->state(k);
      double acc = diag_[static_cast<Eigen::Index>(k)] * x[static_cast<Eigen::Index>(k)];
      if (ising) {
        if (field != 0.0) {
          for (int i = 0; i < n; ++i) acc -= field * x[basis_->find(s ^ (std::uint64_t{1} << i))];
        }
      } else {
        for (const Bond& b : h_->bond_list()) {
          if (((s >> b.i) & 1u) == ((s >> b.j) & 1u)) continue;
          const std::uint64_t t = s ^ ((std::uint64_t{1} << b.i) | (std::uint64_t{1} << b.j));
          acc += 0.5 * b.coupling * x[basis_->find(t)];
        }
      }
      y[static_cast<Eigen::Index>(k)] = acc;
    });
  }

 private:
  const Hamiltonian* h_;
  const Basis* basis_;
  unsigned threads_;
  Vec diag_;
};

// Dense matrix on a basis assembled from Hamiltonian::connections.
struct DenseOperator {
  Eigen::MatrixXd matrix;

  static DenseOperator assemble(const Hamiltonian& h, const Basis& basis) {
    if (basis.size() > 4096) throw std::invalid_argument("DenseOperator: basis larger than 4096 states");
    const auto dim = static_cast<Eigen::Index>(basis.size());
    DenseOperator op{Eigen::MatrixXd::Zero(dim, dim)};
    ConnectionList list;
    for (Eigen::Index col = 0; col < dim; ++col) {
      const SpinConfiguration s = config_from_index(basis.state(static_cast<std::size_t>(col)), basis.sites());
      h.connections(s, list);
      op.matrix(col, col) += list.diagonal;
      for (const Connection& c : list.off_diagonal) {
        const std::int64_t row = basis.find(config_index(c.apply(s)));
        if (row < 0) throw std::logic_error("DenseOperator: connection leaves the basis");
        op.matrix(static_cast<Eigen::Index>(row), col) += c.element;
      }
    }
    return op;
  }

  double asymmetry() const { return (matrix - matrix.transpose()).cwiseAbs().maxCoeff(); }
};

inline std::complex<double> rayleigh_quotient(const DenseOperator& op, const Eigen::VectorXcd& psi) {
  if (psi.size() != op.matrix.rows()) throw std::invalid_argument("rayleigh_quotient: size mismatch");
  const Eigen::VectorXcd hpsi = op.matrix.cast<std::complex<double>>() * psi;
  return psi.dot(hpsi) / psi.squaredNorm();
}

struct LanczosOptions {
  int krylov_dim = 60;
  int max_restarts = 100;
  // Stop once |H v - E v| falls below tol * max(1, |E|).
  double tol = 1e-9;
  std::uint64_t seed = 12345;
  unsigned threads = 1;
};

struct LanczosResult {
  double energy = 0.0;
  Vec vector;
  double residual = 0.0;
  int restarts = 0;
  int matvecs = 0;
  double max_basis_overlap = 0.0;  // largest |<v_i, v_j>| for i != j in the last cycle
};

// Lowest eigenpair by restarted Lanczos with full reorthogonalization. Each
// cycle restarts from the current Ritz vector.
inline LanczosResult lanczos_ground_state(const SparseHamiltonian& h, const LanczosOptions& opt = {}) {
  const auto dim = static_cast<Eigen::Index>(h.dim());
  if (dim == 0) throw std::invalid_argument("lanczos: empty basis");
  LanczosResult result;
  Engine rng(opt.seed);
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = uniform(rng, -1.0, 1.0);
  v.normalize();
  const int m = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, dim));
  std::vector<Vec> basis;
  Vec w;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    basis.assign(1, v);
    std::vector<double> alpha;
    std::vector<double> beta;
    for (int j = 0; j < m; ++j) {
      h.apply(basis[static_cast<std::size_t>(j)], w);
      ++result.matvecs;
      alpha.push_back(basis[static_cast<std::size_t>(j)].dot(w));
      for (int pass = 0; pass < 2; ++pass) {
        for (const Vec& q : basis) w.noalias() -= q.dot(w) * q;
      }
      const double b = w.norm();
      if (j + 1 == m || b < 1e-12) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }
    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Vec s = eig.eigenvectors().col(0);
    Vec y = Vec::Zero(dim);
    for (Eigen::Index i = 0; i < k; ++i) y.noalias() += s[i] * basis[static_cast<std::size_t>(i)];
    y.normalize();
    h.apply(y, w);
    ++result.matvecs;
    const double e = y.dot(w);
    result.energy = e;
    result.residual = (w - e * y).norm();
    result.restarts = restart;
    result.vector = y;
    double overlap = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = a + 1; b < basis.size(); ++b) overlap = std::max(overlap, std::abs(basis[a].dot(basis[b])));
    }
    result.max_basis_overlap = overlap;
    if (result.residual < opt.tol * std::max(1.0, std::abs(e))) return result;
    v = y;
  }
  throw std::runtime_error("lanczos: no convergence after " + std::to_string(opt.max_restarts) +
                           " restarts (residual " + std::to_string(result.residual) + ")");
}

enum class ExactMethod { Auto, Dense, Lanczos };

struct GroundState {
  double energy = 0.0;
  // Normalized ground state over the full 2^N basis; empty above N = 20.
  Vec psi;
  std::size_t basis_size = 0;
  ExactMethod method = ExactMethod::Auto;
};

inline constexpr int kDenseMaxSites = 12;
inline constexpr int kLanczosMaxSites = 20;
inline constexpr int kLanczosMaxSitesSector = 24;

inline GroundState ground_energy(const HamiltonianSpec& spec, ExactMethod method = ExactMethod::Auto,
                                 const LanczosOptions& opt = {}) {
  spec.validate();
  const Hamiltonian h(spec);
  if (method == ExactMethod::Auto) method = spec.n <= 10 ? ExactMethod::Dense : ExactMethod::Lanczos;
  if (method == ExactMethod::Dense && spec.n > kDenseMaxSites) {
    throw std::invalid_argument("ground_energy: dense method supports N <= " + std::to_string(kDenseMaxSites));
  }
  const int lanczos_limit = is_heisenberg(spec.kind) ? kLanczosMaxSitesSector : kLanczosMaxSites;
  if (method == ExactMethod::Lanczos && spec.n > lanczos_limit) {
    throw std::invalid_argument("ground_energy: Lanczos supports N <= " + std::to_string(lanczos_limit) +
                                " for this model");
  }
  const Basis basis = Basis::for_spec(spec);
  GroundState gs;
  gs.method = method;
  gs.basis_size = basis.size();
  Vec v;
  if (method == ExactMethod::Dense) {
    const DenseOperator op = DenseOperator::assemble(h, basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op.matrix);
    if (eig.info() != Eigen::Success) throw std::runtime_error("ground_energy: eigensolver failed");
    gs.energy = eig.eigenvalues()[0];
    v = eig.eigenvectors().col(0);
  } else {
    const SparseHamiltonian sparse(h, basis, opt.threads);
    const LanczosResult r = lanczos_ground_state(sparse, opt);
    gs.energy = r.energy;
    v = r.vector;
  }
  if (spec.n <= kLanczosMaxSites) {
    gs.psi = basis.embed(v);
    gs.psi.normalize();
  }
  return gs;
}

// ---------------------------------------------------------------------------
// Enumeration

inline constexpr int kEnumerateMaxSites = 10;

struct ProbabilityTable {
  int n = 0;
  Vec prob;   // |psi|^2, index = config_index
  Vec phase;
  Vec log_amp;

  Eigen::VectorXcd amplitudes() const {
    Eigen::VectorXcd a(prob.size());
    for (Eigen::Index i = 0; i < prob.size(); ++i) a[i] = std::polar(std::exp(log_amp[i]), phase[i]);
    return a;
  }
};

template <Wavefunction W>
ProbabilityTable enumerate_probabilities(const W& wf, int max_sites = kEnumerateMaxSites) {
  const int n = wf.sites();
  if (n > max_sites) {
    throw std::invalid_argument("enumerate_probabilities: N = " + std::to_string(n) + " exceeds " +
                                std::to_string(max_sites));
  }
  ProbabilityTable t;
  t.n = n;
  const Eigen::Index size = Eigen::Index{1} << n;
  t.prob.resize(size);
  t.phase.resize(size);
  t.log_amp.resize(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const WavefunctionValue v = wf.log_psi(config_from_index(static_cast<std::uint64_t>(i), n));
    t.log_amp[i] = v.log_amp;
    t.phase[i] = v.phase;
    t.prob[i] = std::exp(2.0 * v.log_amp);
  }
  return t;
}

// sum_s |psi(s)|^2 E_loc(s) / sum_s |psi(s)|^2 over the whole basis.
template <Wavefunction W>
std::complex<double> exact_energy(const W& wf, const Hamiltonian& h, int max_sites = kEnumerateMaxSites) {
  const ProbabilityTable t = enumerate_probabilities(wf, max_sites);
  std::complex<double> acc = 0.0;
  double norm = 0.0;
  for (Eigen::Index i = 0; i < t.prob.size(); ++i) {
    if (t.prob[i] == 0.0) continue;
    acc += t.prob[i] * local_energy(config_from_index(static_cast<std::uint64_t>(i), t.n), h, wf);
    norm += t.prob[i];
  }
  return acc / norm;
}

// E(theta) - E0 with both terms computed exactly.
template <Wavefunction W>
double variational_gap(const W& wf, const HamiltonianSpec& spec, int max_sites = kEnumerateMaxSites) {
  const Hamiltonian h(spec);
  return exact_energy(wf, h, max_sites).real() - ground_energy(spec).energy;
}

}  // namespace hypnqs
