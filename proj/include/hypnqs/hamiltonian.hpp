// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Spin Hamiltonians with open boundaries and their local energies.
//
// Spin value 0 is z = +1 and 1 is z = -1. The Ising models use Pauli
// matrices; the Heisenberg models use S = sigma / 2.

#pragma once

#include "hypnqs/ansatz.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hypnqs {

enum class ModelKind { TFIM1D, TFIM2D, J1J2, J1J2J3 };

inline std::string_view model_name(ModelKind k) {
  switch (k) {
    case ModelKind::TFIM1D: return "tfim1d";
    case ModelKind::TFIM2D: return "tfim2d";
    case ModelKind::J1J2: return "j1j2";
    case ModelKind::J1J2J3: return "j1j2j3";
  }
  throw std::invalid_argument("unknown model kind");
}

inline ModelKind parse_model_kind(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "tfim1d") return ModelKind::TFIM1D;
  if (s == "tfim2d") return ModelKind::TFIM2D;
  if (s == "j1j2") return ModelKind::J1J2;
  if (s == "j1j2j3") return ModelKind::J1J2J3;
  throw std::invalid_argument("unknown model '" + std::string(text) + "'");
}

inline bool is_heisenberg(ModelKind k) { return k == ModelKind::J1J2 || k == ModelKind::J1J2J3; }

struct HamiltonianSpec {
  ModelKind kind = ModelKind::TFIM1D;
  double J = 1.0;
  double B = 1.0;
  double J1 = 1.0;
  double J2 = 0.0;
  double J3 = 0.0;
  int n = 0;   // chain length, or rows * cols for the lattice
  int nx = 0;  // lattice rows
  int ny = 0;  // lattice columns

  static HamiltonianSpec tfim1d(int n, double J = 1.0, double B = 1.0) {
    HamiltonianSpec s;
    s.kind = ModelKind::TFIM1D;
    s.n = n;
    s.J = J;
    s.B = B;
    return s;
  }
  static HamiltonianSpec tfim2d(int nx, int ny, double J = 1.0, double B = 1.0) {
    HamiltonianSpec s;
    s.kind = ModelKind::TFIM2D;
    s.nx = nx;
    s.ny = ny;
    s.n = nx * ny;
    s.J = J;
    s.B = B;
    return s;
  }
  static HamiltonianSpec j1j2(int n, double J1, double J2) {
    HamiltonianSpec s;
    s.kind = ModelKind::J1J2;
    s.n = n;
    s.J1 = J1;
    s.J2 = J2;
    return s;
  }
  static HamiltonianSpec j1j2j3(int n, double J1, double J2, double J3) {
    HamiltonianSpec s = j1j2(n, J1, J2);
    s.kind = ModelKind::J1J2J3;
    s.J3 = J3;
    return s;
  }

  int sites() const { return n; }

  void validate() const {
    const bool finite = std::isfinite(J) && std::isfinite(B) && std::isfinite(J1) && std::isfinite(J2) &&
                        std::isfinite(J3);
    if (!finite) throw std::invalid_argument("hamiltonian: couplings must be finite");
    if (kind == ModelKind::TFIM2D) {
      if (nx < 1 || ny < 1 || nx * ny < 2) throw std::invalid_argument("hamiltonian: lattice needs at least 2 sites");
      if (n != nx * ny) throw std::invalid_argument("hamiltonian: n must equal nx * ny");
    } else if (n < 2) {
      throw std::invalid_argument("hamiltonian: N must be >= 2");
    }
    if (kind == ModelKind::J1J2 && J3 != 0.0) throw std::invalid_argument("hamiltonian: J3 requires the j1j2j3 model");
  }

  // J2 = J1 / 2 without J3: the dimerized Majumdar-Ghosh chain.
  bool is_majumdar_ghosh() const { return is_heisenberg(kind) && J1 > 0.0 && J2 == 0.5 * J1 && J3 == 0.0; }

  // -3 N J1 / 8 at the Majumdar-Ghosh point with even N.
  std::optional<double> majumdar_ghosh_energy() const {
    if (!is_majumdar_ghosh() || n % 2 != 0) return std::nullopt;
    return -0.375 * n * J1;
  }
};

// (i', j') with 1 <= i' <= rows and 1 <= j' <= cols to the 1-based chain
// index (i' - 1) * cols + j'.
inline int lattice_map_2d(int row, int col, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("lattice_map_2d: lattice must be non-empty");
  if (row < 1 || row > rows || col < 1 || col > cols) {
    throw std::out_of_range("lattice_map_2d: (" + std::to_string(row) + ", " + std::to_string(col) +
                            ") outside the lattice");
  }
  return (row - 1) * cols + col;
}

inline int lattice_map_2d(int row, int col, int side) { return lattice_map_2d(row, col, side, side); }

// Coupled pair with 0-based site indices i < j.
struct Bond {
  int i = 0;
  int j = 0;
  double coupling = 0.0;
};

// Pairs with a non-zero coupling. For the Ising models the coupling is J.
inline std::vector<Bond> bonds(const HamiltonianSpec& spec) {
  spec.validate();
  std::vector<Bond> out;
  auto add_range = [&](int distance, double coupling) {
    if (coupling == 0.0) return;
    for (int i = 0; i + distance < spec.n; ++i) out.push_back({i, i + distance, coupling});
  };
  switch (spec.kind) {
    case ModelKind::TFIM1D: add_range(1, spec.J); break;
    case ModelKind::TFIM2D:
      if (spec.J == 0.0) break;
      for (int r = 0; r < spec.nx; ++r) {
        for (int c = 0; c < spec.ny; ++c) {
          const int s = r * spec.ny + c;
          if (c + 1 < spec.ny) out.push_back({s, s + 1, spec.J});
          if (r + 1 < spec.nx) out.push_back({s, s + spec.ny, spec.J});
        }
      }
      break;
    case ModelKind::J1J2:
    case ModelKind::J1J2J3:
      add_range(1, spec.J1);
      add_range(2, spec.J2);
      add_range(3, spec.J3);
      break;
  }
  return out;
}

// Off-diagonal element <s|H|s'> where s' is s with one or two sites flipped.
struct Connection {
  int site_a = -1;
  int site_b = -1;  // -1 for a single flip
  double element = 0.0;

  SpinConfiguration apply(const SpinConfiguration& s) const {
    SpinConfiguration t = s;
    t[static_cast<std::size_t>(site_a)] ^= 1;
    if (site_b >= 0) t[static_cast<std::size_t>(site_b)] ^= 1;
    return t;
  }
};

struct ConnectionList {
  double diagonal = 0.0;
  std::vector<Connection> off_diagonal;
};

class Hamiltonian {
 public:
  explicit Hamiltonian(HamiltonianSpec spec) : spec_(spec), bonds_(bonds(spec_)) {}

  const HamiltonianSpec& spec() const { return spec_; }
  const std::vector<Bond>& bond_list() const { return bonds_; }
  int sites() const { return spec_.n; }

  void connections(const SpinConfiguration& s, ConnectionList& out) const {
    if (static_cast<int>(s.size()) != spec_.n) {
      throw std::invalid_argument("connections: configuration has " + std::to_string(s.size()) +
                                  " sites, expected " + std::to_string(spec_.n));
    }
    out.diagonal = 0.0;
    out.off_diagonal.clear();
    const bool ising = !is_heisenberg(spec_.kind);
    for (const Bond& b : bonds_) {
      const Spin a = s[static_cast<std::size_t>(b.i)];
      const Spin c = s[static_cast<std::size_t>(b.j)];
      if (a > 1 || c > 1) throw std::invalid_argument("connections: spin values must be 0 or 1");
      const double zz = a == c ? 1.0 : -1.0;
      if (ising) {
        out.diagonal -= b.coupling * zz;
      } else {
        out.diagonal += 0.25 * b.coupling * zz;
        if (a != c) out.off_diagonal.push_back({b.i, b.j, 0.5 * b.coupling});
      }
    }
    if (ising && spec_.B != 0.0) {
      for (int i = 0; i < spec_.n; ++i) out.off_diagonal.push_back({i, -1, -spec_.B});
    }
  }

  ConnectionList connections(const SpinConfiguration& s) const {
    ConnectionList out;
    connections(s, out);
    return out;
  }

 private:
  HamiltonianSpec spec_;
  std::vector<Bond> bonds_;
};

inline std::complex<double> amplitude_ratio(const WavefunctionValue& to, const WavefunctionValue& from) {
  return std::exp(std::complex<double>(to.log_amp - from.log_amp, to.phase - from.phase));
}

// E_loc(s) = <s|H|s> + sum_s' <s|H|s'> psi(s') / psi(s).
template <Wavefunction W>
std::complex<double> local_energy(const SpinConfiguration& s, const Hamiltonian& h, const W& wf) {
  ConnectionList list;
  h.connections(s, list);
  std::complex<double> e = list.diagonal;
  if constexpr (std::same_as<W, Network>) {
    Network::Cache cache;
    wf.fill_cache(s, cache);
    const auto& pos = wf.path().position;
    for (const Connection& c : list.off_diagonal) {
      int first = pos[static_cast<std::size_t>(c.site_a)];
      if (c.site_b >= 0) first = std::min(first, pos[static_cast<std::size_t>(c.site_b)]);
      e += c.element * amplitude_ratio(wf.log_psi_from(cache, c.apply(s), first), cache.value);
    }
  } else {
    const WavefunctionValue base = wf.log_psi(s);
    for (const Connection& c : list.off_diagonal) e += c.element * amplitude_ratio(wf.log_psi(c.apply(s)), base);
  }
  return e;
}

}  // namespace hypnqs
