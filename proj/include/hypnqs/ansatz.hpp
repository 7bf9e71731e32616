// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Autoregressive recurrent wavefunctions over spin-1/2 chains and lattices.
//
// A configuration is visited along a path; at each position a recurrent cell
// folds the neighbouring hidden states and spins into a new state, a softmax
// head gives the conditional distribution of the current spin, and an
// optional softsign head gives its phase. The same templated cell code runs
// on plain Eigen vectors (sampling, local energies) and on the tape
// (gradients).

#pragma once

#include "hypnqs/autodiff.hpp"
#include "hypnqs/geometry.hpp"
#include "hypnqs/linalg.hpp"
#include "hypnqs/parallel.hpp"
#include "hypnqs/random.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hypnqs {

using Spin = std::uint8_t;
using SpinConfiguration = std::vector<Spin>;

enum class CellKind { ERnn, EGru, HGru, ERnn2D };

inline std::string_view cell_name(CellKind k) {
  switch (k) {
    case CellKind::ERnn: return "ernn";
    case CellKind::EGru: return "egru";
    case CellKind::HGru: return "hgru";
    case CellKind::ERnn2D: return "2drnn";
  }
  throw std::invalid_argument("unknown cell kind");
}

inline CellKind parse_cell_kind(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "ernn") return CellKind::ERnn;
  if (s == "egru") return CellKind::EGru;
  if (s == "hgru") return CellKind::HGru;
  if (s == "2drnn" || s == "ernn2d") return CellKind::ERnn2D;
  throw std::invalid_argument("unknown cell kind '" + std::string(text) + "'");
}

struct AnsatzConfig {
  CellKind cell = CellKind::EGru;
  int d_h = 50;
  int d_v = 2;
  bool complex_output = false;
  // Adds pi per spin 1 on even (0-based) sites to the phase.
  bool marshall_sign = false;
  double c = 1.0;
  double ball_eps = 1e-5;
  int n = 0;
  // Lattice shape for the 2D cell; n == rows * cols.
  int rows = 0;
  int cols = 0;

  int sites() const { return n; }

  void validate() const {
    if (d_h < 1) throw std::invalid_argument("ansatz: d_h must be >= 1");
    if (d_v != 2) throw std::invalid_argument("ansatz: d_v must be 2");
    if (n < 1) throw std::invalid_argument("ansatz: number of sites must be >= 1");
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("ansatz: curvature must be >= 0");
    if (!(ball_eps > 0.0 && ball_eps < 1.0)) throw std::invalid_argument("ansatz: ball_eps must be in (0, 1)");
    if (cell == CellKind::ERnn2D && (rows < 1 || cols < 1 || rows * cols != n)) {
      throw std::invalid_argument("ansatz: 2D cell needs rows * cols == n");
    }
  }
};

inline std::int64_t count_parameters(const AnsatzConfig& cfg) {
  const std::int64_t h = cfg.d_h;
  const std::int64_t v = cfg.d_v;
  const std::int64_t block = h * h + h * v + h;
  std::int64_t cell = 0;
  switch (cfg.cell) {
    case CellKind::ERnn: cell = block; break;
    case CellKind::EGru:
    case CellKind::HGru: cell = 3 * block; break;
    case CellKind::ERnn2D: cell = 2 * (h * h + h * v) + h; break;
    default: throw std::invalid_argument("count_parameters: unknown cell kind");
  }
  const std::int64_t head = v * h + v;
  return cell + head * (cfg.complex_output ? 2 : 1);
}

// ---------------------------------------------------------------------------
// Parameters

enum class Manifold { Euclidean, Hyperbolic };

inline std::string_view manifold_name(Manifold m) { return m == Manifold::Euclidean ? "euclidean" : "hyperbolic"; }

struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 1;
  Manifold manifold = Manifold::Euclidean;
  Vec data;  // row-major

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool is_bias() const { return cols == 1; }
};

class ParameterStore {
 public:
  ParameterStore() = default;

  // Zero-valued store with the tensor layout of cfg.
  static ParameterStore for_config(const AnsatzConfig& cfg) {
    cfg.validate();
    const int h = cfg.d_h;
    const int v = cfg.d_v;
    const Manifold bias_kind = cfg.cell == CellKind::HGru ? Manifold::Hyperbolic : Manifold::Euclidean;
    ParameterStore s;
    switch (cfg.cell) {
      case CellKind::ERnn:
        s.add("W_h", h, h);
        s.add("U_h", h, v);
        s.add("b_h", h, 1);
        break;
      case CellKind::EGru:
      case CellKind::HGru:
        for (const char* name : {"W_r", "W_z", "W_h"}) s.add(name, h, h);
        for (const char* name : {"U_r", "U_z", "U_h"}) s.add(name, h, v);
        for (const char* name : {"b_r", "b_z", "b_h"}) s.add(name, h, 1, bias_kind);
        break;
      case CellKind::ERnn2D:
        s.add("W_h", h, h);
        s.add("W_v", h, h);
        s.add("U_h", h, v);
        s.add("U_v", h, v);
        s.add("b", h, 1);
        break;
    }
    s.add("U1", v, h);
    s.add("c1", v, 1);
    if (cfg.complex_output) {
      s.add("U2", v, h);
      s.add("c2", v, 1);
    }
    return s;
  }

  // Glorot-uniform weights, zero biases (the ball origin for hyperbolic ones).
  void glorot_init(std::uint64_t seed) {
    Engine rng(derive_seed(seed, {0x696e6974ULL}));
    for (Tensor& t : tensors_) {
      if (t.is_bias()) {
        t.data.setZero();
        continue;
      }
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
      for (double& x : t.data) x = uniform(rng, -limit, limit);
    }
  }

  void add(std::string name, int rows, int cols, Manifold m = Manifold::Euclidean) {
    if (contains(name)) throw std::invalid_argument("parameter '" + name + "' already present");
    Tensor t{std::move(name), rows, cols, m, Vec::Zero(static_cast<Eigen::Index>(rows) * cols)};
    tensors_.push_back(std::move(t));
  }

  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Tensor>& tensors() { return tensors_; }

  bool contains(std::string_view name) const {
    return std::any_of(tensors_.begin(), tensors_.end(), [&](const Tensor& t) { return t.name == name; });
  }
  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      if (tensors_[i].name == name) return i;
    }
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  }
  const Tensor& at(std::string_view name) const { return tensors_[index_of(name)]; }
  Tensor& at(std::string_view name) { return tensors_[index_of(name)]; }

  std::size_t size() const {
    std::size_t total = 0;
    for (const Tensor& t : tensors_) total += t.size();
    return total;
  }

  Vec flatten() const {
    Vec out(static_cast<Eigen::Index>(size()));
    Eigen::Index off = 0;
    for (const Tensor& t : tensors_) {
      out.segment(off, t.data.size()) = t.data;
      off += t.data.size();
    }
    return out;
  }

  void assign(const Vec& flat) {
    if (static_cast<std::size_t>(flat.size()) != size()) {
      throw std::invalid_argument("ParameterStore::assign: expected " + std::to_string(size()) + " values, got " +
                                  std::to_string(flat.size()));
    }
    Eigen::Index off = 0;
    for (Tensor& t : tensors_) {
      t.data = flat.segment(off, t.data.size());
      off += t.data.size();
    }
  }

  bool all_finite() const {
    return std::all_of(tensors_.begin(), tensors_.end(), [](const Tensor& t) { return t.data.allFinite(); });
  }

 private:
  std::vector<Tensor> tensors_;
};

// ---------------------------------------------------------------------------
// Visiting order

struct Path {
  std::vector<int> site;      // site index visited at each position
  std::vector<int> position;  // inverse of site
  std::vector<int> hor;       // position of the horizontal predecessor, -1 if none
  std::vector<int> ver;       // position of the vertical predecessor, -1 if none

  int size() const { return static_cast<int>(site.size()); }

  static Path chain(int n) {
    Path p;
    for (int k = 0; k < n; ++k) {
      p.site.push_back(k);
      p.position.push_back(k);
      p.hor.push_back(k - 1);
      p.ver.push_back(-1);
    }
    return p;
  }

  // Snake through a rows x cols lattice with row-major site indices: even
  // rows left to right, odd rows right to left.
  static Path snake(int rows, int cols) {
    Path p;
    const int n = rows * cols;
    p.position.assign(static_cast<std::size_t>(n), -1);
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < cols; ++j) {
        const int col = r % 2 == 0 ? j : cols - 1 - j;
        const int site = r * cols + col;
        const int k = static_cast<int>(p.site.size());
        p.site.push_back(site);
        p.position[static_cast<std::size_t>(site)] = k;
        p.hor.push_back(j == 0 ? -1 : k - 1);
        p.ver.push_back(r == 0 ? -1 : p.position[static_cast<std::size_t>((r - 1) * cols + col)]);
      }
    }
    return p;
  }

  static Path for_config(const AnsatzConfig& cfg) {
    return cfg.cell == CellKind::ERnn2D ? snake(cfg.rows, cfg.cols) : chain(cfg.n);
  }
};

// ---------------------------------------------------------------------------
// Cells and heads, generic over the backend

// Gate slots: 0 reset, 1 update, 2 candidate. The plain RNN and the 2D RNN
// only use slot 2. Input index 0 is the zero input of the first site,
// 1 + s is the one-hot vector of spin s.
template <class M, class V>
struct Weights {
  std::array<M, 3> w{};
  std::array<M, 3> u{};
  std::array<V, 3> b{};
  M w_v{};
  M u_v{};
  M head_u1{};
  V head_c1{};
  M head_u2{};
  V head_c2{};
  // Input terms: U_g x (+ b_g for Euclidean gates); U_g (x) exp_0(x) for hGRU.
  std::array<std::array<V, 3>, 3> in{};
  std::array<V, 3> in_v{};
  V zero_h{};
  std::array<V, 2> pick{};
};

template <class M, class V, class MakeM, class MakeV, class MakeConst>
Weights<M, V> build_weights(const AnsatzConfig& cfg, const ParameterStore& p, MakeM&& mat, MakeV&& vec,
                            MakeConst&& constant) {
  Weights<M, V> w;
  const geo::Ball ball{cfg.c, cfg.ball_eps};
  switch (cfg.cell) {
    case CellKind::ERnn:
      w.w[2] = mat(p.at("W_h"));
      w.u[2] = mat(p.at("U_h"));
      w.b[2] = vec(p.at("b_h"));
      break;
    case CellKind::EGru:
    case CellKind::HGru: {
      const std::array<const char*, 3> ws{"W_r", "W_z", "W_h"};
      const std::array<const char*, 3> us{"U_r", "U_z", "U_h"};
      const std::array<const char*, 3> bs{"b_r", "b_z", "b_h"};
      for (int g = 0; g < 3; ++g) {
        w.w[g] = mat(p.at(ws[g]));
        w.u[g] = mat(p.at(us[g]));
        w.b[g] = vec(p.at(bs[g]));
      }
      break;
    }
    case CellKind::ERnn2D:
      w.w[2] = mat(p.at("W_h"));
      w.w_v = mat(p.at("W_v"));
      w.u[2] = mat(p.at("U_h"));
      w.u_v = mat(p.at("U_v"));
      w.b[2] = vec(p.at("b"));
      break;
  }
  w.head_u1 = mat(p.at("U1"));
  w.head_c1 = vec(p.at("c1"));
  if (cfg.complex_output) {
    w.head_u2 = mat(p.at("U2"));
    w.head_c2 = vec(p.at("c2"));
  }

  std::array<V, 3> x{constant(Vec::Zero(cfg.d_v)), constant(Vec::Unit(cfg.d_v, 0)), constant(Vec::Unit(cfg.d_v, 1))};
  w.pick = {x[1], x[2]};
  w.zero_h = constant(Vec::Zero(cfg.d_h));
  for (int k = 0; k < 3; ++k) {
    switch (cfg.cell) {
      case CellKind::ERnn:
        w.in[2][k] = V(matvec(w.u[2], x[k]) + w.b[2]);
        break;
      case CellKind::EGru:
        for (int g = 0; g < 3; ++g) w.in[g][k] = V(matvec(w.u[g], x[k]) + w.b[g]);
        break;
      case CellKind::HGru: {
        const V lifted = geo::exp0(x[k], ball);
        for (int g = 0; g < 3; ++g) w.in[g][k] = geo::mobius_matvec(w.u[g], lifted, ball);
        break;
      }
      case CellKind::ERnn2D:
        w.in[2][k] = matvec(w.u[2], x[k]);
        w.in_v[k] = matvec(w.u_v, x[k]);
        break;
    }
  }
  return w;
}

template <class M, class V>
V euclidean_rnn_step(const Weights<M, V>& w, const V& h, int input) {
  return tanh(V(matvec(w.w[2], h) + w.in[2][input]));
}

template <class M, class V>
V euclidean_gru_step(const Weights<M, V>& w, const V& h, int input) {
  const V r = sigmoid(V(matvec(w.w[0], h) + w.in[0][input]));
  const V z = sigmoid(V(matvec(w.w[1], h) + w.in[1][input]));
  const V cand = tanh(V(matvec(w.w[2], hadamard(r, h)) + w.in[2][input]));
  return V(h + hadamard(z, V(cand - h)));
}

template <class M, class V>
V hyperbolic_gru_step(const Weights<M, V>& w, const V& h, int input, const geo::Ball& ball) {
  using namespace geo;
  auto gate = [&](int g) {
    const V pre = mobius_add(mobius_add(mobius_matvec(w.w[g], h, ball), w.in[g][input], ball), w.b[g], ball);
    return sigmoid(log0(pre, ball));
  };
  const V r = gate(0);
  const V z = gate(1);
  const V reset = mobius_apply(V(matvec(w.w[2], hadamard(r, h))), h, ball);
  const V pre = mobius_add(mobius_add(reset, w.in[2][input], ball), w.b[2], ball);
  const V cand = pointwise([](const V& t) { return tanh(t); }, pre, ball);
  const V delta = mobius_add(V(-h), cand, ball);
  return mobius_add(h, mobius_apply(hadamard(z, delta), delta, ball), ball);
}

template <class M, class V>
V rnn2d_step(const Weights<M, V>& w, const V& h_hor, int in_hor, const V& h_ver, int in_ver) {
  const V pre = matvec(w.w[2], h_hor) + w.in[2][in_hor] + matvec(w.w_v, h_ver) + w.in_v[in_ver] + w.b[2];
  return tanh(pre);
}

template <class V>
struct HeadOutput {
  V y1;
  V y2;
};

template <class M, class V>
HeadOutput<V> heads(const AnsatzConfig& cfg, const Weights<M, V>& w, const V& h) {
  const geo::Ball ball{cfg.c, cfg.ball_eps};
  const V feature = cfg.cell == CellKind::HGru ? geo::log0(h, ball) : h;
  HeadOutput<V> out;
  out.y1 = softmax(V(matvec(w.head_u1, feature) + w.head_c1));
  if (cfg.complex_output) out.y2 = std::numbers::pi * softsign(V(matvec(w.head_u2, feature) + w.head_c2));
  return out;
}

// Runs the recurrence from position `start` to the end of the path. States
// for positions < start must already be in `states`. on_site(k, head)
// returns the spin placed at position k, which is written to spins.
template <class M, class V, class OnSite>
void scan(const AnsatzConfig& cfg, const Weights<M, V>& w, const Path& path, int start, std::vector<V>& states,
          SpinConfiguration& spins, OnSite&& on_site) {
  const geo::Ball ball{cfg.c, cfg.ball_eps};
  const int n = path.size();
  states.resize(static_cast<std::size_t>(n));
  for (int k = start; k < n; ++k) {
    const int hp = path.hor[static_cast<std::size_t>(k)];
    const V& hh = hp >= 0 ? states[static_cast<std::size_t>(hp)] : w.zero_h;
    const int xh = hp >= 0 ? 1 + spins[static_cast<std::size_t>(path.site[static_cast<std::size_t>(hp)])] : 0;
    V& out = states[static_cast<std::size_t>(k)];
    switch (cfg.cell) {
      case CellKind::ERnn: out = euclidean_rnn_step(w, hh, xh); break;
      case CellKind::EGru: out = euclidean_gru_step(w, hh, xh); break;
      case CellKind::HGru: out = hyperbolic_gru_step(w, hh, xh, ball); break;
      case CellKind::ERnn2D: {
        const int vp = path.ver[static_cast<std::size_t>(k)];
        const V& hv = vp >= 0 ? states[static_cast<std::size_t>(vp)] : w.zero_h;
        const int xv = vp >= 0 ? 1 + spins[static_cast<std::size_t>(path.site[static_cast<std::size_t>(vp)])] : 0;
        out = rnn2d_step(w, hh, xh, hv, xv);
        break;
      }
    }
    const HeadOutput<V> head = heads(cfg, w, out);
    const int s = on_site(k, head);
    spins[static_cast<std::size_t>(path.site[static_cast<std::size_t>(k)])] = static_cast<Spin>(s);
  }
}

// Number of spin-1 values on even (0-based) sites.
inline int marshall_count(const SpinConfiguration& s) {
  int m = 0;
  for (std::size_t i = 0; i < s.size(); i += 2) m += s[i];
  return m;
}

// ---------------------------------------------------------------------------
// Plain evaluation and sampling

struct WavefunctionValue {
  double log_amp = 0.0;
  double phase = 0.0;
};

template <class W>
concept Wavefunction = requires(const W& w, const SpinConfiguration& s) {
  { w.log_psi(s) } -> std::convertible_to<WavefunctionValue>;
  { w.sites() } -> std::convertible_to<int>;
};

struct Sample {
  SpinConfiguration spins;
  double log_prob = 0.0;
};

class Network {
 public:
  // Per-configuration prefix data reused when evaluating nearby configurations.
  struct Cache {
    SpinConfiguration spins;
    std::vector<Vec> states;
    std::vector<double> amp_prefix;    // amp_prefix[k]: sum of the first k terms
    std::vector<double> phase_prefix;
    WavefunctionValue value;
  };

  Network(AnsatzConfig cfg, const ParameterStore& params) : cfg_(std::move(cfg)) {
    cfg_.validate();
    check_layout(params);
    path_ = Path::for_config(cfg_);
    auto mat = [](const Tensor& t) { return RowMat(Eigen::Map<const RowMat>(t.data.data(), t.rows, t.cols)); };
    auto vec = [](const Tensor& t) { return t.data; };
    auto constant = [](const Vec& v) { return v; };
    w_ = build_weights<RowMat, Vec>(cfg_, params, mat, vec, constant);
  }

  const AnsatzConfig& config() const { return cfg_; }
  const Path& path() const { return path_; }
  int sites() const { return cfg_.n; }

  WavefunctionValue log_psi(const SpinConfiguration& s) const {
    Cache cache;
    fill_cache(s, cache);
    return cache.value;
  }

  void fill_cache(const SpinConfiguration& s, Cache& cache) const {
    check_spins(s);
    cache.spins = s;
    const int n = path_.size();
    cache.amp_prefix.assign(static_cast<std::size_t>(n) + 1, 0.0);
    cache.phase_prefix.assign(static_cast<std::size_t>(n) + 1, 0.0);
    run(0, cache.states, cache.spins, cache.amp_prefix, cache.phase_prefix);
    cache.value = finish(cache.spins, cache.amp_prefix.back(), cache.phase_prefix.back());
  }

  // log psi of `target`, which agrees with cache.spins on every position
  // before `first_position`.
  WavefunctionValue log_psi_from(const Cache& cache, const SpinConfiguration& target, int first_position) const {
    const int n = path_.size();
    if (first_position >= n) return finish(target, cache.amp_prefix.back(), cache.phase_prefix.back());
    std::vector<Vec> states(cache.states.begin(), cache.states.begin() + first_position);
    std::vector<double> amp(cache.amp_prefix.begin(), cache.amp_prefix.end());
    std::vector<double> phase(cache.phase_prefix.begin(), cache.phase_prefix.end());
    SpinConfiguration spins = target;
    run(first_position, states, spins, amp, phase);
    return finish(spins, amp.back(), phase.back());
  }

  // Draws a configuration from |psi|^2 and returns it with its log probability.
  Sample sample(Engine& rng) const {
    Sample out;
    out.spins.assign(static_cast<std::size_t>(cfg_.n), 0);
    std::vector<Vec> states;
    double log_prob = 0.0;
    scan(cfg_, w_, path_, 0, states, out.spins, [&](int, const HeadOutput<Vec>& head) {
      const int s = uniform01(rng) < head.y1[0] ? 0 : 1;
      log_prob += std::log(checked_prob(head.y1[s]));
      return s;
    });
    out.log_prob = log_prob;
    return out;
  }

 private:
  void check_layout(const ParameterStore& params) const {
    const ParameterStore expected = ParameterStore::for_config(cfg_);
    if (expected.tensors().size() != params.tensors().size()) {
      throw std::invalid_argument("network: parameter layout does not match the ansatz configuration");
    }
    for (std::size_t i = 0; i < expected.tensors().size(); ++i) {
      const Tensor& a = expected.tensors()[i];
      const Tensor& b = params.tensors()[i];
      if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.manifold != b.manifold ||
          static_cast<std::size_t>(b.data.size()) != b.size()) {
        throw std::invalid_argument("network: parameter '" + b.name + "' does not match the ansatz configuration");
      }
    }
  }

  void check_spins(const SpinConfiguration& s) const {
    if (static_cast<int>(s.size()) != cfg_.n) {
      throw std::invalid_argument("log_psi: configuration has " + std::to_string(s.size()) + " sites, expected " +
                                  std::to_string(cfg_.n));
    }
    for (Spin v : s) {
      if (v > 1) throw std::invalid_argument("log_psi: spin values must be 0 or 1");
    }
  }

  static double checked_prob(double p) {
    if (!(p > 0.0)) throw std::domain_error("log_psi: zero conditional probability");
    return p;
  }

  void run(int start, std::vector<Vec>& states, SpinConfiguration& spins, std::vector<double>& amp,
           std::vector<double>& phase) const {
    const SpinConfiguration fixed = spins;
    scan(cfg_, w_, path_, start, states, spins, [&](int k, const HeadOutput<Vec>& head) {
      const int s = fixed[static_cast<std::size_t>(path_.site[static_cast<std::size_t>(k)])];
      const auto kk = static_cast<std::size_t>(k);
      amp[kk + 1] = amp[kk] + 0.5 * std::log(checked_prob(head.y1[s]));
      phase[kk + 1] = phase[kk] + (cfg_.complex_output ? head.y2[s] : 0.0);
      return s;
    });
  }

  WavefunctionValue finish(const SpinConfiguration& s, double amp, double phase) const {
    if (cfg_.marshall_sign) phase += std::numbers::pi * marshall_count(s);
    return {amp, phase};
  }

  AnsatzConfig cfg_;
  Path path_;
  Weights<RowMat, Vec> w_;
};

// Samples n configurations; sample i uses its own engine derived from
// (seed, stream, i), so the batch does not depend on evaluation order.
inline std::vector<Sample> sample_batch(const Network& net, std::size_t n, std::uint64_t seed,
                                        std::uint64_t stream = 0, unsigned threads = 1) {
  std::vector<Sample> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Engine rng(derive_seed(seed, {stream, static_cast<std::uint64_t>(i)}));
    out[i] = net.sample(rng);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Gradients through the tape

struct LogPsiGradient {
  WavefunctionValue value;
  Vec d_amp;    // d log|psi| / d theta, flattened in store order
  Vec d_phase;  // d phase / d theta
};

class TapedNetwork {
 public:
  TapedNetwork(AnsatzConfig cfg, const ParameterStore& params) : cfg_(std::move(cfg)), params_(&params) {
    cfg_.validate();
    path_ = Path::for_config(cfg_);
  }

  // Records log psi(s) on a fresh tape and returns both outputs.
  struct Recorded {
    ad::Var log_amp;
    ad::Var phase;  // invalid for real ansatzes
    WavefunctionValue value;
  };

  Recorded record(const SpinConfiguration& s) {
    if (static_cast<int>(s.size()) != cfg_.n) throw std::invalid_argument("log_psi: wrong configuration length");
    tape_.clear();
    leaves_.clear();
    for (const Tensor& t : params_->tensors()) {
      leaves_.push_back(tape_.leaf({t.data.data(), t.size()}, t.rows, t.cols));
    }
    auto lookup = [&](const Tensor& t) { return leaves_[params_->index_of(t.name)]; };
    auto constant = [&](const Vec& v) { return tape_.constant(v); };
    const Weights<ad::Var, ad::Var> w = build_weights<ad::Var, ad::Var>(cfg_, *params_, lookup, lookup, constant);

    std::vector<ad::Var> states;
    SpinConfiguration spins = s;
    ad::Var amp = tape_.zeros(1);
    ad::Var phase;
    if (cfg_.complex_output) phase = tape_.zeros(1);
    scan(cfg_, w, path_, 0, states, spins, [&](int k, const HeadOutput<ad::Var>& head) {
      const int v = s[static_cast<std::size_t>(path_.site[static_cast<std::size_t>(k)])];
      amp = amp + 0.5 * ad::log(ad::dot(head.y1, w.pick[v]));
      if (cfg_.complex_output) phase = phase + ad::dot(head.y2, w.pick[v]);
      return v;
    });
    Recorded r{amp, phase, {amp.value(), phase.valid() ? phase.value() : 0.0}};
    if (cfg_.marshall_sign) r.value.phase += std::numbers::pi * marshall_count(s);
    return r;
  }

  // Adds coeff_amp * d log|psi| + coeff_phase * d phase to `out` and
  // returns log psi(s).
  WavefunctionValue accumulate(const SpinConfiguration& s, double coeff_amp, double coeff_phase, Vec& out) {
    const Recorded r = record(s);
    ad::Var root = coeff_amp * r.log_amp;
    if (r.phase.valid() && coeff_phase != 0.0) root = root + coeff_phase * r.phase;
    tape_.backward(root);
    add_leaf_grads(out, 1.0);
    return r.value;
  }

  LogPsiGradient gradient(const SpinConfiguration& s) {
    const Recorded r = record(s);
    LogPsiGradient g;
    g.value = r.value;
    const auto n = static_cast<Eigen::Index>(params_->size());
    g.d_amp = Vec::Zero(n);
    g.d_phase = Vec::Zero(n);
    tape_.backward(r.log_amp);
    add_leaf_grads(g.d_amp, 1.0);
    if (r.phase.valid()) {
      tape_.backward(r.phase);
      add_leaf_grads(g.d_phase, 1.0);
    }
    return g;
  }

  const ad::Tape& tape() const { return tape_; }

 private:
  void add_leaf_grads(Vec& out, double scale) const {
    if (out.size() != static_cast<Eigen::Index>(params_->size())) {
      throw std::invalid_argument("gradient buffer has the wrong size");
    }
    Eigen::Index off = 0;
    for (const ad::Var& leaf : leaves_) {
      const auto g = tape_.grad(leaf);
      for (std::size_t i = 0; i < g.size(); ++i) out[off + static_cast<Eigen::Index>(i)] += scale * g[i];
      off += static_cast<Eigen::Index>(g.size());
    }
  }

  AnsatzConfig cfg_;
  const ParameterStore* params_;
  Path path_;
  ad::Tape tape_;
  std::vector<ad::Var> leaves_;
};

// ---------------------------------------------------------------------------
// Configuration indexing and table-driven wavefunctions

// Bit i of the index holds the spin at site i.
inline std::uint64_t config_index(const SpinConfiguration& s) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < s.size(); ++i) idx |= static_cast<std::uint64_t>(s[i] & 1u) << i;
  return idx;
}

inline SpinConfiguration config_from_index(std::uint64_t idx, int n) {
  SpinConfiguration s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = static_cast<Spin>((idx >> i) & 1u);
  return s;
}

// Real amplitudes over the full 2^n basis; negative entries carry phase pi.
class LookupWavefunction {
 public:
  LookupWavefunction(int n, Vec amplitudes) : n_(n), amp_(std::move(amplitudes)) {
    if (n < 1 || n > 30) throw std::invalid_argument("LookupWavefunction: unsupported size");
    if (amp_.size() != (Eigen::Index{1} << n)) throw std::invalid_argument("LookupWavefunction: table size must be 2^n");
  }

  int sites() const { return n_; }

  WavefunctionValue log_psi(const SpinConfiguration& s) const {
    const double a = amp_[static_cast<Eigen::Index>(config_index(s))];
    return {std::log(std::abs(a)), a < 0.0 ? std::numbers::pi : 0.0};
  }

  const Vec& amplitudes() const { return amp_; }

 private:
  int n_;
  Vec amp_;
};

static_assert(Wavefunction<Network>);
static_assert(Wavefunction<LookupWavefunction>);

}  // namespace hypnqs
