// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Variational Monte Carlo: energy and gradient estimators, optimizers,
// clipping, best-model gating, the training loop and inference.

#pragma once

#include "hypnqs/ansatz.hpp"
#include "hypnqs/errors.hpp"
#include "hypnqs/geometry.hpp"
#include "hypnqs/hamiltonian.hpp"
#include "hypnqs/parallel.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hypnqs {

// ---------------------------------------------------------------------------
// Energy statistics

struct EnergyStats {
  std::complex<double> mean;
  double variance = 0.0;  // mean |E - mean|^2
  double stderr_ = 0.0;   // sqrt(variance / n)
  std::size_t n = 0;
  // Set for a single sample, where no spread can be estimated.
  bool degenerate = false;
};

inline EnergyStats energy_statistics(const std::vector<std::complex<double>>& eloc) {
  if (eloc.empty()) throw std::invalid_argument("energy_statistics: empty batch");
  EnergyStats st;
  st.n = eloc.size();
  for (const auto& e : eloc) st.mean += e;
  st.mean /= static_cast<double>(st.n);
  if (st.n == 1) {
    st.degenerate = true;
    return st;
  }
  for (const auto& e : eloc) st.variance += std::norm(e - st.mean);
  st.variance /= static_cast<double>(st.n);
  st.stderr_ = std::sqrt(st.variance / static_cast<double>(st.n));
  return st;
}

// Weighted form for exact enumeration; weights are normalized internally.
inline EnergyStats energy_statistics(const std::vector<std::complex<double>>& eloc, const std::vector<double>& weights) {
  if (eloc.empty()) throw std::invalid_argument("energy_statistics: empty batch");
  if (weights.size() != eloc.size()) throw std::invalid_argument("energy_statistics: weight count mismatch");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("energy_statistics: weights must have positive sum");
  EnergyStats st;
  st.n = eloc.size();
  for (std::size_t k = 0; k < eloc.size(); ++k) st.mean += weights[k] / total * eloc[k];
  for (std::size_t k = 0; k < eloc.size(); ++k) st.variance += weights[k] / total * std::norm(eloc[k] - st.mean);
  st.stderr_ = std::sqrt(st.variance / static_cast<double>(st.n));
  return st;
}

template <Wavefunction W>
std::vector<std::complex<double>> local_energies(const std::vector<SpinConfiguration>& configs, const Hamiltonian& h,
                                                 const W& wf, unsigned threads = 1) {
  std::vector<std::complex<double>> out(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t k) { out[k] = local_energy(configs[k], h, wf); });
  return out;
}

struct EnergyEstimate {
  EnergyStats stats;
  std::vector<std::complex<double>> eloc;
};

template <Wavefunction W>
EnergyEstimate energy_estimate(const std::vector<SpinConfiguration>& samples, const Hamiltonian& h, const W& wf,
                               unsigned threads = 1) {
  EnergyEstimate est;
  est.eloc = local_energies(samples, h, wf, threads);
  est.stats = energy_statistics(est.eloc);
  return est;
}

// ---------------------------------------------------------------------------
// Gradient estimators

// Per-sample coefficients of d log|psi| and d phase in
// dE = 2 sum_k w_k Re[(E_k - E)^* (d log|psi_k| + i d phase_k)].
struct GradientCoefficients {
  std::vector<double> amp;
  std::vector<double> phase;
};

inline GradientCoefficients gradient_coefficients(const std::vector<std::complex<double>>& eloc,
                                                  const std::vector<double>& weights) {
  if (eloc.size() != weights.size()) throw std::invalid_argument("gradient: weight count mismatch");
  double total = 0.0;
  for (double w : weights) total += w;
  std::complex<double> mean = 0.0;
  for (std::size_t k = 0; k < eloc.size(); ++k) mean += weights[k] / total * eloc[k];
  GradientCoefficients c;
  for (std::size_t k = 0; k < eloc.size(); ++k) {
    const std::complex<double> d = eloc[k] - mean;
    c.amp.push_back(2.0 * weights[k] / total * d.real());
    c.phase.push_back(2.0 * weights[k] / total * d.imag());
  }
  return c;
}

inline GradientCoefficients gradient_coefficients(const std::vector<std::complex<double>>& eloc) {
  return gradient_coefficients(eloc, std::vector<double>(eloc.size(), 1.0));
}

// 2 Re[<E_loc^* O> - E^* <O>] from explicit per-sample log-derivatives
// O = d log|psi| + i d phase. d_phase may be empty for real ansatzes.
inline Vec gradient_estimate(const std::vector<std::complex<double>>& eloc, const std::vector<Vec>& d_amp,
                             const std::vector<Vec>& d_phase, const std::vector<double>& weights) {
  if (eloc.empty()) throw std::invalid_argument("gradient_estimate: empty batch");
  if (d_amp.size() != eloc.size() || (!d_phase.empty() && d_phase.size() != eloc.size()) ||
      weights.size() != eloc.size()) {
    throw std::invalid_argument("gradient_estimate: batch size mismatch");
  }
  const Eigen::Index p = d_amp.front().size();
  double total = 0.0;
  for (double w : weights) total += w;
  std::complex<double> e_mean = 0.0;
  Eigen::VectorXcd o_mean = Eigen::VectorXcd::Zero(p);
  Eigen::VectorXcd eo_mean = Eigen::VectorXcd::Zero(p);
  for (std::size_t k = 0; k < eloc.size(); ++k) {
    if (d_amp[k].size() != p || (!d_phase.empty() && d_phase[k].size() != p)) {
      throw std::invalid_argument("gradient_estimate: parameter count mismatch");
    }
    const double w = weights[k] / total;
    Eigen::VectorXcd o = d_amp[k].cast<std::complex<double>>();
    if (!d_phase.empty()) o += std::complex<double>(0.0, 1.0) * d_phase[k].cast<std::complex<double>>();
    e_mean += w * eloc[k];
    o_mean += w * o;
    eo_mean += w * std::conj(eloc[k]) * o;
  }
  return 2.0 * (eo_mean - std::conj(e_mean) * o_mean).real();
}

inline Vec gradient_estimate(const std::vector<std::complex<double>>& eloc, const std::vector<Vec>& d_amp,
                             const std::vector<Vec>& d_phase) {
  return gradient_estimate(eloc, d_amp, d_phase, std::vector<double>(eloc.size(), 1.0));
}

// Same estimator with one backward pass per sample through the tape.
// Per-sample partial sums are added in sample order, so the result does not
// depend on the thread count.
inline Vec fused_gradient(const AnsatzConfig& cfg, const ParameterStore& params,
                          const std::vector<SpinConfiguration>& samples, const GradientCoefficients& coeff,
                          unsigned threads = 1) {
  const auto p = static_cast<Eigen::Index>(params.size());
  std::vector<Vec> parts(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t k) {
    TapedNetwork taped(cfg, params);
    parts[k] = Vec::Zero(p);
    taped.accumulate(samples[k], coeff.amp[k], coeff.phase[k], parts[k]);
  });
  Vec g = Vec::Zero(p);
  for (const Vec& part : parts) g += part;
  return g;
}

// ---------------------------------------------------------------------------
// Optimizers

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 0.95;      // lr(t) = lr * decay^(t / decay_steps)
  double decay_steps = 100;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("adam: betas must be in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be > 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("adam: decay must be in (0, 1]");
    if (!(decay_steps > 0.0)) throw std::invalid_argument("adam: decay_steps must be > 0");
  }
};

class Adam {
 public:
  Adam(AdamOptions opt, Eigen::Index size) : opt_(opt), m_(Vec::Zero(size)), v_(Vec::Zero(size)) { opt_.validate(); }

  double learning_rate(long step) const {
    return opt_.lr * std::pow(opt_.decay, static_cast<double>(step) / opt_.decay_steps);
  }

  // Updates theta[i] where mask[i] is true (all entries for an empty mask).
  void step(Vec& theta, const Vec& grad, const std::vector<bool>& mask = {}) {
    if (grad.size() != theta.size() || theta.size() != m_.size()) throw std::invalid_argument("adam: size mismatch");
    const double lr = learning_rate(t_);
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grad[i];
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grad[i] * grad[i];
      theta[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + opt_.eps);
    }
  }

  long steps() const { return t_; }
  const Vec& first_moment() const { return m_; }
  const Vec& second_moment() const { return v_; }

 private:
  AdamOptions opt_;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

// x <- exp_x(-alpha * (1 - c|x|^2)^2 / 4 * grad), then projected.
inline Vec rsgd_step(const Vec& x, const Vec& grad, double alpha, const geo::Ball& ball) {
  if (x.size() != grad.size()) throw std::invalid_argument("rsgd: size mismatch");
  if (!(alpha > 0.0)) throw std::invalid_argument("rsgd: alpha must be > 0");
  const double scale = 1.0 - ball.c * x.squaredNorm();
  const Vec riemannian = 0.25 * scale * scale * grad;
  return geo::to_ball(geo::expmap(x, Vec(-alpha * riemannian), ball), ball);
}

inline geo::BallPoint rsgd_step(const geo::BallPoint& x, const Vec& grad, double alpha, double eps = 1e-5) {
  return {rsgd_step(x.coords(), grad, alpha, geo::Ball{x.c(), eps}), x.c()};
}

enum class ClipMode { None, Value, Norm };

inline std::string_view clip_name(ClipMode m) {
  switch (m) {
    case ClipMode::None: return "none";
    case ClipMode::Value: return "value";
    case ClipMode::Norm: return "norm";
  }
  throw std::invalid_argument("unknown clip mode");
}

inline ClipMode parse_clip_mode(std::string_view s) {
  if (s == "none") return ClipMode::None;
  if (s == "value") return ClipMode::Value;
  if (s == "norm") return ClipMode::Norm;
  throw std::invalid_argument("unknown clip mode '" + std::string(s) + "'");
}

inline Vec clip_gradients(const Vec& grad, ClipMode mode, double limit) {
  if (!grad.allFinite()) throw NumericalError("clip_gradients: non-finite gradient");
  switch (mode) {
    case ClipMode::None: return grad;
    case ClipMode::Value:
      if (!(limit > 0.0)) throw std::invalid_argument("clip: value must be > 0");
      return grad.cwiseMax(-limit).cwiseMin(limit);
    case ClipMode::Norm: {
      if (!(limit > 0.0)) throw std::invalid_argument("clip: norm must be > 0");
      const double n = grad.norm();
      return n > limit ? Vec(grad * (limit / n)) : grad;
    }
  }
  return grad;
}

// Accepts a model when its mean beats the best so far and its variance is
// below the tolerance.
class BestModelGate {
 public:
  explicit BestModelGate(double tolerance) : tolerance_(tolerance) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("BestModelGate: tolerance must be > 0");
  }

  bool offer(double mean, double variance) {
    if (!(mean < best_) || !(variance < tolerance_)) return false;
    best_ = mean;
    return true;
  }

  double best() const { return best_; }
  bool has_best() const { return std::isfinite(best_); }
  double tolerance() const { return tolerance_; }

 private:
  double tolerance_;
  double best_ = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Training and inference

struct TrainOptions {
  int epochs = 120;
  int batch_size = 50;
  std::uint64_t seed = 1;
  AdamOptions adam;
  double rsgd_lr = 1e-2;
  ClipMode clip = ClipMode::None;
  double clip_value = 1.0;
  double variance_tolerance = 1.0;
  unsigned threads = 1;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
    adam.validate();
    if (!(rsgd_lr > 0.0)) throw std::invalid_argument("train: rsgd_lr must be > 0");
    if (clip != ClipMode::None && !(clip_value > 0.0)) throw std::invalid_argument("train: clip_value must be > 0");
    if (!(variance_tolerance > 0.0)) throw std::invalid_argument("train: variance_tolerance must be > 0");
  }
};

struct TrainingRecord {
  int epoch = 0;
  std::complex<double> mean;
  double variance = 0.0;
  double stderr_ = 0.0;
  bool best_saved = false;
  double elapsed_s = 0.0;
  double grad_norm = 0.0;
  ClipMode clip = ClipMode::None;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ParameterStore best;
  ParameterStore last;
  std::vector<TrainingRecord> history;
  int best_epoch = -1;  // -1 when no epoch passed the gate
  double best_mean = std::numeric_limits<double>::infinity();
};

// Called after each epoch; `params` are the parameters the record was
// measured on.
using EpochCallback = std::function<void(const TrainingRecord&, const ParameterStore& params)>;

inline constexpr std::uint64_t kInferenceStream = 0x696e666572ULL;

inline std::vector<bool> euclidean_mask(const ParameterStore& p) {
  std::vector<bool> mask;
  for (const Tensor& t : p.tensors()) mask.insert(mask.end(), t.size(), t.manifold == Manifold::Euclidean);
  return mask;
}

inline std::string numerical_diagnostic(std::string_view what, int epoch, const ParameterStore& p) {
  std::ostringstream os;
  os << what << " at epoch " << epoch << " (parameter norm " << p.flatten().norm() << ")";
  return os.str();
}

inline TrainResult train(const AnsatzConfig& cfg, const HamiltonianSpec& spec, const TrainOptions& opt,
                         ParameterStore params, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  opt.validate();
  if (cfg.n != spec.n) throw std::invalid_argument("train: ansatz and Hamiltonian sizes differ");
  const Hamiltonian h(spec);
  const geo::Ball ball{cfg.c, cfg.ball_eps};
  Adam adam(opt.adam, static_cast<Eigen::Index>(params.size()));
  const std::vector<bool> mask = euclidean_mask(params);
  BestModelGate gate(opt.variance_tolerance);
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const Network net(cfg, params);
    const auto batch = sample_batch(net, static_cast<std::size_t>(opt.batch_size), opt.seed,
                                    static_cast<std::uint64_t>(epoch), opt.threads);
    std::vector<SpinConfiguration> configs;
    configs.reserve(batch.size());
    for (const auto& s : batch) configs.push_back(s.spins);
    const auto eloc = local_energies(configs, h, net, opt.threads);
    const EnergyStats stats = energy_statistics(eloc);
    if (!std::isfinite(stats.mean.real()) || !std::isfinite(stats.mean.imag()) || !std::isfinite(stats.variance)) {
      throw NumericalError(numerical_diagnostic("non-finite energy", epoch, params));
    }

    TrainingRecord rec;
    rec.epoch = epoch;
    rec.mean = stats.mean;
    rec.variance = stats.variance;
    rec.stderr_ = stats.stderr_;
    rec.clip = opt.clip;
    rec.seed = opt.seed;
    rec.best_saved = gate.offer(stats.mean.real(), stats.variance);
    if (rec.best_saved) {
      result.best = params;
      result.best_epoch = epoch;
      result.best_mean = stats.mean.real();
    }

    const Vec raw = fused_gradient(cfg, params, configs, gradient_coefficients(eloc), opt.threads);
    if (!raw.allFinite()) throw NumericalError(numerical_diagnostic("non-finite gradient", epoch, params));
    rec.grad_norm = raw.norm();
    const Vec grad = clip_gradients(raw, opt.clip, opt.clip_value);

    ParameterStore measured = params;
    Vec theta = params.flatten();
    adam.step(theta, grad, mask);
    Eigen::Index off = 0;
    for (const Tensor& t : params.tensors()) {
      const auto len = static_cast<Eigen::Index>(t.size());
      if (t.manifold == Manifold::Hyperbolic) {
        theta.segment(off, len) = rsgd_step(Vec(theta.segment(off, len)), Vec(grad.segment(off, len)), opt.rsgd_lr, ball);
      }
      off += len;
    }
    params.assign(theta);
    if (!params.all_finite()) throw NumericalError(numerical_diagnostic("non-finite parameters", epoch, measured));

    rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec, measured);
  }
  result.last = params;
  if (result.best_epoch < 0) result.best = params;
  return result;
}

struct InferenceResult {
  EnergyStats stats;
  std::size_t samples = 0;
};

inline InferenceResult infer(const AnsatzConfig& cfg, const ParameterStore& params, const HamiltonianSpec& spec,
                             std::size_t n_samples, std::uint64_t seed, unsigned threads = 1) {
  if (n_samples == 0) throw std::invalid_argument("infer: need at least one sample");
  if (cfg.n != spec.n) throw std::invalid_argument("infer: ansatz and Hamiltonian sizes differ");
  const Network net(cfg, params);
  const Hamiltonian h(spec);
  const auto batch = sample_batch(net, n_samples, seed, kInferenceStream, threads);
  std::vector<SpinConfiguration> configs;
  configs.reserve(batch.size());
  for (const auto& s : batch) configs.push_back(s.spins);
  InferenceResult r;
  r.stats = energy_statistics(local_energies(configs, h, net, threads));
  r.samples = n_samples;
  if (!std::isfinite(r.stats.mean.real())) throw NumericalError("infer: non-finite energy");
  return r;
}

// "-25.0838 (0.0030)" style.
inline std::string format_energy(double mean, double stderr_value, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << mean << " (" << stderr_value << ")";
  return os.str();
}

}  // namespace hypnqs
