// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Reverse-mode differentiation on a linear tape of dense tensor nodes.
//
// A Tape owns every node value in a single arena. Var is a (tape, index)
// handle and is only valid while its tape is alive. Nodes are appended in
// evaluation order, so the arena order is already a topological order and
// backward() is a single reverse sweep.
//
// Elementwise binary ops broadcast when one operand has exactly one element.

#pragma once

#include "hypnqs/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypnqs::ad {

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,
  Shift,
  MatVec,
  Concat,
  Dot,
  SqNorm,
  Norm,
  Sum,
  Tanh,
  Atanh,
  Sigmoid,
  Softmax,
  Softsign,
  Log,
  Exp,
  Sqrt,
  Clamp,
  Project,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::MatVec: return "matvec";
    case Op::Concat: return "concat";
    case Op::Dot: return "dot";
    case Op::SqNorm: return "sqnorm";
    case Op::Norm: return "norm";
    case Op::Sum: return "sum";
    case Op::Tanh: return "tanh";
    case Op::Atanh: return "atanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softmax: return "softmax";
    case Op::Softsign: return "softsign";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Clamp: return "clamp";
    case Op::Project: return "project";
  }
  return "unknown";
}

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }

  std::size_t size() const;
  std::span<const double> values() const;
  // First component; the whole value for scalars.
  double value() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A tracked input; gradients are read back with grad().
  Var leaf(std::span<const double> data, int rows, int cols = 1) {
    return input(Op::Leaf, data, rows, cols);
  }
  Var leaf(const Vec& v) { return leaf({v.data(), static_cast<std::size_t>(v.size())}, static_cast<int>(v.size())); }

  Var constant(std::span<const double> data, int rows, int cols = 1) {
    return input(Op::Constant, data, rows, cols);
  }
  Var constant(const Vec& v) {
    return constant({v.data(), static_cast<std::size_t>(v.size())}, static_cast<int>(v.size()));
  }
  Var constant(double x) { return constant({&x, 1}, 1); }
  Var zeros(int n) {
    const int id = push(Op::Constant, -1, -1, n, 1);
    return {this, id};
  }

  std::size_t node_count() const { return nodes_.size(); }
  Op op(const Var& v) const { return nodes_[check(v)].op; }
  int rows(const Var& v) const { return nodes_[check(v)].rows; }
  int cols(const Var& v) const { return nodes_[check(v)].cols; }
  std::size_t size(const Var& v) const { return nodes_[check(v)].size; }

  std::span<const double> value(const Var& v) const {
    const Node& n = nodes_[check(v)];
    return {values_.data() + n.off, n.size};
  }

  // Gradient of the last backward() root with respect to v.
  std::span<const double> grad(const Var& v) const {
    const Node& n = nodes_[check(v)];
    if (grads_.size() < values_.size()) throw std::logic_error("ad::grad: backward() has not run");
    return {grads_.data() + n.off, n.size};
  }

  // Propagates d(root)/d(node) to every node recorded before root. Can be run
  // repeatedly with different roots; each call starts from zero.
  void backward(const Var& root) {
    const int r = check(root);
    if (nodes_[r].size != 1) {
      throw std::invalid_argument("ad::backward: root must be scalar, has " +
                                  std::to_string(nodes_[r].size) + " elements");
    }
    grads_.assign(values_.size(), 0.0);
    live_.assign(nodes_.size(), 0);
    grads_[nodes_[r].off] = 1.0;
    live_[r] = 1;
    for (int i = r; i >= 0; --i) {
      if (live_[i]) propagate(i);
    }
  }

  void clear() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    live_.clear();
  }

  // ---- op construction (used by the free functions below) ----

  Var unary(Op op, const Var& a, double p0 = 0.0, double p1 = 0.0) {
    const int ia = check(a);
    const Node na = nodes_[ia];
    const int id = push(op, ia, -1, na.rows, na.cols, p0, p1);
    const double* x = values_.data() + na.off;
    double* y = values_.data() + nodes_[id].off;
    const std::size_t n = na.size;
    switch (op) {
      case Op::Neg:
        for (std::size_t i = 0; i < n; ++i) y[i] = -x[i];
        break;
      case Op::Scale:
        for (std::size_t i = 0; i < n; ++i) y[i] = p0 * x[i];
        break;
      case Op::Shift:
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + p0;
        break;
      case Op::Tanh:
        for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
        break;
      case Op::Atanh:
        for (std::size_t i = 0; i < n; ++i) {
          if (!(std::abs(x[i]) < 1.0)) domain(op, "argument outside (-1, 1)");
          y[i] = std::atanh(x[i]);
        }
        break;
      case Op::Sigmoid:
        for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
        break;
      case Op::Softsign:
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / (1.0 + std::abs(x[i]));
        break;
      case Op::Softmax: {
        double shift = x[0];
        for (std::size_t i = 1; i < n; ++i) shift = std::max(shift, x[i]);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += (y[i] = std::exp(x[i] - shift));
        for (std::size_t i = 0; i < n; ++i) y[i] /= total;
        break;
      }
      case Op::Log:
        for (std::size_t i = 0; i < n; ++i) {
          if (!(x[i] > 0.0)) domain(op, "non-positive input");
          y[i] = std::log(x[i]);
        }
        break;
      case Op::Exp:
        for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
        break;
      case Op::Sqrt:
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i] < 0.0) domain(op, "negative input");
          y[i] = std::sqrt(x[i]);
        }
        break;
      case Op::Clamp:
        for (std::size_t i = 0; i < n; ++i) y[i] = std::clamp(x[i], p0, p1);
        break;
      case Op::Project:
        for (std::size_t i = 0; i < n; ++i) {
          if (!std::isfinite(x[i])) domain(op, "non-finite input");
          y[i] = x[i];
        }
        project_values(y, n, p0, p1);
        break;
      default:
        throw std::logic_error(std::string("ad::unary: not a unary op: ") + op_name(op));
    }
    return {this, id};
  }

  Var reduce(Op op, const Var& a) {
    const int ia = check(a);
    const Node na = nodes_[ia];
    const int id = push(op, ia, -1, 1, 1);
    const double* x = values_.data() + na.off;
    double acc = 0.0;
    switch (op) {
      case Op::Sum:
        for (std::size_t i = 0; i < na.size; ++i) acc += x[i];
        break;
      case Op::SqNorm:
        for (std::size_t i = 0; i < na.size; ++i) acc += x[i] * x[i];
        break;
      case Op::Norm:
        for (std::size_t i = 0; i < na.size; ++i) acc += x[i] * x[i];
        acc = std::sqrt(acc);
        break;
      default:
        throw std::logic_error(std::string("ad::reduce: not a reduction: ") + op_name(op));
    }
    values_[nodes_[id].off] = acc;
    return {this, id};
  }

  Var binary(Op op, const Var& a, const Var& b) {
    const int ia = check(a);
    const int ib = check(b);
    if (a.tape() != b.tape()) throw std::invalid_argument("ad: operands live on different tapes");
    const Node na = nodes_[ia];
    const Node nb = nodes_[ib];
    switch (op) {
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        if (na.size != nb.size && na.size != 1 && nb.size != 1) shape(op, na, nb);
        const Node& big = na.size >= nb.size ? na : nb;
        const int id = push(op, ia, ib, big.rows, big.cols);
        const double* x = values_.data() + na.off;
        const double* w = values_.data() + nb.off;
        double* y = values_.data() + nodes_[id].off;
        const std::size_t n = nodes_[id].size;
        const std::size_t sx = na.size == 1 ? 0 : 1;
        const std::size_t sw = nb.size == 1 ? 0 : 1;
        for (std::size_t i = 0; i < n; ++i) {
          const double u = x[i * sx];
          const double v = w[i * sw];
          switch (op) {
            case Op::Add: y[i] = u + v; break;
            case Op::Sub: y[i] = u - v; break;
            case Op::Mul: y[i] = u * v; break;
            default:
              if (v == 0.0) domain(op, "division by zero");
              y[i] = u / v;
          }
        }
        return {this, id};
      }
      case Op::MatVec: {
        if (na.cols != static_cast<int>(nb.size)) shape(op, na, nb);
        const int id = push(op, ia, ib, na.rows, 1);
        const double* m = values_.data() + na.off;
        const double* x = values_.data() + nb.off;
        double* y = values_.data() + nodes_[id].off;
        for (int r = 0; r < na.rows; ++r) {
          double acc = 0.0;
          const double* row = m + static_cast<std::size_t>(r) * na.cols;
          for (int c = 0; c < na.cols; ++c) acc += row[c] * x[c];
          y[r] = acc;
        }
        return {this, id};
      }
      case Op::Concat: {
        const int id = push(op, ia, ib, static_cast<int>(na.size + nb.size), 1);
        const double* x = values_.data() + na.off;
        const double* w = values_.data() + nb.off;
        double* y = values_.data() + nodes_[id].off;
        std::copy(x, x + na.size, y);
        std::copy(w, w + nb.size, y + na.size);
        return {this, id};
      }
      case Op::Dot: {
        if (na.size != nb.size) shape(op, na, nb);
        const int id = push(op, ia, ib, 1, 1);
        const double* x = values_.data() + na.off;
        const double* w = values_.data() + nb.off;
        double acc = 0.0;
        for (std::size_t i = 0; i < na.size; ++i) acc += x[i] * w[i];
        values_[nodes_[id].off] = acc;
        return {this, id};
      }
      default:
        throw std::logic_error(std::string("ad::binary: not a binary op: ") + op_name(op));
    }
  }

 private:
  struct Node {
    Op op;
    int a;
    int b;
    int rows;
    int cols;
    std::size_t off;
    std::size_t size;
    double p0;
    double p1;
  };

  int check(const Var& v) const {
    if (v.tape() != this || v.id() < 0 || v.id() >= static_cast<int>(nodes_.size())) {
      throw std::invalid_argument("ad: variable does not belong to this tape");
    }
    return v.id();
  }

  int push(Op op, int a, int b, int rows, int cols, double p0 = 0.0, double p1 = 0.0) {
    const std::size_t size = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    nodes_.push_back(Node{op, a, b, rows, cols, values_.size(), size, p0, p1});
    values_.resize(values_.size() + size, 0.0);
    return static_cast<int>(nodes_.size() - 1);
  }

  Var input(Op op, std::span<const double> data, int rows, int cols) {
    if (data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      throw std::invalid_argument("ad::input: data size does not match shape");
    }
    const int id = push(op, -1, -1, rows, cols);
    std::copy(data.begin(), data.end(), values_.begin() + static_cast<std::ptrdiff_t>(nodes_[id].off));
    return {this, id};
  }

  [[noreturn]] static void domain(Op op, const char* what) {
    throw std::domain_error(std::string("ad::") + op_name(op) + ": " + what);
  }
  [[noreturn]] static void shape(Op op, const Node& a, const Node& b) {
    throw std::invalid_argument(std::string("ad::") + op_name(op) + ": shape mismatch (" +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
  }

  void propagate(int i) {
    const Node n = nodes_[i];
    if (n.a < 0) return;
    const double* g = grads_.data() + n.off;
    const double* y = values_.data() + n.off;
    const Node na = nodes_[n.a];
    const double* x = values_.data() + na.off;
    double* ga = grads_.data() + na.off;
    live_[n.a] = 1;
    switch (n.op) {
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        const Node nb = nodes_[n.b];
        const double* w = values_.data() + nb.off;
        double* gb = grads_.data() + nb.off;
        live_[n.b] = 1;
        const std::size_t sx = na.size == 1 ? 0 : 1;
        const std::size_t sw = nb.size == 1 ? 0 : 1;
        for (std::size_t k = 0; k < n.size; ++k) {
          const double u = x[k * sx];
          const double v = w[k * sw];
          double da = 0.0;
          double db = 0.0;
          switch (n.op) {
            case Op::Add: da = g[k]; db = g[k]; break;
            case Op::Sub: da = g[k]; db = -g[k]; break;
            case Op::Mul: da = g[k] * v; db = g[k] * u; break;
            default: da = g[k] / v; db = -g[k] * u / (v * v);
          }
          ga[k * sx] += da;
          gb[k * sw] += db;
        }
        break;
      }
      case Op::Neg:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] -= g[k];
        break;
      case Op::Scale:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += n.p0 * g[k];
        break;
      case Op::Shift:
      case Op::Project:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += g[k];
        break;
      case Op::MatVec: {
        const Node nb = nodes_[n.b];
        const double* v = values_.data() + nb.off;
        double* gv = grads_.data() + nb.off;
        live_[n.b] = 1;
        for (int r = 0; r < na.rows; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          const double* row = x + static_cast<std::size_t>(r) * na.cols;
          double* grow = ga + static_cast<std::size_t>(r) * na.cols;
          for (int c = 0; c < na.cols; ++c) {
            grow[c] += gr * v[c];
            gv[c] += gr * row[c];
          }
        }
        break;
      }
      case Op::Concat: {
        const Node nb = nodes_[n.b];
        double* gb = grads_.data() + nb.off;
        live_[n.b] = 1;
        for (std::size_t k = 0; k < na.size; ++k) ga[k] += g[k];
        for (std::size_t k = 0; k < nb.size; ++k) gb[k] += g[na.size + k];
        break;
      }
      case Op::Dot: {
        const Node nb = nodes_[n.b];
        const double* w = values_.data() + nb.off;
        double* gb = grads_.data() + nb.off;
        live_[n.b] = 1;
        for (std::size_t k = 0; k < na.size; ++k) {
          ga[k] += g[0] * w[k];
          gb[k] += g[0] * x[k];
        }
        break;
      }
      case Op::Sum:
        for (std::size_t k = 0; k < na.size; ++k) ga[k] += g[0];
        break;
      case Op::SqNorm:
        for (std::size_t k = 0; k < na.size; ++k) ga[k] += 2.0 * g[0] * x[k];
        break;
      case Op::Norm:
        // Subgradient 0 at the origin.
        if (y[0] > 0.0) {
          for (std::size_t k = 0; k < na.size; ++k) ga[k] += g[0] * x[k] / y[0];
        }
        break;
      case Op::Tanh:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
        break;
      case Op::Atanh:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += g[k] / (1.0 - x[k] * x[k]);
        break;
      case Op::Sigmoid:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
        break;
      case Op::Softsign:
        for (std::size_t k = 0; k < n.size; ++k) {
          const double d = 1.0 + std::abs(x[k]);
          ga[k] += g[k] / (d * d);
        }
        break;
      case Op::Softmax: {
        double gy = 0.0;
        for (std::size_t k = 0; k < n.size; ++k) gy += g[k] * y[k];
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += y[k] * (g[k] - gy);
        break;
      }
      case Op::Log:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += g[k] / x[k];
        break;
      case Op::Exp:
        for (std::size_t k = 0; k < n.size; ++k) ga[k] += g[k] * y[k];
        break;
      case Op::Sqrt:
        for (std::size_t k = 0; k < n.size; ++k) {
          if (y[k] > 0.0) ga[k] += g[k] / (2.0 * y[k]);
        }
        break;
      case Op::Clamp:
        for (std::size_t k = 0; k < n.size; ++k) {
          if (x[k] > n.p0 && x[k] < n.p1) ga[k] += g[k];
        }
        break;
      case Op::Leaf:
      case Op::Constant:
        break;
    }
  }

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<char> live_;
};

inline std::size_t Var::size() const { return tape_->size(*this); }
inline std::span<const double> Var::values() const { return tape_->value(*this); }
inline double Var::value() const { return tape_->value(*this)[0]; }

inline double value_of(const Var& v) { return v.value(); }

// ---- operators ----

inline Var operator+(const Var& a, const Var& b) { return a.tape()->binary(Op::Add, a, b); }
inline Var operator-(const Var& a, const Var& b) { return a.tape()->binary(Op::Sub, a, b); }
inline Var operator*(const Var& a, const Var& b) { return a.tape()->binary(Op::Mul, a, b); }
inline Var operator/(const Var& a, const Var& b) { return a.tape()->binary(Op::Div, a, b); }
inline Var operator-(const Var& a) { return a.tape()->unary(Op::Neg, a); }

inline Var operator+(const Var& a, double s) { return a.tape()->unary(Op::Shift, a, s); }
inline Var operator+(double s, const Var& a) { return a + s; }
inline Var operator-(const Var& a, double s) { return a.tape()->unary(Op::Shift, a, -s); }
inline Var operator-(double s, const Var& a) { return (-a) + s; }
inline Var operator*(const Var& a, double s) { return a.tape()->unary(Op::Scale, a, s); }
inline Var operator*(double s, const Var& a) { return a * s; }
inline Var operator/(const Var& a, double s) { return a * (1.0 / s); }
inline Var operator/(double s, const Var& a) { return a.tape()->constant(s) / a; }

// ---- named ops (same names as the plain-double overloads) ----

inline Var dot(const Var& a, const Var& b) { return a.tape()->binary(Op::Dot, a, b); }
inline Var sqnorm(const Var& a) { return a.tape()->reduce(Op::SqNorm, a); }
inline Var norm(const Var& a) { return a.tape()->reduce(Op::Norm, a); }
inline Var sum(const Var& a) { return a.tape()->reduce(Op::Sum, a); }
inline Var matvec(const Var& m, const Var& x) { return m.tape()->binary(Op::MatVec, m, x); }
inline Var hadamard(const Var& a, const Var& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ad::hadamard: size mismatch");
  return a * b;
}
inline Var concat(const Var& a, const Var& b) { return a.tape()->binary(Op::Concat, a, b); }
inline Var tanh(const Var& a) { return a.tape()->unary(Op::Tanh, a); }
inline Var atanh(const Var& a) { return a.tape()->unary(Op::Atanh, a); }
inline Var sigmoid(const Var& a) { return a.tape()->unary(Op::Sigmoid, a); }
inline Var softmax(const Var& a) { return a.tape()->unary(Op::Softmax, a); }
inline Var softsign(const Var& a) { return a.tape()->unary(Op::Softsign, a); }
inline Var log(const Var& a) { return a.tape()->unary(Op::Log, a); }
inline Var exp(const Var& a) { return a.tape()->unary(Op::Exp, a); }
inline Var sqrt(const Var& a) { return a.tape()->unary(Op::Sqrt, a); }
inline Var clamp(const Var& a, double lo, double hi) { return a.tape()->unary(Op::Clamp, a, lo, hi); }

// Ball projection with a straight-through backward pass: the rescale only
// fires in the boundary margin and is treated as identity for gradients.
inline Var project(const Var& a, double c, double eps) { return a.tape()->unary(Op::Project, a, c, eps); }

inline Var zeros_like(const Var& like, Eigen::Index n) { return like.tape()->zeros(static_cast<int>(n)); }

}  // namespace hypnqs::ad

namespace hypnqs {

template <>
struct scalar_of<ad::Var> {
  using type = ad::Var;
};

}  // namespace hypnqs
