// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.

#include "hypnqs/autodiff.hpp"
#include "hypnqs/finite_diff.hpp"
#include "hypnqs/geometry.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace {

using hypnqs::Vec;
namespace ad = hypnqs::ad;

Vec to_vec(std::span<const double> s) {
  return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Runs a generic scalar function on the tape and returns its gradient.
template <class F>
Vec tape_gradient(F&& f, const Vec& theta) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(theta);
  const ad::Var root = f(x);
  tape.backward(root);
  return to_vec(tape.grad(x));
}

template <class F, class G>
double fd_error(F plain, G taped, const Vec& theta) {
  auto grad = [&](const Vec& t) { return tape_gradient(taped, t); };
  return hypnqs::finite_diff_check(plain, grad, theta).max_rel_error;
}

TEST(Autodiff, SquareAtThree) {
  ad::Tape tape;
  const ad::Var t = tape.leaf(Vec::Constant(1, 3.0));
  tape.backward(t * t);
  EXPECT_DOUBLE_EQ(tape.grad(t)[0], 6.0);
}

TEST(Autodiff, SoftmaxOfZerosIsUniform) {
  ad::Tape tape;
  const ad::Var y = ad::softmax(tape.leaf(Vec::Zero(2)));
  EXPECT_DOUBLE_EQ(y.values()[0], 0.5);
  EXPECT_DOUBLE_EQ(y.values()[1], 0.5);
}

TEST(Autodiff, SoftsignOfOne) {
  ad::Tape tape;
  EXPECT_DOUBLE_EQ(ad::softsign(tape.leaf(Vec::Ones(1))).value(), 0.5);
}

TEST(Autodiff, TanhSlopeAtZero) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Vec::Zero(1));
  tape.backward(ad::tanh(x));
  EXPECT_DOUBLE_EQ(tape.grad(x)[0], 1.0);
}

struct UnaryCase {
  std::string name;
  double lo;
  double hi;
  std::function<double(const Vec&)> plain;
  std::function<ad::Var(const ad::Var&)> taped;
};

#define HYPNQS_UNARY_CASE(NAME, LO, HI, EXPR)                                            \
  UnaryCase {                                                                           \
    NAME, LO, HI, [](const Vec& x) { using namespace hypnqs; return dot(EXPR, x); },    \
        [](const ad::Var& x) { using namespace hypnqs::ad; return dot(EXPR, x); }       \
  }

TEST(Autodiff, ElementaryOpsMatchFiniteDifferences) {
  const std::vector<UnaryCase> cases = {
      HYPNQS_UNARY_CASE("tanh", -2.0, 2.0, tanh(x)),
      HYPNQS_UNARY_CASE("atanh", -0.9, 0.9, atanh(x)),
      HYPNQS_UNARY_CASE("sigmoid", -3.0, 3.0, sigmoid(x)),
      HYPNQS_UNARY_CASE("softmax", -2.0, 2.0, softmax(x)),
      HYPNQS_UNARY_CASE("softsign", 0.1, 2.0, softsign(x)),
      HYPNQS_UNARY_CASE("softsign_neg", -2.0, -0.1, softsign(x)),
      HYPNQS_UNARY_CASE("log", 0.2, 3.0, log(x)),
      HYPNQS_UNARY_CASE("exp", -1.0, 1.0, exp(x)),
      HYPNQS_UNARY_CASE("scale", -1.0, 1.0, (2.5 * x)),
      HYPNQS_UNARY_CASE("neg", -1.0, 1.0, (-x)),
      HYPNQS_UNARY_CASE("norm_scale", -1.0, 1.0, (norm(x) * x)),
      HYPNQS_UNARY_CASE("sqnorm_div", 0.5, 1.0, (x / sqnorm(x))),
      HYPNQS_UNARY_CASE("clamp", -0.5, 0.5, (clamp(sqnorm(x), -1.0, 1.0) * x)),
      HYPNQS_UNARY_CASE("hadamard", -1.0, 1.0, hadamard(x, tanh(x))),
  };
  std::mt19937_64 rng(7);
  for (const auto& c : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vec theta = random_vec(rng, 4, c.lo, c.hi);
      EXPECT_LT(fd_error(c.plain, c.taped, theta), 1e-7) << c.name;
      ad::Tape tape;
      const ad::Var root = c.taped(tape.leaf(theta));
      EXPECT_NEAR(root.value(), c.plain(theta), 1e-12) << c.name;
    }
  }
}

TEST(Autodiff, ShiftAndSqrtGradients) {
  std::mt19937_64 rng(9);
  auto plain = [](const Vec& x) {
    return std::sqrt(x.squaredNorm()) * (x.array() + 0.75).sum() + (1.0 - x.array()).square().sum();
  };
  auto taped = [](const ad::Var& x) {
    const ad::Var ones = x.tape()->constant(Vec::Ones(static_cast<Eigen::Index>(x.size())));
    const ad::Var d = 1.0 - x;
    return ad::sqrt(ad::sqnorm(x)) * ad::dot(x + 0.75, ones) + ad::dot(d, d);
  };
  for (int trial = 0; trial < 5; ++trial) {
    const Vec theta = random_vec(rng, 4, 0.2, 1.0);
    EXPECT_LT(fd_error(plain, taped, theta), 1e-8);
  }
}

TEST(Autodiff, MatvecAndConcatGradients) {
  std::mt19937_64 rng(11);
  const Vec m = random_vec(rng, 6, -1.0, 1.0);
  const Vec x = random_vec(rng, 3, -1.0, 1.0);
  ad::Tape tape;
  const ad::Var mv = tape.leaf({m.data(), 6}, 2, 3);
  const ad::Var xv = tape.leaf(x);
  const ad::Var y = ad::concat(ad::matvec(mv, xv), xv);
  const ad::Var root = ad::sqnorm(ad::tanh(y));
  tape.backward(root);

  auto f = [&](const Vec& theta) {
    hypnqs::RowMat mm = Eigen::Map<const hypnqs::RowMat>(theta.data(), 2, 3);
    const Vec xx = theta.tail(3);
    return hypnqs::sqnorm(hypnqs::tanh(hypnqs::concat(hypnqs::matvec(mm, xx), xx)));
  };
  Vec theta(9);
  theta << m, x;
  const Vec numeric = hypnqs::numeric_gradient(f, theta);
  Vec analytic(9);
  analytic << to_vec(tape.grad(mv)), to_vec(tape.grad(xv));
  for (Eigen::Index i = 0; i < 9; ++i) {
    EXPECT_LT(hypnqs::relative_error(analytic[i], numeric[i]), 1e-8) << i;
  }
}

TEST(Autodiff, GradientIsLinearInTheRoot) {
  std::mt19937_64 rng(3);
  const Vec theta = random_vec(rng, 5, -1.0, 1.0);
  auto f = [](const auto& x) { using namespace hypnqs; return dot(tanh(x), x); };
  auto g = [](const auto& x) { using namespace hypnqs; return sqnorm(sigmoid(x)); };
  const Vec sum_grad = tape_gradient([&](const ad::Var& x) { return f(x) + g(x); }, theta);
  const Vec separate = tape_gradient(f, theta) + tape_gradient(g, theta);
  EXPECT_LT((sum_grad - separate).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Autodiff, BackwardTwiceIsIdentical) {
  std::mt19937_64 rng(5);
  ad::Tape tape;
  const ad::Var x = tape.leaf(random_vec(rng, 4, -1.0, 1.0));
  const ad::Var root = ad::dot(ad::softmax(x), ad::tanh(x));
  tape.backward(root);
  const Vec first = to_vec(tape.grad(x));
  tape.backward(root);
  EXPECT_EQ(first, to_vec(tape.grad(x)));
}

TEST(Autodiff, NonScalarRootRejected) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Vec::Ones(3));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
}

TEST(Autodiff, DomainErrorsNameTheOp) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Vec::Constant(1, -1.0));
  try {
    static_cast<void>(ad::log(x));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("ad::log"), std::string::npos);
  }
  EXPECT_THROW(static_cast<void>(ad::atanh(tape.leaf(Vec::Constant(1, 1.0)))), std::domain_error);
  EXPECT_THROW(static_cast<void>(ad::sqrt(x)), std::domain_error);
  EXPECT_THROW(static_cast<void>(x / tape.zeros(1)), std::domain_error);
}

TEST(Autodiff, ShapeErrors) {
  ad::Tape tape;
  const ad::Var a = tape.leaf(Vec::Ones(2));
  const ad::Var b = tape.leaf(Vec::Ones(3));
  EXPECT_THROW(static_cast<void>(a + b), std::invalid_argument);
  EXPECT_THROW(static_cast<void>(ad::dot(a, b)), std::invalid_argument);
  EXPECT_THROW(static_cast<void>(ad::matvec(tape.leaf(std::vector<double>(6, 1.0), 3, 2), b)), std::invalid_argument);
  ad::Tape other;
  EXPECT_THROW(static_cast<void>(a + other.leaf(Vec::Ones(2))), std::invalid_argument);
}

TEST(Autodiff, ProjectionIsStraightThrough) {
  ad::Tape tape;
  Vec v(2);
  v << 3.0, 4.0;
  const ad::Var x = tape.leaf(v);
  const ad::Var p = ad::project(x, 1.0, 1e-5);
  EXPECT_NEAR(std::hypot(p.values()[0], p.values()[1]), 1.0 - 1e-5, 1e-15);
  tape.backward(ad::dot(p, tape.constant(Vec::Ones(2))));
  EXPECT_EQ(tape.grad(x)[0], 1.0);
  EXPECT_EQ(tape.grad(x)[1], 1.0);
}

TEST(Autodiff, NormSubgradientAtOriginIsZero) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Vec::Zero(3));
  tape.backward(ad::norm(x));
  for (double g : tape.grad(x)) EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, DeadBranchesReceiveNoGradient) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Vec::Ones(2));
  const ad::Var unused = tape.leaf(Vec::Ones(2));
  static_cast<void>(ad::exp(unused));
  tape.backward(ad::sqnorm(x));
  for (double g : tape.grad(unused)) EXPECT_EQ(g, 0.0);
}

TEST(FiniteDiff, QuadraticIsExact) {
  Vec a(3);
  a << 1.0, -2.0, 0.5;
  auto f = [&](const Vec& t) { return t.dot(a) + 0.5 * t.squaredNorm(); };
  auto g = [&](const Vec& t) { return Vec(a + t); };
  Vec theta(3);
  theta << 0.3, 0.7, -1.1;
  EXPECT_LT(hypnqs::finite_diff_check(f, g, theta).max_rel_error, 1e-10);
}

TEST(FiniteDiff, ReportsWorstComponent) {
  auto f = [](const Vec& t) { return t.squaredNorm(); };
  auto g = [](const Vec& t) {
    Vec out = 2.0 * t;
    out[1] += 1.0;
    return out;
  };
  Vec theta = Vec::Ones(3);
  const auto report = hypnqs::finite_diff_check(f, g, theta);
  EXPECT_EQ(report.worst_index, 1);
  EXPECT_NEAR(report.max_rel_error, 1.0 / 3.0, 1e-8);
}

TEST(FiniteDiff, RecurrentStepComposite) {
  // theta = [W (3x3), U (3x2), b (3), h0 (3)], input one-hot (1, 0).
  std::mt19937_64 rng(21);
  const Vec theta = random_vec(rng, 9 + 6 + 3 + 3, -0.8, 0.8);
  auto step = [](const auto& w, const auto& u, const auto& b, const auto& h, const auto& x) {
    using namespace hypnqs;
    return tanh(matvec(w, h) + matvec(u, x) + b);
  };
  Vec onehot(2);
  onehot << 1.0, 0.0;
  auto plain = [&](const Vec& t) {
    hypnqs::RowMat w = Eigen::Map<const hypnqs::RowMat>(t.data(), 3, 3);
    hypnqs::RowMat u = Eigen::Map<const hypnqs::RowMat>(t.data() + 9, 3, 2);
    const Vec h = step(w, u, Vec(t.segment(15, 3)), Vec(t.segment(18, 3)), onehot);
    return hypnqs::sqnorm(step(w, u, Vec(t.segment(15, 3)), h, onehot));
  };
  auto grad = [&](const Vec& t) {
    ad::Tape tape;
    const ad::Var w = tape.leaf({t.data(), 9}, 3, 3);
    const ad::Var u = tape.leaf({t.data() + 9, 6}, 3, 2);
    const ad::Var b = tape.leaf({t.data() + 15, 3}, 3);
    const ad::Var h0 = tape.leaf({t.data() + 18, 3}, 3);
    const ad::Var x = tape.constant(onehot);
    const ad::Var h = step(w, u, b, h0, x);
    tape.backward(ad::sqnorm(step(w, u, b, h, x)));
    Vec out(21);
    out << to_vec(tape.grad(w)), to_vec(tape.grad(u)), to_vec(tape.grad(b)), to_vec(tape.grad(h0));
    return out;
  };
  EXPECT_LT(hypnqs::finite_diff_check(plain, grad, theta).max_rel_error, 1e-6);
}

TEST(FiniteDiff, MobiusAddComposite) {
  std::mt19937_64 rng(8);
  const hypnqs::geo::Ball ball{};
  for (int trial = 0; trial < 10; ++trial) {
    Vec theta = random_vec(rng, 6, -0.4, 0.4);
    auto f = [&](const auto& x, const auto& y) {
      using namespace hypnqs;
      const auto s = geo::mobius_add(x, y, ball);
      return dot(geo::log0(s, ball), s);
    };
    auto plain = [&](const Vec& t) { return f(Vec(t.head(3)), Vec(t.tail(3))); };
    auto grad = [&](const Vec& t) {
      ad::Tape tape;
      const ad::Var x = tape.leaf({t.data(), 3}, 3);
      const ad::Var y = tape.leaf({t.data() + 3, 3}, 3);
      tape.backward(f(x, y));
      Vec out(6);
      out << to_vec(tape.grad(x)), to_vec(tape.grad(y));
      return out;
    };
    EXPECT_LT(hypnqs::finite_diff_check(plain, grad, theta).max_rel_error, 1e-6);
  }
}

}  // namespace
