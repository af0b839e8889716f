#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "rfsgd/error.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

/// Nodes and weights of a Gauss rule on the half line [0, inf) for the weight
/// exp(-x^2/2)/sqrt(2 pi). Weights sum to 1/2.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace detail

/// Half-range Gauss rule with `order` nodes.
///
/// The weight is first discretised by composite Gauss-Legendre on [0, 40];
/// Lanczos with full reorthogonalisation on that discrete measure gives the
/// Jacobi matrix, whose eigenpairs give nodes and weights (Golub-Welsch).
/// Splitting at 0 makes expectations of piecewise-polynomial activations such
/// as ReLU exact up to rounding.
inline GaussRule half_range_hermite(int order) {
  if (order < 2) throw InvalidArgument("quadrature order must be >= 2, got " + std::to_string(order));
  constexpr int kPanels = 160;
  constexpr int kPanelPoints = 16;
  constexpr double kUpper = 40.0;

  std::vector<double> gx, gw;
  detail::gauss_legendre(kPanelPoints, gx, gw);
  const Index N = Index(kPanels) * kPanelPoints;
  Vector<double> pts(N), sqw(N);
  const double h = kUpper / kPanels;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int p = 0; p < kPanels; ++p)
    for (int j = 0; j < kPanelPoints; ++j) {
      const double x = h * p + 0.5 * h * (gx[j] + 1.0);
      pts(p * kPanelPoints + j) = x;
      sqw(p * kPanelPoints + j) = std::sqrt(0.5 * h * gw[j] * norm * std::exp(-0.5 * x * x));
    }
  const double mass = sqw.squaredNorm();

  Matrix<double> Q(N, order);
  Vector<double> alpha(order), beta(order);
  Vector<double> q = sqw / std::sqrt(mass);
  Vector<double> q_prev = Vector<double>::Zero(N);
  double b_prev = 0.0;
  for (int k = 0; k < order; ++k) {
    Q.col(k) = q;
    Vector<double> v = pts.cwiseProduct(q) - b_prev * q_prev;
    alpha(k) = q.dot(v);
    v -= alpha(k) * q;
    for (int pass = 0; pass < 2; ++pass) v -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * v);
    beta(k) = v.norm();
    q_prev = q;
    q = v / beta(k);
    b_prev = beta(k);
  }

  Matrix<double> J = Matrix<double>::Zero(order, order);
  J.diagonal() = alpha;
  for (int k = 0; k + 1 < order; ++k) J(k, k + 1) = J(k + 1, k) = beta(k);
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(J);

  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mass * v0 * v0;
  }
  return rule;
}

/// E[f(sd * z)] for z ~ N(0, 1), using the rule on both half lines.
template <typename F>
double gaussian_expectation(F&& f, double sd, const GaussRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    acc += rule.weights[i] * (f(sd * rule.nodes[i]) + f(-sd * rule.nodes[i]));
  return acc;
}

}  // namespace rfsgd
