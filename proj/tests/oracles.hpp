#pragma once

#include <vector>

#include "rfsgd/decomposition.hpp"
#include "rfsgd/optimizer.hpp"

namespace rfsgd::oracle {

/// theta_t = (I - g_t phi phi^T) theta_{t-1} + g_t y phi with explicit p x p
/// matrices, averaged over theta_0 .. theta_{n-1}.
inline Vector<double> dense_sgd_average(const Matrix<double>& Phi, const Vector<double>& y, const StepSchedule& s,
                                        const Vector<double>& theta0) {
  const Index n = Phi.rows(), p = Phi.cols();
  const Matrix<double> I = Matrix<double>::Identity(p, p);
  Vector<double> theta = theta0, sum = Vector<double>::Zero(p);
  for (Index t = 1; t <= n; ++t) {
    sum += theta;
    const Vector<double> phi = Phi.row(t - 1).transpose();
    const double g = s.gamma0 * std::pow(double(t), -s.zeta);
    const Matrix<double> A = I - g * phi * phi.transpose();
    theta = A * theta + g * y(t - 1) * phi;
  }
  return sum / double(n);
}

/// Two-step unroll of the six recursions, written out term by term.
inline PathAverages<double> two_step_paths(const Matrix<double>& Phi, const Matrix<double>& Sh,
                                           const Matrix<double>& St, const Vector<double>& ts,
                                           const Vector<double>& eps, const StepSchedule& s) {
  const Index p = Phi.cols();
  const Matrix<double> I = Matrix<double>::Identity(p, p);
  const Vector<double> f1 = Phi.row(0).transpose();
  const double g1 = s.gamma0;
  PathAverages<double> a;
  // eta_0 enters the average, eta_1 = A_1 eta_0 + g_1 eps_1 phi_1
  a.bias = (-ts + (I - g1 * f1 * f1.transpose()) * -ts) / 2.0;
  a.bX = (-ts + (I - g1 * Sh) * -ts) / 2.0;
  a.bXW = (-ts + (I - g1 * St) * -ts) / 2.0;
  a.var = (g1 * eps(0) * f1) / 2.0;
  a.vX = a.var;
  a.vXW = a.var;
  return a;
}

}  // namespace rfsgd::oracle
