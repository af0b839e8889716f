#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "rfsgd/error.hpp"
#include "rfsgd/features.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

/// gamma_t = gamma0 * t^{-zeta}, t = 1, 2, ...
struct StepSchedule {
  double gamma0 = 1.0;
  double zeta = 0.0;

  StepSchedule() = default;
  StepSchedule(double gamma0_, double zeta_) : gamma0(gamma0_), zeta(zeta_) { validate(); }

  void validate() const {
    if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw InvalidArgument("gamma0 must be > 0");
    if (!(zeta >= 0.0 && zeta < 1.0)) throw InvalidArgument("zeta must lie in [0, 1)");
  }
};

inline double step_size(const StepSchedule& s, long long t) {
  if (t < 1) throw InvalidArgument("step index must be >= 1, got " + std::to_string(t));
  return s.zeta == 0.0 ? s.gamma0 : s.gamma0 * std::pow(double(t), -s.zeta);
}

/// gamma_1 .. gamma_n
inline std::vector<double> step_sizes(const StepSchedule& s, Index n) {
  std::vector<double> g(std::size_t(std::max<Index>(n, 0)));
  for (Index t = 1; t <= n; ++t) g[std::size_t(t - 1)] = step_size(s, t);
  return g;
}

struct InitScheme {
  enum class Kind { Zero, Constant, NearMinNorm };
  Kind kind = Kind::Zero;
  double value = 0.0;  // Constant: the constant; NearMinNorm: perturbation sd

  static InitScheme zero() { return {}; }
  static InitScheme constant(double c) { return {Kind::Constant, c}; }
  static InitScheme near_min_norm(double noise_sd = 1.0) {
    if (!(noise_sd >= 0.0)) throw InvalidArgument("near-min-norm noise sd must be >= 0");
    return {Kind::NearMinNorm, noise_sd};
  }
};

struct SgdOptions {
  Index epochs = 1;
  bool record_trajectory = false;
  Seed seed = 0;
  double svd_tol = 1e-12;
  double divergence_threshold = 1e12;
};

template <typename Scalar>
struct SgdOutcome {
  Vector<Scalar> theta_bar;
  Vector<Scalar> theta_last;
  std::optional<std::vector<Vector<Scalar>>> trajectory;  // theta_0 .. theta_T
  bool stability_warning = false;
};

/// Minimum-norm least-squares solution Phi^+ y. Singular values below
/// svd_tol * sigma_max are treated as zero.
template <typename Scalar>
Vector<Scalar> min_norm_fit(const Matrix<Scalar>& Phi, const Vector<Scalar>& y, double svd_tol = 1e-12) {
  if (Phi.rows() != y.size())
    throw DimensionError("min_norm_fit: Phi has " + std::to_string(Phi.rows()) + " rows but y has length " +
                         std::to_string(y.size()));
  if (!Phi.allFinite() || !y.allFinite()) throw InvalidArgument("min_norm_fit: non-finite entries in Phi or y");
  if (Phi.size() == 0) return Vector<Scalar>::Zero(Phi.cols());
  Eigen::BDCSVD<Matrix<Scalar>> svd(Phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Scalar cut = Scalar(svd_tol) * (s.size() ? s(0) : Scalar(0));
  Vector<Scalar> coef = svd.matrixU().transpose() * y;
  for (Index k = 0; k < s.size(); ++k) coef(k) = s(k) > cut && s(k) > Scalar(0) ? coef(k) / s(k) : Scalar(0);
  return svd.matrixV() * coef;
}

namespace detail {

template <typename Scalar>
void check_sgd_shapes(const Matrix<Scalar>& Phi, const Vector<Scalar>& y) {
  if (Phi.rows() != y.size())
    throw DimensionError("sgd: " + std::to_string(Phi.rows()) + " samples but " + std::to_string(y.size()) +
                         " labels");
  if (Phi.rows() == 0) throw InvalidArgument("sgd: empty training set");
}

}  // namespace detail

/// Averaged SGD on precomputed features (row i of Phi is phi(x_i)).
///
/// The first epoch visits rows in the given order; later epochs reshuffle
/// with a seeded permutation. The step counter runs on across epochs.
/// theta_bar averages theta_0 .. theta_{T-1}, T = n * epochs.
template <typename Scalar>
SgdOutcome<Scalar> sgd_average_features(const Matrix<Scalar>& Phi, const Vector<Scalar>& y,
                                        const StepSchedule& schedule, const InitScheme& init,
                                        const SgdOptions& opts = {}) {
  detail::check_sgd_shapes(Phi, y);
  schedule.validate();
  if (opts.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  const Index n = Phi.rows();
  const Index p = Phi.cols();

  SgdOutcome<Scalar> out;
  Vector<Scalar> theta;
  switch (init.kind) {
    case InitScheme::Kind::Zero: theta = Vector<Scalar>::Zero(p); break;
    case InitScheme::Kind::Constant: theta = Vector<Scalar>::Constant(p, Scalar(init.value)); break;
    case InitScheme::Kind::NearMinNorm: {
      theta = min_norm_fit(Phi, y, opts.svd_tol);
      Rng rng(derive_seed(opts.seed, {1}));
      theta += Scalar(init.value) * standard_normal<Scalar>(rng, p);
      break;
    }
  }

  const Matrix<Scalar> PhiT = Phi.transpose();
  const double mean_sq_norm = double(PhiT.colwise().squaredNorm().mean());
  out.stability_warning = schedule.gamma0 * mean_sq_norm > 1.0;

  if (opts.record_trajectory) out.trajectory.emplace().push_back(theta);
  Vector<Scalar> sum = Vector<Scalar>::Zero(p);
  std::vector<Index> order{};
  order.resize(std::size_t(n));
  std::iota(order.begin(), order.end(), Index(0));
  long long t = 0;
  for (Index epoch = 0; epoch < opts.epochs; ++epoch) {
    if (epoch > 0) {
      Rng rng(derive_seed(opts.seed, {2, std::uint64_t(epoch)}));
      std::shuffle(order.begin(), order.end(), rng);
    }
    for (Index i : order) {
      ++t;
      sum += theta;
      const auto phi = PhiT.col(i);
      const Scalar gamma = Scalar(step_size(schedule, t));
      theta += (gamma * (y(i) - phi.dot(theta))) * phi;
      const Scalar nrm = theta.norm();
      if (!std::isfinite(double(nrm)) || double(nrm) > opts.divergence_threshold)
        throw DivergenceError("SGD iterate diverged (norm " + std::to_string(double(nrm)) + ")",
                              std::size_t(t));
      if (opts.record_trajectory) out.trajectory->push_back(theta);
    }
  }
  out.theta_bar = sum / Scalar(t);
  out.theta_last = std::move(theta);
  return out;
}

template <typename Scalar>
SgdOutcome<Scalar> sgd_average(const FeatureMap<Scalar>& map, const Matrix<Scalar>& X, const Vector<Scalar>& y,
                               const StepSchedule& schedule, const InitScheme& init, const SgdOptions& opts = {}) {
  if (X.rows() != y.size())
    throw DimensionError("sgd_average: X has " + std::to_string(X.rows()) + " rows but y has length " +
                         std::to_string(y.size()));
  return sgd_average_features<Scalar>(map.apply_batch(X), y, schedule, init, opts);
}

template <typename Scalar>
double test_mse(const Vector<Scalar>& theta, const FeatureMap<Scalar>& map, const Matrix<Scalar>& X_test,
                const Vector<Scalar>& y_test) {
  if (X_test.rows() != y_test.size()) throw DimensionError("test_mse: X_test and y_test disagree in length");
  if (theta.size() != map.feature_dim()) throw DimensionError("test_mse: theta length differs from feature_dim");
  if (X_test.rows() == 0) throw InvalidArgument("test_mse: empty test set");
  return double((map.apply_batch(X_test) * theta - y_test).squaredNorm() / Scalar(X_test.rows()));
}

/// <theta_bar - theta_star, Sigma_hat (theta_bar - theta_star)>
template <typename Scalar>
double excess_risk(const Vector<Scalar>& theta_bar, const Vector<Scalar>& theta_star,
                   const Matrix<Scalar>& Sigma_hat) {
  const Index p = theta_bar.size();
  if (theta_star.size() != p || Sigma_hat.rows() != p || Sigma_hat.cols() != p)
    throw DimensionError("excess_risk: shape mismatch");
  if (p > 0 && (Sigma_hat - Sigma_hat.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10))
    throw InvalidArgument("excess_risk: Sigma_hat is not symmetric");
  const Vector<Scalar> v = theta_bar - theta_star;
  return double(v.dot(Sigma_hat * v));
}

}  // namespace rfsgd
