#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "rfsgd/error.hpp"
#include "rfsgd/features.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

/// Input covariance Sigma_d for the correlated-features model x = Sigma_d^{1/2} t.
struct CovSpec {
  enum class Kind { Identity, DiagonalPowerLaw, ExplicitMatrix };

  Kind kind = Kind::Identity;
  double exponent = 0.0;           // DiagonalPowerLaw: Sigma_jj = j^{-exponent}
  Matrix<double> matrix;           // ExplicitMatrix

  static CovSpec identity() { return {}; }
  static CovSpec power_law(double exponent) {
    if (!(exponent >= 0.0)) throw InvalidArgument("power-law exponent must be >= 0");
    CovSpec c;
    c.kind = Kind::DiagonalPowerLaw;
    c.exponent = exponent;
    return c;
  }
  static CovSpec explicit_matrix(Matrix<double> m) {
    CovSpec c;
    c.kind = Kind::ExplicitMatrix;
    c.matrix = std::move(m);
    return c;
  }
};

enum class Provenance { SyntheticLinear, SyntheticLaplace, IdxBinary };

template <typename Scalar>
struct Dataset {
  Matrix<Scalar> X;
  Vector<Scalar> y;
  std::optional<Vector<Scalar>> fstar;
  double noise_sd = 0.0;
  Provenance provenance = Provenance::SyntheticLinear;

  Index size() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> covariance_sqrt(const CovSpec& cov, Index d) {
  switch (cov.kind) {
    case CovSpec::Kind::Identity: return Matrix<Scalar>::Identity(d, d);
    case CovSpec::Kind::DiagonalPowerLaw: {
      Vector<Scalar> diag(d);
      for (Index j = 0; j < d; ++j) diag(j) = std::pow(Scalar(j + 1), Scalar(-cov.exponent / 2.0));
      return diag.asDiagonal();
    }
    case CovSpec::Kind::ExplicitMatrix: {
      const Matrix<double>& s = cov.matrix;
      if (s.rows() != d || s.cols() != d)
        throw InvalidArgument("explicit covariance is " + std::to_string(s.rows()) + "x" +
                              std::to_string(s.cols()) + ", expected " + std::to_string(d) + "x" +
                              std::to_string(d));
      if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()))
        throw InvalidArgument("explicit covariance is not symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix<double>> es(s);
      const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
      if (es.eigenvalues().minCoeff() < -1e-10 * top)
        throw InvalidArgument("explicit covariance is not positive semi-definite");
      const Vector<double> root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      return (es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose()).template cast<Scalar>();
    }
  }
  return {};
}

}  // namespace detail

/// Rows x_i = Sigma_d^{1/2} t_i with t_i i.i.d. standard normal.
template <typename Scalar = double>
Matrix<Scalar> gen_inputs(Seed seed, Index n, Index d, const CovSpec& cov) {
  if (n <= 0 || d <= 0) throw InvalidArgument("gen_inputs needs n >= 1 and d >= 1");
  const Matrix<Scalar> root = detail::covariance_sqrt<Scalar>(cov, d);
  Rng rng(seed);
  Matrix<Scalar> t = standard_normal<Scalar>(rng, n, d);
  if (cov.kind == CovSpec::Kind::Identity) return t;
  return t * root;  // root is symmetric
}

template <typename Scalar>
struct LaplaceTarget {
  Vector<Scalar> fstar_train;
  Vector<Scalar> fstar_eval;
  Vector<Scalar> y_train;
  Vector<Scalar> weights;
};

/// f*(x) = sum_j exp(-||x - x_j|| / bandwidth) w_j over the training points,
/// w ~ N(0, I); y = f* + N(0, noise_sd^2) on the training points.
template <typename Scalar>
LaplaceTarget<Scalar> gen_target_laplace(Seed seed, const Matrix<Scalar>& X_train, const Matrix<Scalar>& X_eval,
                                         double bandwidth, double noise_sd) {
  if (X_train.rows() == 0) throw InvalidArgument("gen_target_laplace: empty training set");
  if (!(bandwidth > 0.0)) throw InvalidArgument("gen_target_laplace: bandwidth must be > 0");
  if (X_eval.rows() > 0 && X_eval.cols() != X_train.cols())
    throw DimensionError("gen_target_laplace: train and eval dimensions differ");
  Rng rng(seed);
  LaplaceTarget<Scalar> out;
  out.weights = standard_normal<Scalar>(rng, X_train.rows());

  auto evaluate = [&](const Matrix<Scalar>& pts) {
    Vector<Scalar> f(pts.rows());
    for (Index i = 0; i < pts.rows(); ++i) {
      Scalar acc = 0;
      for (Index j = 0; j < X_train.rows(); ++j)
        acc += std::exp(-(pts.row(i) - X_train.row(j)).norm() / Scalar(bandwidth)) * out.weights(j);
      f(i) = acc;
    }
    return f;
  };
  out.fstar_train = evaluate(X_train);
  out.fstar_eval = evaluate(X_eval);
  out.y_train = out.fstar_train;
  if (noise_sd > 0.0) out.y_train += Scalar(noise_sd) * standard_normal<Scalar>(rng, X_train.rows());
  return out;
}

template <typename Scalar>
struct PlantedTarget {
  Vector<Scalar> theta_star;
  Vector<Scalar> fstar;
};

/// Target inside the model class: theta* ~ N(0, I) rescaled to ||theta*|| = target_norm,
/// f* = Phi theta*.
template <typename Scalar>
PlantedTarget<Scalar> plant_rf_target(const FeatureMap<Scalar>& map, Seed seed, double target_norm,
                                      const Matrix<Scalar>& X) {
  if (!(target_norm > 0.0)) throw InvalidArgument("plant_rf_target: target_norm must be > 0");
  Rng rng(seed);
  PlantedTarget<Scalar> out;
  out.theta_star = standard_normal<Scalar>(rng, map.feature_dim());
  out.theta_star *= Scalar(target_norm) / out.theta_star.norm();
  out.fstar = map.apply_batch(X) * out.theta_star;
  return out;
}

}  // namespace rfsgd
