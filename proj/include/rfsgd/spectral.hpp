#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rfsgd/error.hpp"
#include "rfsgd/features.hpp"
#include "rfsgd/quadrature.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

struct EigenCluster {
  double value = 0.0;
  Index multiplicity = 0;
};

/// Analytic expectation over W of the feature covariance.
///
/// SingleOutput: (a - b) I + b 11^T on m coordinates.
/// GaussBlocks: S1 (+) S2 where S1 = (a - b) I + b 11^T acts on the cosine
/// half and S2 = a2 I on the sine half.
struct CovarianceSummary {
  enum class Structure { SingleOutput, GaussBlocks };
  /// Invariant subspace of each eigenvalue cluster.
  enum class Space { HeadMean, HeadMeanFree, Tail };

  Structure structure = Structure::SingleOutput;
  Index m = 0;
  double a = 0.0;
  double b = 0.0;
  double a2 = 0.0;
  std::vector<EigenCluster> eigenvalues;
  std::vector<Space> eigenspaces;  // parallel to eigenvalues
  double trace = 0.0;
  bool degenerate = false;

  Index dim() const { return structure == Structure::GaussBlocks ? 2 * m : m; }

  /// Orthogonal projection of v onto the eigenspace of cluster k.
  template <typename Derived>
  Vector<typename Derived::Scalar> project(std::size_t k, const Eigen::MatrixBase<Derived>& v) const {
    using S = typename Derived::Scalar;
    check_length(v.size());
    Vector<S> out = Vector<S>::Zero(v.size());
    switch (eigenspaces.at(k)) {
      case Space::HeadMean: out.head(m).setConstant(v.head(m).mean()); break;
      case Space::HeadMeanFree: out.head(m) = v.head(m).array() - v.head(m).mean(); break;
      case Space::Tail: out.tail(v.size() - m) = v.tail(v.size() - m); break;
    }
    return out;
  }

  template <typename Derived>
  Vector<typename Derived::Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    using S = typename Derived::Scalar;
    check_length(v.size());
    Vector<S> out(v.size());
    out.head(m) = S(a - b) * v.head(m).array() + S(b) * v.head(m).sum();
    if (structure == Structure::GaussBlocks) out.tail(m) = S(a2) * v.tail(m);
    return out;
  }

  template <typename Derived>
  Vector<typename Derived::Scalar> apply_inverse(const Eigen::MatrixBase<Derived>& v) const {
    using S = typename Derived::Scalar;
    if (degenerate) throw InvalidArgument("expected covariance is singular");
    Vector<S> out = Vector<S>::Zero(v.size());
    for (std::size_t k = 0; k < eigenvalues.size(); ++k) out += project(k, v) / S(eigenvalues[k].value);
    return out;
  }

 private:
  void check_length(Index len) const {
    if (len != dim())
      throw DimensionError("covariance summary acts on length " + std::to_string(dim()) + ", got " +
                           std::to_string(len));
  }
};

namespace detail {

inline void finish_summary(CovarianceSummary& s) {
  s.eigenvalues.clear();
  s.eigenspaces.clear();
  auto push = [&](double value, Index mult, CovarianceSummary::Space space) {
    if (mult <= 0) return;
    s.eigenvalues.push_back({value, mult});
    s.eigenspaces.push_back(space);
  };
  using Space = CovarianceSummary::Space;
  push(s.a + double(s.m - 1) * s.b, 1, Space::HeadMean);
  if (s.structure == CovarianceSummary::Structure::GaussBlocks) {
    push(s.a2, s.m, Space::Tail);
    s.trace = double(s.m) * (s.a + s.a2);
  } else {
    s.trace = double(s.m) * s.a;
  }
  push(s.a - s.b, s.m - 1, Space::HeadMeanFree);
  double top = 0.0, bottom = INFINITY;
  for (const auto& c : s.eigenvalues) top = std::max(top, c.value), bottom = std::min(bottom, c.value);
  s.degenerate = !(bottom > 1e-14 * top) || top == 0.0;
}

inline void check_m(Index m) {
  if (m < 1) throw InvalidArgument("m must be >= 1");
}

}  // namespace detail

inline CovarianceSummary single_output_summary(Index m, double a, double b) {
  detail::check_m(m);
  CovarianceSummary s;
  s.structure = CovarianceSummary::Structure::SingleOutput;
  s.m = m;
  s.a = a;
  s.b = b;
  detail::finish_summary(s);
  return s;
}

inline CovarianceSummary gauss_blocks_summary(Index m, double a1, double b1, double a2) {
  detail::check_m(m);
  CovarianceSummary s;
  s.structure = CovarianceSummary::Structure::GaussBlocks;
  s.m = m;
  s.a = a1;
  s.b = b1;
  s.a2 = a2;
  detail::finish_summary(s);
  return s;
}

/// (1/n) Phi^T Phi for precomputed features.
template <typename Scalar>
Matrix<Scalar> sample_cov_features(const Matrix<Scalar>& Phi) {
  if (Phi.rows() < 1) throw InvalidArgument("sample_cov needs n >= 1");
  Matrix<Scalar> S = Matrix<Scalar>::Zero(Phi.cols(), Phi.cols());
  S.template selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose(), Scalar(1) / Scalar(Phi.rows()));
  return S.template selfadjointView<Eigen::Lower>();
}

template <typename Scalar>
Matrix<Scalar> sample_cov(const FeatureMap<Scalar>& map, const Matrix<Scalar>& X) {
  return sample_cov_features<Scalar>(map.apply_batch(X));
}

/// Single-output activation sigma given as a callable:
/// a = (1/m) E_x E_z[sigma(z)^2], b = (1/m) E_x (E_z sigma(z))^2, z ~ N(0, |x|^2/d).
template <typename Scalar, typename F>
CovarianceSummary expected_cov_quadrature(F&& sigma, const Matrix<Scalar>& X, Index m, int quad_order = 64) {
  detail::check_m(m);
  if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("expected_cov_quadrature: empty data sample");
  const GaussRule rule = half_range_hermite(quad_order);
  const double d = double(X.cols());
  double second = 0.0, mean_sq = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double sd = std::sqrt(double(X.row(i).squaredNorm()) / d);
    const double mean = gaussian_expectation(sigma, sd, rule);
    second += gaussian_expectation([&](double z) { return sigma(z) * sigma(z); }, sd, rule);
    mean_sq += mean * mean;
  }
  const double n = double(X.rows());
  return single_output_summary(m, second / (n * double(m)), mean_sq / (n * double(m)));
}

template <typename Scalar>
CovarianceSummary expected_cov_quadrature(Activation activation, const Matrix<Scalar>& X, Index m,
                                          int quad_order = 64) {
  switch (activation) {
    case Activation::ReLU:
      return expected_cov_quadrature<Scalar>([](double z) { return z > 0.0 ? z : 0.0; }, X, m, quad_order);
    case Activation::Identity:
      return expected_cov_quadrature<Scalar>([](double z) { return z; }, X, m, quad_order);
    case Activation::CosSin: {
      detail::check_m(m);
      if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("expected_cov_quadrature: empty data sample");
      const GaussRule rule = half_range_hermite(quad_order);
      const double d = double(X.cols());
      double cos2 = 0.0, sin2 = 0.0, cos_mean_sq = 0.0;
      for (Index i = 0; i < X.rows(); ++i) {
        const double sd = std::sqrt(double(X.row(i).squaredNorm()) / d);
        const double c = gaussian_expectation([](double z) { return std::cos(z); }, sd, rule);
        cos2 += gaussian_expectation([](double z) { return std::cos(z) * std::cos(z); }, sd, rule);
        sin2 += gaussian_expectation([](double z) { return std::sin(z) * std::sin(z); }, sd, rule);
        cos_mean_sq += c * c;
      }
      const double nm = double(X.rows()) * double(m);
      return gauss_blocks_summary(m, cos2 / nm, cos_mean_sq / nm, sin2 / nm);
    }
  }
  throw InvalidArgument("unknown activation");
}

/// Arc-cosine closed form; trace_ratio = Tr(Sigma_d)/d.
inline CovarianceSummary expected_cov_relu(double trace_ratio, Index m) {
  if (!(trace_ratio > 0.0)) throw InvalidArgument("trace_ratio must be > 0");
  detail::check_m(m);
  const double a = trace_ratio / (2.0 * double(m));
  return single_output_summary(m, a, a / std::numbers::pi);
}

/// Cos/sin closed form with theta = |x|^2/d averaged over the rows of X.
template <typename Scalar>
CovarianceSummary expected_cov_gauss(const Matrix<Scalar>& X, Index m) {
  detail::check_m(m);
  if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("expected_cov_gauss: empty data sample");
  const double d = double(X.cols());
  double e1 = 0.0, e2 = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double th = double(X.row(i).squaredNorm()) / d;
    e1 += std::exp(-th);
    e2 += std::exp(-2.0 * th);
  }
  e1 /= double(X.rows());
  e2 /= double(X.rows());
  const double md = double(m);
  return gauss_blocks_summary(m, (1.0 + e2) / (2.0 * md), e1 / md, (1.0 - e2) / (2.0 * md));
}

/// Closed form where one exists (ReLU, Identity, CosSin), for the data in X.
template <typename Scalar>
CovarianceSummary expected_cov(Activation activation, const Matrix<Scalar>& X, Index m) {
  switch (activation) {
    case Activation::ReLU:
    case Activation::Identity: {
      if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("expected_cov: empty data sample");
      const double ratio = double(X.rowwise().squaredNorm().mean()) / double(X.cols());
      if (activation == Activation::ReLU) return expected_cov_relu(ratio, m);
      return single_output_summary(m, ratio / double(m), 0.0);
    }
    case Activation::CosSin: return expected_cov_gauss(X, m);
  }
  throw InvalidArgument("unknown activation");
}

template <typename Scalar = double>
Matrix<Scalar> assemble_expected_cov(const CovarianceSummary& s) {
  const Index m = s.m;
  Matrix<Scalar> out = Matrix<Scalar>::Zero(s.dim(), s.dim());
  out.topLeftCorner(m, m).setConstant(Scalar(s.b));
  out.topLeftCorner(m, m).diagonal().setConstant(Scalar(s.a));
  if (s.structure == CovarianceSummary::Structure::GaussBlocks)
    out.bottomRightCorner(m, m).diagonal().setConstant(Scalar(s.a2));
  return out;
}

/// Groups sorted-or-unsorted eigenvalues whose gaps are within `tol`.
inline std::vector<EigenCluster> cluster_eigenvalues(std::vector<double> values, double tol = 1e-9) {
  std::sort(values.begin(), values.end());
  std::vector<EigenCluster> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (out.empty() || values[i] - values[i - 1] > tol) {
      if (!out.empty()) out.back().value = sum / double(out.back().multiplicity);
      out.push_back({values[i], 0});
      sum = 0.0;
    }
    out.back().multiplicity += 1;
    sum += values[i];
  }
  if (!out.empty()) out.back().value = sum / double(out.back().multiplicity);
  return out;
}

template <typename Scalar>
std::vector<double> symmetric_eigenvalues(const Matrix<Scalar>& S) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(S, Eigen::EigenvaluesOnly);
  std::vector<double> out(std::size_t(S.rows()));
  for (Index i = 0; i < S.rows(); ++i) out[std::size_t(i)] = double(es.eigenvalues()(i));
  return out;
}

struct TraceConcentration {
  std::vector<double> traces;
  double mean = 0.0;
  double sd = 0.0;
  double max_over_mean = 0.0;
};

/// Tr(Sigma_hat) across independent W draws for a fixed data sample.
template <typename Scalar>
TraceConcentration trace_concentration(const std::vector<Seed>& map_seeds, Index m, const Matrix<Scalar>& X,
                                       Activation activation) {
  if (map_seeds.size() < 30) throw InvalidArgument("trace_concentration needs at least 30 seeds");
  TraceConcentration out;
  for (Seed s : map_seeds) {
    const FeatureMap<Scalar> map(s, m, X.cols(), activation);
    const Matrix<Scalar> Phi = map.apply_batch(X);
    out.traces.push_back(double(Phi.squaredNorm()) / double(X.rows()));
  }
  const double k = double(out.traces.size());
  double mx = 0.0;
  for (double t : out.traces) out.mean += t / k, mx = std::max(mx, t);
  for (double t : out.traces) out.sd += (t - out.mean) * (t - out.mean) / (k - 1.0);
  out.sd = std::sqrt(out.sd);
  out.max_over_mean = out.mean > 0.0 ? mx / out.mean : 0.0;
  return out;
}

struct SecondMomentDiagnostic {
  Index m = 0;
  double inverse_trace = 0.0;  // Tr[Sigma_tilde^{-1} avg_W(Sigma_hat^2)]
  double gap_min_eig = 0.0;    // lambda_min(Tr(Sigma_tilde) Sigma_tilde - avg_W(Sigma_hat^2))
  double mean_cov_distance = 0.0;  // |avg_W(Sigma_hat) - Sigma_tilde|_2
  double top_eigenvalue = 0.0;     // largest eigenvalue of Sigma_tilde
};

/// Monte Carlo over `draws` W draws on one data sample X.
template <typename Scalar>
SecondMomentDiagnostic second_moment_diagnostic(Activation activation, const Matrix<Scalar>& X, Index m,
                                                int draws, Seed seed) {
  if (draws < 1) throw InvalidArgument("second_moment_diagnostic needs draws >= 1");
  const CovarianceSummary summary = expected_cov(activation, X, m);
  const Index p = summary.dim();
  Matrix<Scalar> mean_cov = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> mean_sq = Matrix<Scalar>::Zero(p, p);
  for (int k = 0; k < draws; ++k) {
    const FeatureMap<Scalar> map(derive_seed(seed, {std::uint64_t(k)}), m, X.cols(), activation);
    const Matrix<Scalar> S = sample_cov<Scalar>(map, X);
    mean_cov += S / Scalar(draws);
    mean_sq.noalias() += (S * S) / Scalar(draws);
  }
  const Matrix<Scalar> tilde = assemble_expected_cov<Scalar>(summary);
  SecondMomentDiagnostic out;
  out.m = m;
  double tr = 0.0;
  for (Index j = 0; j < p; ++j) tr += double(summary.apply_inverse(mean_sq.col(j))(j));
  out.inverse_trace = tr;
  const Matrix<Scalar> gap = Scalar(summary.trace) * tilde - mean_sq;
  out.gap_min_eig = symmetric_eigenvalues<Scalar>(Matrix<Scalar>((gap + gap.transpose()) / Scalar(2))).front();
  const std::vector<double> dev = symmetric_eigenvalues<Scalar>(Matrix<Scalar>(mean_cov - tilde));
  out.mean_cov_distance = std::max(std::abs(dev.front()), std::abs(dev.back()));
  for (const auto& c : summary.eigenvalues) out.top_eigenvalue = std::max(out.top_eigenvalue, c.value);
  return out;
}

}  // namespace rfsgd
