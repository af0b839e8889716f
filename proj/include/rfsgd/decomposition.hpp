#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "rfsgd/data.hpp"
#include "rfsgd/error.hpp"
#include "rfsgd/features.hpp"
#include "rfsgd/optimizer.hpp"
#include "rfsgd/spectral.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

/// Time averages over t = 0 .. n-1 of the six error recursions.
template <typename Scalar>
struct PathAverages {
  Vector<Scalar> bias, bX, bXW;
  Vector<Scalar> var, vX, vXW;
};

/// Forward pass of all six recursions with dense p x p matrices.
///
/// Bias paths start at -theta_star and variance paths at 0, so that
/// bias + var equals theta_t - theta_star for SGD started at 0 on labels
/// Phi theta_star + noise. Row t of Phi_ordered is the sample used at step t+1
/// and noise(t) is its label noise. When `coupled` is non-null it receives
/// eta^bias_t + eta^var_t for t = 0 .. n.
template <typename Scalar>
PathAverages<Scalar> run_paths(const Matrix<Scalar>& Phi_ordered, const Matrix<Scalar>& Sigma_hat,
                               const Matrix<Scalar>& Sigma_tilde, const Vector<Scalar>& theta_star,
                               const Vector<Scalar>& noise, const StepSchedule& schedule,
                               std::vector<Vector<Scalar>>* coupled = nullptr) {
  const Index n = Phi_ordered.rows(), p = Phi_ordered.cols();
  if (Sigma_hat.rows() != p || Sigma_hat.cols() != p || Sigma_tilde.rows() != p || Sigma_tilde.cols() != p ||
      theta_star.size() != p)
    throw DimensionError("run_paths: covariance or theta_star shape differs from feature_dim");
  if (noise.size() != n) throw DimensionError("run_paths: noise length differs from sample count");
  if (n == 0) throw InvalidArgument("run_paths: empty sample");
  schedule.validate();

  Vector<Scalar> e_bias = -theta_star, e_bX = -theta_star, e_bXW = -theta_star;
  Vector<Scalar> e_var = Vector<Scalar>::Zero(p), e_vX = e_var, e_vXW = e_var;
  PathAverages<Scalar> sum{Vector<Scalar>::Zero(p), Vector<Scalar>::Zero(p), Vector<Scalar>::Zero(p),
                           Vector<Scalar>::Zero(p), Vector<Scalar>::Zero(p), Vector<Scalar>::Zero(p)};
  if (coupled) {
    coupled->clear();
    coupled->push_back(e_bias + e_var);
  }
  for (Index t = 1; t <= n; ++t) {
    sum.bias += e_bias, sum.bX += e_bX, sum.bXW += e_bXW;
    sum.var += e_var, sum.vX += e_vX, sum.vXW += e_vXW;
    const Scalar g = Scalar(step_size(schedule, t));
    const Vector<Scalar> phi = Phi_ordered.row(t - 1).transpose();
    const Vector<Scalar> kick = g * noise(t - 1) * phi;
    e_bias -= g * phi.dot(e_bias) * phi;
    e_bX -= g * (Sigma_hat * e_bX);
    e_bXW -= g * (Sigma_tilde * e_bXW);
    e_var += kick - g * phi.dot(e_var) * phi;
    e_vX += kick - g * (Sigma_hat * e_vX);
    e_vXW += kick - g * (Sigma_tilde * e_vXW);
    if (!(e_bias.allFinite() && e_bX.allFinite() && e_bXW.allFinite() && e_var.allFinite() && e_vX.allFinite() &&
          e_vXW.allFinite()))
      throw DivergenceError("error recursion became non-finite", std::size_t(t));
    if (coupled) coupled->push_back(e_bias + e_var);
  }
  const Scalar inv = Scalar(1) / Scalar(n);
  return {sum.bias * inv, sum.bX * inv, sum.bXW * inv, sum.var * inv, sum.vX * inv, sum.vXW * inv};
}

template <typename Scalar>
PathAverages<Scalar> run_paths(const FeatureMap<Scalar>& map, const Matrix<Scalar>& Sigma_hat,
                               const Matrix<Scalar>& Sigma_tilde, const Vector<Scalar>& theta_star,
                               const Matrix<Scalar>& X_ordered, const Vector<Scalar>& noise,
                               const StepSchedule& schedule, std::vector<Vector<Scalar>>* coupled = nullptr) {
  return run_paths<Scalar>(map.apply_batch(X_ordered), Sigma_hat, Sigma_tilde, theta_star, noise, schedule,
                           coupled);
}

struct DecompositionTerms {
  double B1 = 0, B2 = 0, B3 = 0, V1 = 0, V2 = 0, V3 = 0, bias = 0, variance = 0;
};

/// Quadratic forms: Sigma_hat for everything except B3, which uses Sigma_tilde.
template <typename Scalar>
DecompositionTerms quadratic_terms(const PathAverages<Scalar>& a, const Matrix<Scalar>& Sigma_hat,
                                   const Matrix<Scalar>& Sigma_tilde) {
  auto q = [](const Matrix<Scalar>& S, const Vector<Scalar>& v) { return double(v.dot(S * v)); };
  DecompositionTerms t;
  t.B1 = q(Sigma_hat, a.bias - a.bX);
  t.B2 = q(Sigma_hat, a.bX - a.bXW);
  t.B3 = q(Sigma_tilde, a.bXW);
  t.V1 = q(Sigma_hat, a.var - a.vX);
  t.V2 = q(Sigma_hat, a.vX - a.vXW);
  t.V3 = q(Sigma_hat, a.vXW);
  t.bias = q(Sigma_hat, a.bias);
  t.variance = q(Sigma_hat, a.var);
  return t;
}

/// Per-column results of one (W, order) cell evaluated on a block of noise draws.
struct CellBlock {
  double B1 = 0, B2 = 0, B3 = 0, bias = 0;     // noise-free, shared by all columns
  std::vector<double> V1, V2, V3, variance;  // per noise column
  std::vector<double> excess;                // per noise column, from the SGD run itself
};

/// Fast evaluation of the six recursions for one feature draw.
///
/// Sigma_hat-driven paths run in the eigenbasis of Sigma_hat, the
/// Sigma_tilde-driven paths in the closed-form eigenspaces of the summary;
/// both reduce to per-eigenvalue scalar products of (1 - gamma_t lambda).
/// The sample-driven paths are exact O(p) rank-one updates, batched over
/// noise columns.
template <typename Scalar>
class DecompositionEngine {
 public:
  DecompositionEngine(Matrix<Scalar> Phi, CovarianceSummary tilde, const StepSchedule& schedule,
                      bool components = true)
      : Phi_(std::move(Phi)), tilde_(std::move(tilde)), gamma_(step_sizes(schedule, Phi_.rows())),
        components_(components) {
    if (Phi_.rows() == 0) throw InvalidArgument("decomposition: empty sample");
    if (tilde_.dim() != Phi_.cols()) throw DimensionError("decomposition: summary dimension differs from feature_dim");
    PhiT_ = Phi_.transpose();
    if (components_) eigen_setup();
  }

  Index samples() const { return Phi_.rows(); }
  Index feature_dim() const { return Phi_.cols(); }
  const Matrix<Scalar>& features() const { return Phi_; }
  const std::vector<double>& hat_eigenvalues() const { return lambda_; }

  /// <v, Sigma_hat v> for each column of V.
  std::vector<double> hat_form(const Matrix<Scalar>& V) const {
    const Matrix<Scalar> F = Phi_ * V;
    std::vector<double> out(std::size_t(V.cols()));
    for (Index k = 0; k < V.cols(); ++k) out[std::size_t(k)] = double(F.col(k).squaredNorm()) / double(samples());
    return out;
  }

  /// `order[t]` is the sample index used at step t+1; E holds noise indexed by
  /// sample (row i belongs to sample i), one column per draw.
  CellBlock evaluate(const Vector<Scalar>& theta_star, const std::vector<Index>& order, const Matrix<Scalar>& E) const {
    const Index n = samples(), p = feature_dim(), K = E.cols();
    if (theta_star.size() != p) throw DimensionError("decomposition: theta_star length differs from feature_dim");
    if (Index(order.size()) != n || E.rows() != n) throw DimensionError("decomposition: order/noise length differs from n");
    CellBlock out;

    // Sample-driven paths: bias (noise-free), var and the real SGD run.
    Vector<Scalar> e_bias = -theta_star, s_bias = Vector<Scalar>::Zero(p);
    Matrix<Scalar> e_var = Matrix<Scalar>::Zero(p, K), s_var = Matrix<Scalar>::Zero(p, K);
    Matrix<Scalar> theta = Matrix<Scalar>::Zero(p, K), s_theta = Matrix<Scalar>::Zero(p, K);
    const Vector<Scalar> clean = Phi_ * theta_star;
    Matrix<Scalar> Eo(n, K);
    for (Index t = 0; t < n; ++t) Eo.row(t) = E.row(order[std::size_t(t)]);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> resid(K);
    for (Index t = 0; t < n; ++t) {
      const Index i = order[std::size_t(t)];
      const auto phi = PhiT_.col(i);
      const Scalar g = Scalar(gamma_[std::size_t(t)]);
      s_bias += e_bias;
      s_var += e_var;
      s_theta += theta;
      e_bias -= (g * phi.dot(e_bias)) * phi;
      resid.noalias() = Eo.row(t) - phi.transpose() * e_var;
      e_var.noalias() += (g * phi) * resid;
      resid.noalias() = (Eo.row(t).array() + clean(i)).matrix() - phi.transpose() * theta;
      theta.noalias() += (g * phi) * resid;
    }
    const Scalar inv = Scalar(1) / Scalar(n);
    const Vector<Scalar> bias_bar = s_bias * inv;
    const Matrix<Scalar> var_bar = s_var * inv;
    const Matrix<Scalar> err_bar = (s_theta * inv).colwise() - theta_star;
    if (!bias_bar.allFinite() || !var_bar.allFinite() || !err_bar.allFinite())
      throw DivergenceError("error recursion became non-finite", std::size_t(n));

    out.bias = hat_form(bias_bar).front();
    out.variance = hat_form(var_bar);
    out.excess = hat_form(err_bar);
    if (!components_) return out;

    // Sigma_hat paths in eigen-coordinates; the null space of Sigma_hat is frozen.
    const Index r = Index(lambda_.size());
    const Vector<Scalar> c0 = -(Vh_.transpose() * theta_star);
    Vector<Scalar> bX_bar = -theta_star;
    bX_bar.noalias() += Vh_ * (hat_avg_.array() - Scalar(1)).matrix().cwiseProduct(c0);
    // eta^vX average: coordinates sum_t gamma_t h_{t,k} eps_t C_{i_t,k} / n.
    Matrix<Scalar> A(n, r);
    for (Index t = 0; t < n; ++t) A.row(t) = hat_h_.row(t).cwiseProduct(C_.row(order[std::size_t(t)]));
    const Matrix<Scalar> vX_bar = Vh_ * (A.transpose() * Eo);

    // Sigma_tilde paths, one scalar recursion per eigenspace.
    Vector<Scalar> bXW_bar = Vector<Scalar>::Zero(p);
    Matrix<Scalar> vXW_bar = Matrix<Scalar>::Zero(p, K);
    Matrix<Scalar> PhiO(n, p);
    for (Index t = 0; t < n; ++t) PhiO.row(t) = Phi_.row(order[std::size_t(t)]);
    for (std::size_t c = 0; c < tilde_.eigenvalues.size(); ++c) {
      bXW_bar += Scalar(tilde_avg_[c]) * tilde_.project(c, -theta_star);
      const Matrix<Scalar> Z = PhiO.transpose() * (tilde_h_.col(Index(c)).asDiagonal() * Eo);
      for (Index k = 0; k < K; ++k) vXW_bar.col(k) += tilde_.project(c, Z.col(k));
    }

    out.B1 = hat_form(Matrix<Scalar>(bias_bar - bX_bar)).front();
    out.B2 = hat_form(Matrix<Scalar>(bX_bar - bXW_bar)).front();
    out.B3 = double(bXW_bar.dot(tilde_.apply(bXW_bar)));
    out.V1 = hat_form(Matrix<Scalar>(var_bar - vX_bar));
    out.V2 = hat_form(Matrix<Scalar>(vX_bar - vXW_bar));
    out.V3 = hat_form(vXW_bar);
    return out;
  }

 private:
  // avg_t prod_{s<=t} (1 - gamma_s lambda) over t = 0..n-1, and the backward
  // weights gamma_s h_s / n with h_s = sum_{t=s}^{n-1} prod_{u=s+1}^{t} (1 - gamma_u lambda).
  void scalar_path(double lambda, double& avg, Scalar* weights, Index stride) const {
    const Index n = samples();
    double prod = 1.0, acc = 0.0;
    for (Index t = 0; t < n; ++t) {
      acc += prod;
      prod *= 1.0 - gamma_[std::size_t(t)] * lambda;
    }
    avg = acc / double(n);
    // step s (1-based) is row s-1; step n never reaches the average.
    double h = 0.0;
    weights[(n - 1) * stride] = Scalar(0);
    for (Index s = n - 1; s >= 1; --s) {
      h = 1.0 + (s < n - 1 ? (1.0 - gamma_[std::size_t(s)] * lambda) * h : 0.0);
      weights[(s - 1) * stride] = Scalar(gamma_[std::size_t(s - 1)] * h / double(n));
    }
  }

  void eigen_setup() {
    const Index n = samples(), p = feature_dim();
    Matrix<Scalar> U;
    Vector<Scalar> ev;
    if (p <= n) {
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sample_cov_features<Scalar>(Phi_));
      ev = es.eigenvalues();
      U = es.eigenvectors();
    } else {
      Matrix<Scalar> G = Matrix<Scalar>::Zero(n, n);
      G.template selfadjointView<Eigen::Lower>().rankUpdate(Phi_, Scalar(1) / Scalar(n));
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(Matrix<Scalar>(G.template selfadjointView<Eigen::Lower>()));
      ev = es.eigenvalues();
      U = es.eigenvectors();
    }
    const Scalar top = ev.size() ? ev.maxCoeff() : Scalar(0);
    std::vector<Index> keep;
    for (Index k = ev.size() - 1; k >= 0; --k)
      if (ev(k) > Scalar(1e-13) * top) keep.push_back(k);
    const Index r = Index(keep.size());
    Vh_.resize(p, r);
    C_.resize(n, r);
    lambda_.resize(std::size_t(r));
    for (Index j = 0; j < r; ++j) {
      const Index k = keep[std::size_t(j)];
      lambda_[std::size_t(j)] = double(ev(k));
      if (p <= n) {
        Vh_.col(j) = U.col(k);
        C_.col(j) = Phi_ * U.col(k);
      } else {
        // Phi^T u / (sqrt(n) s) is the right singular vector for Gram eigenvector u.
        Vh_.col(j) = PhiT_ * U.col(k) / std::sqrt(Scalar(n) * ev(k));
        C_.col(j) = Phi_ * Vh_.col(j);
      }
    }
    hat_avg_.resize(r);
    hat_h_.resize(n, r);
    for (Index j = 0; j < r; ++j) {
      double avg;
      scalar_path(lambda_[std::size_t(j)], avg, hat_h_.col(j).data(), 1);
      hat_avg_(j) = Scalar(avg);
    }
    tilde_avg_.resize(tilde_.eigenvalues.size());
    tilde_h_.resize(n, Index(tilde_.eigenvalues.size()));
    for (std::size_t c = 0; c < tilde_.eigenvalues.size(); ++c)
      scalar_path(tilde_.eigenvalues[c].value, tilde_avg_[c], tilde_h_.col(Index(c)).data(), 1);
  }

  Matrix<Scalar> Phi_, PhiT_;
  CovarianceSummary tilde_;
  std::vector<double> gamma_;
  bool components_;
  std::vector<double> lambda_;
  Matrix<Scalar> Vh_, C_, hat_h_, tilde_h_;
  Vector<Scalar> hat_avg_;
  std::vector<double> tilde_avg_;
};

struct Estimate {
  double mean = 0.0;
  double stderr = 0.0;
};

struct MonteCarloCounts {
  Index n_W = 1;
  Index n_noise = 1;
  Index n_order = 1;
};

struct DecompositionReport {
  Estimate B1, B2, B3, V1, V2, V3, bias, variance, excess;
  Estimate additivity_gap;  // excess - (bias + variance), per cell
  MonteCarloCounts counts;
  Index feature_dim = 0;
  bool components = true;

  double combined_stderr() const {
    return std::sqrt(excess.stderr * excess.stderr + bias.stderr * bias.stderr + variance.stderr * variance.stderr);
  }
};

enum class TargetKind {
  Planted,     // theta* ~ N(0, I) rescaled to target_norm, fresh per W draw
  MinNormFit,  // theta* = Phi^+ fstar from the dataset's clean targets
};

struct DecompositionConfig {
  Activation activation = Activation::ReLU;
  Index m = 1;
  StepSchedule schedule;
  MonteCarloCounts mc;
  TargetKind target = TargetKind::Planted;
  double target_norm = 1.0;
  bool antithetic = true;   // pair each noise draw with its negation
  bool components = true;   // false: only bias, variance and excess
  double svd_tol = 1e-12;
  Seed seed = 0;
};

namespace detail {

struct RunningStats {
  std::vector<double> v;
  void add(double x) { v.push_back(x); }
  double mean() const {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
  }
  double stderr() const {
    if (v.size() < 2) return 0.0;
    const double mu = mean();
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / double(v.size() - 1) / double(v.size()));
  }
};

}  // namespace detail

/// Monte Carlo estimate of the bias/variance decomposition.
///
/// Outer loop over W draws; per draw, inner loop over data orders and noise
/// draws. Draw 0 of the order uses the dataset order, later draws are seeded
/// permutations. Labels for the SGD run are Phi theta* + eps, eps ~ N(0,
/// noise_sd^2) freshly drawn. Standard errors are taken across W draws when
/// there are at least two, otherwise across inner cells (antithetic pairs
/// count as one cell).
template <typename Scalar>
DecompositionReport estimate_terms(const Dataset<Scalar>& data,
                                   const std::function<FeatureMap<Scalar>(Seed)>& map_factory,
                                   const DecompositionConfig& cfg) {
  const MonteCarloCounts& mc = cfg.mc;
  if (mc.n_W < 1 || mc.n_noise < 1 || mc.n_order < 1) throw InvalidArgument("Monte Carlo counts must be >= 1");
  if (cfg.target == TargetKind::MinNormFit && !data.fstar)
    throw InvalidArgument("min-norm target needs clean targets in the dataset");
  const Index n = data.size();
  const CovarianceSummary tilde = expected_cov(cfg.activation, data.X, cfg.m);

  enum Field { B1, B2, B3, V1, V2, V3, BIAS, VAR, EXCESS, GAP, NFIELDS };
  std::vector<detail::RunningStats> per_w(NFIELDS), per_cell(NFIELDS);
  DecompositionReport rep;
  rep.counts = mc;
  rep.components = cfg.components;

  const Index pairs = cfg.antithetic ? (mc.n_noise + 1) / 2 : mc.n_noise;
  for (Index w = 0; w < mc.n_W; ++w) {
    const FeatureMap<Scalar> map = map_factory(derive_seed(cfg.seed, {1, std::uint64_t(w)}));
    Matrix<Scalar> Phi = map.apply_batch(data.X);
    rep.feature_dim = Phi.cols();
    Vector<Scalar> theta_star;
    if (cfg.target == TargetKind::Planted) {
      Rng rng(derive_seed(cfg.seed, {2, std::uint64_t(w)}));
      theta_star = standard_normal<Scalar>(rng, Phi.cols());
      theta_star *= Scalar(cfg.target_norm) / theta_star.norm();
    } else {
      theta_star = min_norm_fit<Scalar>(Phi, *data.fstar, cfg.svd_tol);
    }
    const DecompositionEngine<Scalar> engine(std::move(Phi), tilde, cfg.schedule, cfg.components);

    std::vector<detail::RunningStats> cells(NFIELDS);
    for (Index o = 0; o < mc.n_order; ++o) {
      std::vector<Index> order{};
      order.resize(std::size_t(n));
      std::iota(order.begin(), order.end(), Index(0));
      if (o > 0) {
        Rng rng(derive_seed(cfg.seed, {3, std::uint64_t(w), std::uint64_t(o)}));
        std::shuffle(order.begin(), order.end(), rng);
      }
      Rng rng(derive_seed(cfg.seed, {4, std::uint64_t(w), std::uint64_t(o)}));
      Matrix<Scalar> base = Scalar(data.noise_sd) * standard_normal<Scalar>(rng, n, pairs);
      Matrix<Scalar> E(n, mc.n_noise);
      for (Index k = 0; k < mc.n_noise; ++k)
        E.col(k) = cfg.antithetic ? ((k % 2 == 0) ? base.col(k / 2) : (-base.col(k / 2)).eval()) : base.col(k);
      const CellBlock blk = engine.evaluate(theta_star, order, E);

      // Group the columns of an antithetic pair into one cell.
      for (Index g = 0; g < pairs; ++g) {
        const Index lo = cfg.antithetic ? 2 * g : g;
        const Index hi = cfg.antithetic ? std::min(2 * g + 2, mc.n_noise) : g + 1;
        double acc[NFIELDS] = {};
        for (Index k = lo; k < hi; ++k) {
          const std::size_t kk = std::size_t(k);
          acc[VAR] += blk.variance[kk];
          acc[EXCESS] += blk.excess[kk];
          acc[GAP] += blk.excess[kk] - blk.bias - blk.variance[kk];
          if (cfg.components) acc[V1] += blk.V1[kk], acc[V2] += blk.V2[kk], acc[V3] += blk.V3[kk];
        }
        const double cnt = double(hi - lo);
        for (double& a : acc) a /= cnt;
        acc[B1] = blk.B1, acc[B2] = blk.B2, acc[B3] = blk.B3, acc[BIAS] = blk.bias;
        for (int f = 0; f < NFIELDS; ++f) cells[std::size_t(f)].add(acc[f]), per_cell[std::size_t(f)].add(acc[f]);
      }
    }
    for (int f = 0; f < NFIELDS; ++f) per_w[std::size_t(f)].add(cells[std::size_t(f)].mean());
  }

  auto est = [&](int f) {
    const auto& src = mc.n_W >= 2 ? per_w[std::size_t(f)] : per_cell[std::size_t(f)];
    return Estimate{per_w[std::size_t(f)].mean(), src.stderr()};
  };
  rep.B1 = est(B1), rep.B2 = est(B2), rep.B3 = est(B3);
  rep.V1 = est(V1), rep.V2 = est(V2), rep.V3 = est(V3);
  rep.bias = est(BIAS), rep.variance = est(VAR), rep.excess = est(EXCESS), rep.additivity_gap = est(GAP);
  return rep;
}

/// Convenience overload drawing maps with build_feature_map.
template <typename Scalar>
DecompositionReport estimate_terms(const Dataset<Scalar>& data, const DecompositionConfig& cfg) {
  const Index d = data.dim();
  const Index m = cfg.m;
  const Activation act = cfg.activation;
  return estimate_terms<Scalar>(data, [=](Seed s) { return FeatureMap<Scalar>(s, m, d, act); }, cfg);
}

/// Ordinary least-squares slope of log(y) on log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope needs >= 2 matching points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= double(x.size());
  my /= double(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct RateProbeConfig {
  Activation activation = Activation::ReLU;
  double feature_ratio = 2.0;  // m / n
  double input_ratio = 0.5;    // d / n
  StepSchedule schedule;
  Index n_W = 4;
  Index n_order = 1;
  double target_norm = 1.0;
  Seed seed = 0;
};

struct RateProbeResult {
  std::vector<Index> n;
  std::vector<Estimate> bias;
  std::vector<Index> dropped;  // grid points with non-positive bias
  double slope = 0.0;
};

/// Bias on isotropic Gaussian inputs with a planted target, m/n and d/n held fixed.
inline RateProbeResult rate_probe_bias(const RateProbeConfig& cfg, const std::vector<Index>& n_grid) {
  if (n_grid.size() < 4) throw InvalidArgument("rate probe needs at least 4 grid points");
  if (double(*std::max_element(n_grid.begin(), n_grid.end())) < 8.0 * double(*std::min_element(n_grid.begin(), n_grid.end())))
    throw InvalidArgument("rate probe grid must span at least a factor of 8");
  RateProbeResult out;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const Index n = n_grid[i];
    const Index d = std::max<Index>(1, Index(std::llround(cfg.input_ratio * double(n))));
    const Index m = std::max<Index>(1, Index(std::llround(cfg.feature_ratio * double(n))));
    Dataset<double> data;
    data.X = gen_inputs<double>(derive_seed(cfg.seed, {10, std::uint64_t(n)}), n, d, CovSpec::identity());
    data.y = Vector<double>::Zero(n);
    DecompositionConfig dc;
    dc.activation = cfg.activation;
    dc.m = m;
    dc.schedule = cfg.schedule;
    dc.mc = {cfg.n_W, 1, cfg.n_order};
    dc.target_norm = cfg.target_norm;
    dc.components = false;
    dc.seed = derive_seed(cfg.seed, {11, std::uint64_t(n)});
    const DecompositionReport r = estimate_terms<double>(data, dc);
    out.n.push_back(n);
    out.bias.push_back(r.bias);
    if (r.bias.mean > 0.0) {
      xs.push_back(double(n));
      ys.push_back(r.bias.mean);
    } else {
      out.dropped.push_back(n);
    }
  }
  out.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : NAN;
  return out;
}

struct ShapePoint {
  double ratio = 0.0;  // m / n
  Index m = 0;
  DecompositionReport report;
};

/// Decomposition estimates along a grid of m/n ratios at fixed n.
template <typename Scalar>
std::vector<ShapePoint> shape_probe_variance(const Dataset<Scalar>& data, const std::vector<double>& ratio_grid,
                                             DecompositionConfig cfg) {
  if (ratio_grid.empty()) throw InvalidArgument("shape probe needs a non-empty ratio grid");
  std::vector<ShapePoint> out;
  const Index n = data.size();
  const Seed base = cfg.seed;
  for (std::size_t i = 0; i < ratio_grid.size(); ++i) {
    ShapePoint pt;
    pt.m = std::max<Index>(1, Index(std::llround(ratio_grid[i] * double(n))));
    pt.ratio = double(pt.m) / double(n);
    cfg.m = pt.m;
    cfg.seed = derive_seed(base, {std::uint64_t(pt.m)});
    pt.report = estimate_terms<Scalar>(data, cfg);
    out.push_back(std::move(pt));
  }
  return out;
}

struct IsotonicViolation {
  double worst_ratio = 0.0;     // max over i<j of violation / combined stderr
  double worst_increase = 0.0;  // raw size of that violation
  std::size_t from = 0, to = 0;
};

/// Largest violation of the requested monotone trend over all ordered pairs,
/// measured against the pair's combined standard error. A trend holds "within
/// k stderr" when worst_ratio <= k.
inline IsotonicViolation isotonic_violation(const std::vector<Estimate>& pts, bool increasing) {
  IsotonicViolation out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double rise = increasing ? pts[i].mean - pts[j].mean : pts[j].mean - pts[i].mean;
      if (rise <= 0.0) continue;
      const double se = std::hypot(pts[i].stderr, pts[j].stderr);
      const double ratio = se > 0.0 ? rise / se : INFINITY;
      if (ratio > out.worst_ratio) out = {ratio, rise, i, j};
    }
  return out;
}

}  // namespace rfsgd
