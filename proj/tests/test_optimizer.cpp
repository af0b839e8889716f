#include <doctest.h>

#include "oracles.hpp"
#include "rfsgd/data.hpp"
#include "rfsgd/spectral.hpp"

using namespace rfsgd;

namespace {

struct Problem {
  Matrix<double> Phi;
  Vector<double> y;
};

Problem problem(Seed seed, Index n, Index m, Index d, Activation a = Activation::ReLU) {
  const FeatureMap<double> map(seed, m, d, a);
  const Matrix<double> X = gen_inputs<double>(seed + 1, n, d, CovSpec::identity());
  Rng rng(seed + 2);
  return {map.apply_batch(X), standard_normal<double>(rng, n)};
}

}  // namespace

TEST_CASE("step sizes") {
  const StepSchedule s(0.8, 0.5);
  CHECK(step_size(s, 1) == 0.8);
  CHECK(step_size(s, 4) == doctest::Approx(0.4));
  CHECK(step_sizes(s, 3).size() == 3);
  CHECK_THROWS_AS(step_size(s, 0), InvalidArgument);
  CHECK_THROWS_AS(StepSchedule(1.0, 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(StepSchedule(0.0, 0.0).validate(), InvalidArgument);
}

TEST_CASE("averaged SGD matches the dense recursion") {
  const Problem pr = problem(1, 5, 4, 3);
  for (double zeta : {0.0, 0.5, 0.9}) {
    const StepSchedule s(0.7, zeta);
    const auto out = sgd_average_features<double>(pr.Phi, pr.y, s, InitScheme::zero());
    const Vector<double> ref = oracle::dense_sgd_average(pr.Phi, pr.y, s, Vector<double>::Zero(4));
    CHECK((out.theta_bar - ref).norm() <= 1e-12 * (1.0 + ref.norm()));
  }
  const StepSchedule s(0.5, 0.0);
  const auto c = sgd_average_features<double>(pr.Phi, pr.y, s, InitScheme::constant(0.3));
  CHECK((c.theta_bar - oracle::dense_sgd_average(pr.Phi, pr.y, s, Vector<double>::Constant(4, 0.3))).norm() < 1e-12);
}

TEST_CASE("trajectory records every iterate") {
  const Problem pr = problem(2, 6, 3, 2);
  SgdOptions o;
  o.record_trajectory = true;
  o.epochs = 2;
  const auto out = sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(0.5, 0.0), InitScheme::zero(), o);
  REQUIRE(out.trajectory);
  CHECK(out.trajectory->size() == 13);
  Vector<double> sum = Vector<double>::Zero(3);
  for (std::size_t t = 0; t < 12; ++t) sum += (*out.trajectory)[t];
  CHECK((sum / 12.0 - out.theta_bar).norm() < 1e-14);
  CHECK(out.trajectory->back() == out.theta_last);
}

TEST_CASE("min-norm fit") {
  SUBCASE("over-parameterized interpolates with the row-space solution") {
    const Problem pr = problem(3, 10, 30, 5);
    const Vector<double> th = min_norm_fit<double>(pr.Phi, pr.y);
    CHECK((pr.Phi * th - pr.y).squaredNorm() / 10.0 < 1e-20);
    const Matrix<double> G = pr.Phi * pr.Phi.transpose();
    const Vector<double> ref = pr.Phi.transpose() * G.ldlt().solve(pr.y);
    CHECK((th - ref).norm() < 1e-8 * ref.norm());
  }
  SUBCASE("under-parameterized equals least squares") {
    const Problem pr = problem(4, 40, 6, 5);
    const Vector<double> th = min_norm_fit<double>(pr.Phi, pr.y);
    const Vector<double> ref = (pr.Phi.transpose() * pr.Phi).ldlt().solve(pr.Phi.transpose() * pr.y);
    CHECK((th - ref).norm() < 1e-10 * ref.norm());
  }
  SUBCASE("rank deficiency keeps the minimum norm") {
    Matrix<double> Phi(2, 2);
    Phi << 1, 1, 1, 1;
    Vector<double> y(2);
    y << 2, 2;
    const Vector<double> th = min_norm_fit<double>(Phi, y);
    CHECK(th(0) == doctest::Approx(1.0));
    CHECK(th(1) == doctest::Approx(1.0));
  }
}

TEST_CASE("near-min-norm start without noise stays at an interpolator") {
  const Problem pr = problem(5, 8, 20, 4);
  const Vector<double> th = min_norm_fit<double>(pr.Phi, pr.y);
  const auto out =
      sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(1.0, 0.5), InitScheme::near_min_norm(0.0));
  CHECK((out.theta_bar - th).norm() < 1e-10);
}

TEST_CASE("near-min-norm perturbation is seeded") {
  const Problem pr = problem(6, 8, 20, 4);
  SgdOptions o;
  o.seed = 3;
  const auto a = sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(1.0, 0.5), InitScheme::near_min_norm(1.0), o);
  const auto b = sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(1.0, 0.5), InitScheme::near_min_norm(1.0), o);
  CHECK(a.theta_bar == b.theta_bar);
}

TEST_CASE("stability warning and divergence") {
  const Problem pr = problem(7, 30, 10, 3, Activation::CosSin);
  CHECK_FALSE(sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(0.9, 0.0), InitScheme::zero()).stability_warning);
  CHECK(sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(1.5, 0.0), InitScheme::zero()).stability_warning);
  SgdOptions o;
  o.divergence_threshold = 1e3;
  try {
    sgd_average_features<double>(pr.Phi, pr.y, StepSchedule(40.0, 0.0), InitScheme::zero(), o);
    FAIL("no divergence reported");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 1);
  }
}

TEST_CASE("risk helpers") {
  const FeatureMap<double> map(1, 5, 2, Activation::Identity);
  const Matrix<double> X = gen_inputs<double>(2, 7, 2, CovSpec::identity());
  const Vector<double> th = Vector<double>::Constant(5, 0.2);
  const Vector<double> y = map.apply_batch(X) * th;
  CHECK(test_mse<double>(th, map, X, y) == doctest::Approx(0.0));
  const Matrix<double> S = sample_cov<double>(map, X);
  const Vector<double> zero = Vector<double>::Zero(5);
  CHECK(excess_risk<double>(th, zero, S) == doctest::Approx(y.squaredNorm() / 7.0));
  Matrix<double> bad = S;
  bad(0, 1) += 1.0;
  CHECK_THROWS_AS(excess_risk<double>(th, zero, bad), InvalidArgument);
  CHECK_THROWS_AS(test_mse<double>(Vector<double>::Zero(4), map, X, y), DimensionError);
}
