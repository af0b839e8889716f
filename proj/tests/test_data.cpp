#include <doctest.h>

#include "rfsgd/data.hpp"

using namespace rfsgd;

TEST_CASE("identity inputs are standard normal and seeded") {
  const Matrix<double> X = gen_inputs<double>(9, 4000, 3, CovSpec::identity());
  CHECK(X == gen_inputs<double>(9, 4000, 3, CovSpec::identity()));
  const Matrix<double> C = X.transpose() * X / 4000.0;
  CHECK((C - Matrix<double>::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("power-law covariance diagonal") {
  const Matrix<double> X = gen_inputs<double>(2, 20000, 4, CovSpec::power_law(1.0));
  for (Index j = 0; j < 4; ++j) {
    const double var = X.col(j).squaredNorm() / 20000.0;
    CHECK(var == doctest::Approx(1.0 / double(j + 1)).epsilon(0.05));
  }
}

TEST_CASE("explicit covariance is reproduced") {
  Matrix<double> S(2, 2);
  S << 2.0, 0.8, 0.8, 1.0;
  const Matrix<double> X = gen_inputs<double>(4, 40000, 2, CovSpec::explicit_matrix(S));
  const Matrix<double> C = X.transpose() * X / 40000.0;
  CHECK((C - S).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("bad covariances are rejected") {
  Matrix<double> asym(2, 2), indefinite(2, 2);
  asym << 1, 0.5, 0, 1;
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(gen_inputs<double>(1, 3, 2, CovSpec::explicit_matrix(asym)), InvalidArgument);
  CHECK_THROWS_AS(gen_inputs<double>(1, 3, 2, CovSpec::explicit_matrix(indefinite)), InvalidArgument);
  CHECK_THROWS_AS(gen_inputs<double>(1, 3, 3, CovSpec::explicit_matrix(Matrix<double>::Identity(2, 2))),
                  InvalidArgument);
  CHECK_THROWS_AS(CovSpec::power_law(-1.0), InvalidArgument);
}

TEST_CASE("laplace target on a single anchor") {
  Matrix<double> Xtr(1, 1), Xev(2, 1);
  Xtr << 0.0;
  Xev << 1.0, -2.0;
  const auto t = gen_target_laplace<double>(3, Xtr, Xev, 1.0, 0.0);
  const double w = t.weights(0);
  CHECK(t.fstar_train(0) == doctest::Approx(w));
  CHECK(t.fstar_eval(0) == doctest::Approx(std::exp(-1.0) * w));
  CHECK(t.fstar_eval(1) == doctest::Approx(std::exp(-2.0) * w));
  CHECK(t.y_train == t.fstar_train);
}

TEST_CASE("laplace noise has the requested scale") {
  const Matrix<double> X = gen_inputs<double>(1, 3000, 2, CovSpec::identity());
  const auto t = gen_target_laplace<double>(5, X, Matrix<double>(0, 2), 2.0, 0.5);
  const double sd = std::sqrt((t.y_train - t.fstar_train).squaredNorm() / 3000.0);
  CHECK(sd == doctest::Approx(0.5).epsilon(0.05));
  CHECK_THROWS_AS(gen_target_laplace<double>(5, X, X, 0.0, 0.5), InvalidArgument);
}

TEST_CASE("planted target lies in the model class") {
  const FeatureMap<double> map(3, 10, 4, Activation::ReLU);
  const Matrix<double> X = gen_inputs<double>(6, 12, 4, CovSpec::identity());
  const auto t = plant_rf_target(map, 8, 2.5, X);
  CHECK(t.theta_star.norm() == doctest::Approx(2.5));
  CHECK((t.fstar - map.apply_batch(X) * t.theta_star).norm() < 1e-14);
  CHECK_THROWS_AS(plant_rf_target(map, 8, 0.0, X), InvalidArgument);
}
