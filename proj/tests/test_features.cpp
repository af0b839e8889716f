#include <doctest.h>

#include "rfsgd/features.hpp"

using namespace rfsgd;

TEST_CASE("relu map on hand-built weights") {
  Matrix<double> W(2, 2);
  W << 1, 0, 0, 1;
  const auto map = FeatureMap<double>::from_weights(W, Activation::ReLU);
  Vector<double> x(2);
  x << 2, -1;
  // z = (2, -1)/sqrt(2), relu -> (sqrt 2, 0), then / sqrt(2)
  const Vector<double> phi = map.apply(x);
  CHECK(phi(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(phi(1) == 0.0);
}

TEST_CASE("identity map is a scaled projection") {
  Matrix<double> W(3, 2);
  W << 1, 2, -1, 0, 3, 1;
  const auto map = FeatureMap<double>::from_weights(W, Activation::Identity);
  Vector<double> x(2);
  x << 0.5, -2;
  const Vector<double> expect = W * x / std::sqrt(2.0) / std::sqrt(3.0);
  CHECK((map.apply(x) - expect).norm() < 1e-15);
}

TEST_CASE("cossin layout and unit norm") {
  const FeatureMap<double> map(7, 16, 5, Activation::CosSin);
  CHECK(map.feature_dim() == 32);
  CHECK(map.num_features() == 16);
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const Vector<double> x = 4.0 * standard_normal<double>(rng, 5);
    const Vector<double> phi = map.apply(x);
    CHECK(phi.squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
    const double z = map.weights().row(3).dot(x) / std::sqrt(5.0);
    CHECK(phi(3) == doctest::Approx(std::cos(z) / 4.0));
    CHECK(phi(16 + 3) == doctest::Approx(std::sin(z) / 4.0));
  }
}

TEST_CASE("batch rows equal single applications") {
  for (Activation a : {Activation::ReLU, Activation::Identity, Activation::CosSin}) {
    const FeatureMap<double> map(11, 9, 4, a);
    Rng rng(5);
    const Matrix<double> X = standard_normal<double>(rng, 6, 4);
    const Matrix<double> Phi = map.apply_batch(X);
    for (Index i = 0; i < X.rows(); ++i) CHECK((Phi.row(i).transpose() - map.apply(X.row(i).transpose())).norm() < 1e-14);
  }
}

TEST_CASE("seeded weights are reproducible") {
  const FeatureMap<double> a(42, 8, 3, Activation::ReLU), b(42, 8, 3, Activation::ReLU), c(43, 8, 3, Activation::ReLU);
  CHECK(a.weights() == b.weights());
  CHECK(a.weights() != c.weights());
}

TEST_CASE("float instantiation") {
  const FeatureMap<float> map(1, 4, 3, Activation::CosSin);
  Vector<float> x(3);
  x << 1.f, 2.f, 3.f;
  CHECK(map.apply(x).squaredNorm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("shape errors") {
  const FeatureMap<double> map(1, 4, 3, Activation::ReLU);
  CHECK_THROWS_AS(map.apply(Vector<double>::Zero(2)), DimensionError);
  CHECK_THROWS_AS(map.apply_batch(Matrix<double>::Zero(5, 4)), DimensionError);
  CHECK_THROWS_AS(FeatureMap<double>(1, 0, 3, Activation::ReLU), InvalidArgument);
  CHECK_THROWS_AS(parse_activation("tanh"), InvalidArgument);
  CHECK(parse_activation("relu") == Activation::ReLU);
}
