#include <doctest.h>

#include <numbers>

#include "rfsgd/data.hpp"
#include "rfsgd/spectral.hpp"

using namespace rfsgd;

TEST_CASE("relu closed form for m = 40") {
  const CovarianceSummary s = expected_cov_relu(1.0, 40);
  const auto clusters = cluster_eigenvalues(symmetric_eigenvalues<double>(assemble_expected_cov<double>(s)));
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].multiplicity == 39);
  CHECK(clusters[1].multiplicity == 1);
  CHECK(std::abs(clusters[1].value - 0.16767606951459796) < 1e-12);
  CHECK(std::abs(clusters[0].value - 8.521126422702616e-3) < 1e-12);
  CHECK(s.trace == doctest::Approx(0.5));
}

TEST_CASE("identity closed form") {
  const Matrix<double> X = gen_inputs<double>(1, 50, 4, CovSpec::identity());
  const CovarianceSummary s = expected_cov(Activation::Identity, X, 6);
  CHECK(s.b == 0.0);
  CHECK(s.a == doctest::Approx(X.squaredNorm() / 50.0 / 4.0 / 6.0));
}

TEST_CASE("gauss blocks have three clusters") {
  const Matrix<double> X = gen_inputs<double>(2, 30, 5, CovSpec::identity());
  const CovarianceSummary s = expected_cov_gauss<double>(X, 8);
  CHECK(s.trace == doctest::Approx(1.0));
  const auto clusters = cluster_eigenvalues(symmetric_eigenvalues<double>(assemble_expected_cov<double>(s)));
  REQUIRE(clusters.size() == 3);
  std::vector<Index> mult;
  for (const auto& c : clusters) mult.push_back(c.multiplicity);
  std::sort(mult.begin(), mult.end());
  CHECK(mult == std::vector<Index>{1, 7, 8});
}

TEST_CASE("summary operators agree with the assembled matrix") {
  const Matrix<double> X = gen_inputs<double>(3, 20, 3, CovSpec::identity());
  for (const CovarianceSummary& s : {expected_cov_relu(1.3, 7), expected_cov_gauss<double>(X, 7)}) {
    const Matrix<double> S = assemble_expected_cov<double>(s);
    Rng rng(1);
    const Vector<double> v = standard_normal<double>(rng, s.dim());
    CHECK((s.apply(v) - S * v).norm() < 1e-14);
    CHECK((s.apply_inverse(S * v) - v).norm() < 1e-10 * v.norm());
    Vector<double> sum = Vector<double>::Zero(s.dim());
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) sum += s.project(k, v);
    CHECK((sum - v).norm() < 1e-13);
  }
}

TEST_CASE("half-range rule moments") {
  const GaussRule r = half_range_hermite(64);
  double mass = 0.0;
  for (double w : r.weights) mass += w;
  CHECK(mass == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gaussian_expectation([](double z) { return z * z; }, 2.0, r) == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(gaussian_expectation([](double z) { return z > 0 ? z : 0.0; }, 1.0, r) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-13));
  CHECK(gaussian_expectation([](double z) { return std::cos(z); }, 1.5, r) ==
        doctest::Approx(std::exp(-1.125)).epsilon(1e-12));
  CHECK_THROWS_AS(half_range_hermite(1), InvalidArgument);
}

TEST_CASE("quadrature reproduces the closed forms") {
  const Matrix<double> X = gen_inputs<double>(4, 25, 6, CovSpec::power_law(0.5));
  const double ratio = X.squaredNorm() / 25.0 / 6.0;
  const CovarianceSummary q = expected_cov_quadrature<double>(Activation::ReLU, X, 10);
  const CovarianceSummary c = expected_cov_relu(ratio, 10);
  CHECK(std::abs(q.a - c.a) < 1e-12);
  CHECK(std::abs(q.b - c.b) < 1e-12);
  const CovarianceSummary qg = expected_cov_quadrature<double>(Activation::CosSin, X, 10);
  const CovarianceSummary g = expected_cov_gauss<double>(X, 10);
  CHECK(std::abs(qg.a - g.a) < 1e-12);
  CHECK(std::abs(qg.b - g.b) < 1e-12);
  CHECK(std::abs(qg.a2 - g.a2) < 1e-12);
}

TEST_CASE("cossin sample covariance has unit trace") {
  const Matrix<double> X = gen_inputs<double>(5, 40, 6, CovSpec::identity());
  std::vector<Seed> seeds;
  for (Seed s = 0; s < 30; ++s) seeds.push_back(s);
  const TraceConcentration tc = trace_concentration<double>(seeds, 12, X, Activation::CosSin);
  for (double t : tc.traces) CHECK(std::abs(t - 1.0) < 1e-13);
  CHECK(tc.sd < 1e-13);
  CHECK_THROWS_AS(trace_concentration<double>({1, 2}, 12, X, Activation::CosSin), InvalidArgument);
}

TEST_CASE("sample covariance concentrates on its expectation") {
  const Matrix<double> X = gen_inputs<double>(6, 60, 10, CovSpec::identity());
  const auto few = second_moment_diagnostic<double>(Activation::ReLU, X, 10, 4, 1);
  const auto many = second_moment_diagnostic<double>(Activation::ReLU, X, 10, 400, 1);
  CHECK(many.mean_cov_distance < few.mean_cov_distance);
  CHECK(many.mean_cov_distance < 0.1 * many.top_eigenvalue);
  CHECK(many.inverse_trace > 0.0);
}

TEST_CASE("clustering tolerance") {
  const auto c = cluster_eigenvalues({1.0, 1.0 + 1e-12, 2.0, 2.0, 2.0});
  REQUIRE(c.size() == 2);
  CHECK(c[0].multiplicity == 2);
  CHECK(c[1].multiplicity == 3);
}
