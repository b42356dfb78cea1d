#include <cmath>

#include "doctest.h"
#include "mweica/rng.hpp"
#include "mweica/weighted_stats.hpp"

using namespace mweica;

namespace {

Matrixd cross_2d() {
  Matrixd x(4, 2);
  x << 1, 0, -1, 0, 0, 1, 0, -1;
  return x;
}

WeightVector<double> log_w(std::initializer_list<double> vals) {
  WeightVector<double> w;
  w.log_weights.resize(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double v : vals) w.log_weights(i++) = v;
  return w;
}

}  // namespace

TEST_CASE("sample_mean on small sets") {
  Matrixd a(2, 2);
  a << 0, 0, 2, 2;
  CHECK(sample_mean(a).isApprox(Vectord::Constant(2, 1.0)));

  CHECK(sample_mean(cross_2d()).norm() == doctest::Approx(0.0));

  Matrixd c(3, 2);
  c << 1, 2, 3, 4, 5, 6;
  Vectord expected(2);
  expected << 3, 4;
  CHECK(sample_mean(c).isApprox(expected));
}

TEST_CASE("sample_covariance uses the population convention") {
  Matrixd diag_case = cross_2d();
  Matrixd cov = sample_covariance(diag_case);
  Matrixd expected = Matrixd::Zero(2, 2);
  expected.diagonal() << 0.5, 0.5;
  CHECK((cov - expected).cwiseAbs().maxCoeff() < 1e-15);

  Matrixd identical(2, 2);
  identical << 3, 4, 3, 4;
  CHECK(sample_covariance(identical).cwiseAbs().maxCoeff() == 0.0);

  Matrixd two(2, 2);
  two << 0, 0, 1, 1;
  Matrixd quarter(2, 2);
  quarter << 0.25, 0.25, 0.25, 0.25;
  CHECK(sample_covariance(two).isApprox(quarter));

  SUBCASE("strict positive definiteness rejects constant columns") {
    Matrixd constant_col(3, 2);
    constant_col << 1, 5, 2, 5, 3, 5;
    CHECK_NOTHROW(sample_covariance(constant_col));
    CHECK_THROWS_AS(sample_covariance(constant_col, true), DegenerateData);
  }
}

TEST_CASE("gaussian_log_weights") {
  SUBCASE("mode of the weighting sits at the center") {
    Matrixd x(5, 1);
    x << 0, 1, -2, 0.5, 3;
    Vectord m = Vectord::Zero(1);
    Matrixd sigma = Matrixd::Identity(1, 1);
    const Vectord w = gaussian_log_weights(x, m, sigma).normalized();
    Index argmax = 0;
    w.maxCoeff(&argmax);
    CHECK(argmax == 0);
  }

  SUBCASE("equal Mahalanobis distances give equal weights") {
    Vectord m = Vectord::Zero(2);
    Matrixd sigma = Matrixd::Zero(2, 2);
    sigma.diagonal() << 0.5, 0.5;
    const Vectord w = gaussian_log_weights(cross_2d(), m, sigma).normalized();
    CHECK((w.array() - 0.25).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("one-dimensional ratio against the closed form") {
    Matrixd x(2, 1);
    x << 0, 1;
    Vectord m = Vectord::Zero(1);
    Matrixd sigma = Matrixd::Identity(1, 1);
    const Vectord w = gaussian_log_weights(x, m, sigma, 0.0).normalized();
    CHECK(w(0) == doctest::Approx(0.62245933120185459).epsilon(1e-12));
    CHECK(w(1) == doctest::Approx(0.37754066879814541).epsilon(1e-12));
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("singular weighting covariance is rejected") {
    Matrixd x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    Vectord m = Vectord::Zero(2);
    Matrixd singular = Matrixd::Zero(2, 2);
    CHECK_THROWS_AS(gaussian_log_weights(x, m, singular, 0.0),
                    SingularWeightCovariance);
  }
}

TEST_CASE("weighted_mean") {
  Matrixd x(2, 1);
  x << 0, 2;

  CHECK(weighted_mean(x, log_w({0.0, 0.0}))(0) == doctest::Approx(1.0));

  CHECK(weighted_mean(x, log_w({std::log(3.0), std::log(1.0)}))(0) ==
        doctest::Approx(0.5).epsilon(1e-14));

  Matrixd y(3, 2);
  y << 1, 2, 3, 4, 5, 6;
  const Vectord point_mass = weighted_mean(y, log_w({-800.0, 0.0, -800.0}));
  CHECK(point_mass(0) == doctest::Approx(3.0));
  CHECK(point_mass(1) == doctest::Approx(4.0));
}

TEST_CASE("weighted_covariance") {
  SUBCASE("uniform weights reduce to the sample covariance") {
    const Matrixd x = cross_2d();
    const Matrixd wc = weighted_covariance(x, log_w({0, 0, 0, 0}));
    CHECK((wc - sample_covariance(x)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("one-hot weight collapses to a point") {
    Matrixd y(3, 2);
    y << 1, 2, 3, 4, 5, 6;
    const Matrixd wc = weighted_covariance(y, log_w({0.0, -800.0, -800.0}));
    CHECK(wc.cwiseAbs().maxCoeff() < 1e-300);
  }

  SUBCASE("hand-computed one-dimensional case") {
    Matrixd x(3, 1);
    x << 0, 1, 2;
    const auto w = log_w({std::log(1.0), std::log(2.0), std::log(1.0)});
    CHECK(weighted_mean(x, w)(0) == doctest::Approx(1.0));
    CHECK(weighted_covariance(x, w)(0, 0) ==
          doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("diag_error closed forms") {
  Matrixd d23 = Matrixd::Zero(2, 2);
  d23.diagonal() << 2, 3;
  CHECK(diag_error(d23) == 0.0);

  Matrixd a(2, 2);
  a << 2, 1, 1, 2;
  CHECK(diag_error(a) == doctest::Approx(0.28768207245178085).epsilon(1e-12));

  Matrixd b(2, 2);
  b << 1, 0.9, 0.9, 1;
  CHECK(diag_error(b) == doctest::Approx(1.6607312068216509).epsilon(1e-12));

  SUBCASE("rejects non positive definite input") {
    Matrixd indefinite(2, 2);
    indefinite << 1, 2, 2, 1;
    CHECK_THROWS_AS(diag_error(indefinite), NotPositiveDefinite);
    Matrixd negative_diag(2, 2);
    negative_diag << -1, 0, 0, 1;
    CHECK_THROWS_AS(diag_error(negative_diag), NotPositiveDefinite);
  }
}

TEST_CASE("effective_sample_size") {
  CHECK(effective_sample_size(log_w({0, 0, 0, 0, 0})) ==
        doctest::Approx(5.0).epsilon(1e-12));
  CHECK(effective_sample_size(log_w({0.0, -800.0, -800.0})) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(effective_sample_size(log_w({std::log(3.0), 0.0})) ==
        doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("regularize") {
  Matrixd eye = Matrixd::Identity(2, 2);
  CHECK(regularize(eye, 0.0).isApprox(eye));

  Matrixd r(2, 2);
  r << 2, 0, 0, 0;
  Matrixd expected(2, 2);
  expected << 2.1, 0, 0, 0.1;
  CHECK(regularize(r, 0.1).isApprox(expected));

  CHECK(regularize(eye, 1.0).isApprox(Matrixd(2.0 * eye)));

  CHECK_THROWS_AS(regularize(Matrixd(Matrixd::Zero(2, 2)), 0.1), ZeroMatrix);
}

TEST_CASE("normalized weights sum to one") {
  Rng rng(7);
  WeightVector<double> w;
  w.log_weights = -random_normal_matrix(100, 1, rng).cwiseAbs();
  CHECK(w.normalized().sum() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(w.normalized().minCoeff() >= 0.0);
}

TEST_CASE("affine equivariance of the weighted covariance") {
  Rng rng(11);
  const Index k = 500;
  const Index d = 3;
  for (int trial = 0; trial < 5; ++trial) {
    const Matrixd x = random_normal_matrix(k, d, rng) +
                      random_normal_matrix(k, d, rng).cwiseProduct(
                          random_normal_matrix(k, d, rng));
    Matrixd a;
    do {
      a = random_normal_matrix(d, d, rng);
    } while (std::abs(a.determinant()) < 0.1);
    const Vectord b = random_normal_matrix(d, 1, rng);
    const Vectord m = x.row(3).transpose();
    const Matrixd sigma = sample_covariance(x);

    const Matrixd y = (x * a.transpose()).rowwise() + b.transpose();
    const Vectord m_y = a * m + b;
    const Matrixd sigma_y = a * sigma * a.transpose();

    const Matrixd cov_x =
        weighted_covariance(x, gaussian_log_weights(x, m, sigma));
    const Matrixd cov_y =
        weighted_covariance(y, gaussian_log_weights(y, m_y, sigma_y));
    const Matrixd pushed = a * cov_x * a.transpose();
    const double rel = (cov_y - pushed).norm() / pushed.norm();
    CHECK(rel < 1e-8);
  }
}

TEST_CASE("diag_error invariances") {
  Matrixd a(3, 3);
  a << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;

  Matrixd p = Matrixd::Zero(3, 3);
  p(0, 2) = p(1, 0) = p(2, 1) = 1;
  Matrixd dd = Matrixd::Zero(3, 3);
  dd.diagonal() << 0.3, 2.0, 5.0;

  const Matrixd conj = dd * p.transpose() * a * p * dd;
  CHECK(diag_error(conj) == doctest::Approx(diag_error(a)).epsilon(1e-12));

  Matrixd diag_only = Matrixd::Zero(4, 4);
  diag_only.diagonal() << 1, 2, 3, 4;
  CHECK(diag_error(diag_only) < 1e-12);
}

TEST_CASE("log weight shift invariance") {
  Rng rng(3);
  Matrixd x = random_normal_matrix(50, 2, rng);
  WeightVector<double> w;
  w.log_weights = -random_normal_matrix(50, 1, rng).cwiseAbs();
  WeightVector<double> shifted;
  shifted.log_weights = w.log_weights.array() + 123.456;

  CHECK((weighted_mean(x, w) - weighted_mean(x, shifted)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((weighted_covariance(x, w) - weighted_covariance(x, shifted))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("weighted covariance of independent coordinates is near diagonal") {
  // Independent non-Gaussian columns: off-diagonals of any weighted
  // covariance vanish in population; sampling noise is O(1/sqrt(k)).
  const Index k = 20000;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Matrixd x(k, 2);
    for (Index i = 0; i < k; ++i) {
      x(i, 0) = rng.uniform(-1.0, 1.0);
      x(i, 1) = rng.laplace(1.0);
    }
    const Matrixd sigma = sample_covariance(x);
    const Vectord m = x.row(17).transpose();
    const Matrixd wc =
        weighted_covariance(x, gaussian_log_weights(x, m, sigma));
    const double tol =
        5.0 / std::sqrt(double(k)) * std::sqrt(wc(0, 0) * wc(1, 1));
    CHECK(std::abs(wc(0, 1)) < tol);
  }
}
