#include <cmath>
#include <vector>

#include "doctest.h"
#include "mweica/harness.hpp"
#include "mweica/ica.hpp"
#include "mweica/independence.hpp"
#include "mweica/rng.hpp"
#include "mweica/weighted_stats.hpp"

using namespace mweica;

namespace {

Matrixd rotate_45(const Matrixd& s) {
  const double c = std::sqrt(0.5);
  Matrixd r(2, 2);
  r << c, -c, c, c;
  return s * r.transpose();
}

}  // namespace

TEST_CASE("independent Gaussian coordinates score near zero") {
  Rng rng(1);
  Matrixd x = random_normal_matrix(50000, 2, rng);
  x.col(1) *= 2.5;  // axis-aligned scaling keeps the coordinates independent
  const auto report = independence_index(x, Index(16), 3);
  CHECK(report.index < 0.01);
  CHECK(report.n_used == 16);
  CHECK(report.seed == 3);
}

TEST_CASE("rotation of independent uniforms raises the index") {
  int raised = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrixd s = synth_sources(SourceKind::uniform, 4000, 2, seed).data;
    const Matrixd rotated = rotate_45(s);
    // Same weight rows on both sides makes the comparison paired.
    std::vector<Index> rows;
    Rng rng(Rng::mix(seed, 5));
    for (const Index r : rng.sample_without_replacement(4000, 12))
      rows.push_back(r);
    const auto base = independence_index(s, rows);
    const auto turned = independence_index(rotated, rows);
    if (turned.index > base.index) ++raised;
  }
  CHECK(raised >= 19);
}

TEST_CASE("a single weight point reduces to one diagonalization error") {
  const Matrixd x = synth_sources(SourceKind::laplace, 2000, 2, 9).data;
  const Index row = 137;
  const auto report = independence_index(x, std::vector<Index>{row});
  REQUIRE(report.n_used == 1);
  CHECK(report.index == report.per_point[0]);

  const Vectord mu = sample_mean(x);
  const Matrixd xc = x.rowwise() - mu.transpose();
  const Matrixd sigma = sample_covariance(x);
  const Vectord center = xc.row(row).transpose();
  const double expected =
      diag_error(weighted_covariance(xc, gaussian_log_weights(xc, center, sigma)));
  CHECK(report.index == doctest::Approx(expected).epsilon(1e-14));

  const auto seeded = independence_index(x, Index(1), 4);
  CHECK(seeded.n_used == 1);
  CHECK(seeded.index == seeded.per_point[0]);
}

TEST_CASE("index is the mean of the per-point errors and nonnegative") {
  const Matrixd x = synth_sources(SourceKind::bimodal, 3000, 3, 21).data;
  const auto report = independence_index(x, Index(10), 17);
  double total = 0;
  for (const double v : report.per_point) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(report.index ==
        doctest::Approx(total / double(report.n_used)).epsilon(1e-12));
  CHECK(report.index >= 0.0);
}

TEST_CASE("column permutation leaves the index unchanged") {
  const Matrixd s = synth_sources(SourceKind::uniform, 3000, 3, 31).data;
  const Matrixd x = mix(s, random_mixing_matrix(3, 31));
  Matrixd permuted(x.rows(), 3);
  permuted << x.col(2), x.col(0), x.col(1);

  const auto base = independence_index(x, Index(8), 11);
  const auto shuffled = independence_index(permuted, Index(8), 11);
  CHECK(shuffled.index == doctest::Approx(base.index).epsilon(1e-12));
}

TEST_CASE("positive diagonal rescaling leaves the index unchanged") {
  // Rotation mixing keeps the covariance well conditioned; the trace-relative
  // ridge in the weighting covariance is only negligible in that regime.
  const Matrixd s = synth_sources(SourceKind::uniform, 3000, 2, 41).data;
  const Matrixd x = rotate_45(s);
  Matrixd scaled = x;
  scaled.col(0) *= 2.0;
  scaled.col(1) *= 0.5;

  const auto base = independence_index(x, Index(8), 13);
  const auto stretched = independence_index(scaled, Index(8), 13);
  CHECK(std::abs(stretched.index - base.index) < 1e-10);
}

TEST_CASE("unmixing does not increase the index at fixed weight rows") {
  const Matrixd s = synth_sources(SourceKind::uniform, 8000, 2, 51).data;
  const Matrixd x = mix(s, random_mixing_matrix(2, 51));

  MweicaOptions opts;
  opts.n_weights = 16;
  opts.seed = 6;
  const auto unmixed = mweica::mweica(x, opts);

  const auto before = independence_index(x, unmixed.weight_indices);
  const auto after =
      independence_index(transform(x, unmixed.W), unmixed.weight_indices);
  CHECK(after.index <= before.index);
}

TEST_CASE("argument validation") {
  const Matrixd x = synth_sources(SourceKind::uniform, 100, 2, 1).data;
  CHECK_THROWS_AS(independence_index(x, Index(0), 1), Error);
  CHECK_THROWS_AS(independence_index(x, Index(101), 1), Error);
  CHECK_THROWS_AS(independence_index(x, std::vector<Index>{}), Error);
  CHECK_THROWS_AS(independence_index(x, std::vector<Index>{100}), Error);

  Matrixd scattered(4, 2);
  scattered << 0, 0, 100, 0, 0, 100, 100, 100;
  CHECK_THROWS_AS(independence_index(scattered, Index(2), 1),
                  TooFewValidWeightPoints);
}
