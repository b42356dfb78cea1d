#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "mweica/eval.hpp"
#include "mweica/rng.hpp"

using namespace mweica;

TEST_CASE("tucker_congruence closed forms") {
  Vectord v(3);
  v << 1, 2, 3;
  CHECK(tucker_congruence(v, v) == doctest::Approx(1.0).epsilon(1e-14));

  Vectord e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK(tucker_congruence(e1, e2) == doctest::Approx(0.0));

  Vectord ones(2);
  ones << 1, 1;
  CHECK(tucker_congruence(ones, e1) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(tucker_congruence(Vectord(Vectord::Zero(2)), e1), ZeroVector);
  Vectord longer(3);
  longer << 1, 2, 3;
  CHECK_THROWS_AS(tucker_congruence(longer, e1), ShapeMismatch);
}

TEST_CASE("tucker_congruence scaling and sign behavior") {
  Rng rng(4);
  const Vectord x = random_normal_matrix(40, 1, rng);
  const Vectord y = random_normal_matrix(40, 1, rng);
  const double base = tucker_congruence(x, y);

  CHECK(tucker_congruence(Vectord(2.5 * x), y) ==
        doctest::Approx(base).epsilon(1e-12));
  CHECK(tucker_congruence(x, Vectord(0.3 * y)) ==
        doctest::Approx(base).epsilon(1e-12));
  CHECK(tucker_congruence(Vectord(-x), y) ==
        doctest::Approx(-base).epsilon(1e-12));

  CHECK(std::abs(base) <= 1.0);
  CHECK(tucker_congruence(Vectord(-3.0 * x), x) ==
        doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("congruence_matrix patterns") {
  Rng rng(9);
  Matrixd s = random_normal_matrix(100, 3, rng);

  const Matrixd self = congruence_matrix(s, s);
  for (Index i = 0; i < 3; ++i)
    CHECK(self(i, i) == doctest::Approx(1.0).epsilon(1e-12));

  Matrixd permuted(100, 3);
  permuted << s.col(2), s.col(0), s.col(1);
  const Matrixd c = congruence_matrix(permuted, s);
  CHECK(c(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c(2, 1) == doctest::Approx(1.0).epsilon(1e-12));

  const Matrixd flipped = congruence_matrix(Matrixd(-s), s);
  for (Index i = 0; i < 3; ++i)
    CHECK(flipped(i, i) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("match_components") {
  const Matrixd eye = Matrixd::Identity(3, 3);
  auto r = match_components(eye);
  for (Index i = 0; i < 3; ++i) CHECK(r.permutation[i] == i);
  CHECK(r.mean_abs_congruence == doctest::Approx(1.0));

  Matrixd anti = Matrixd::Zero(3, 3);
  anti(0, 2) = 1;
  anti(1, 1) = -1;
  anti(2, 0) = 1;
  r = match_components(anti);
  CHECK(r.permutation[0] == 2);
  CHECK(r.permutation[1] == 1);
  CHECK(r.permutation[2] == 0);
  CHECK(r.mean_abs_congruence == doctest::Approx(1.0));

  // Greedy would take 0.95 then be stuck with 0.1; the optimum crosses over.
  Matrixd tricky(2, 2);
  tricky << 0.9, 0.8, 0.95, 0.1;
  r = match_components(tricky);
  CHECK(r.permutation[0] == 1);
  CHECK(r.permutation[1] == 0);
  CHECK(r.mean_abs_congruence == doctest::Approx(0.875).epsilon(1e-14));
}

TEST_CASE("exhaustive and hungarian matching agree") {
  // d=8 runs the exhaustive path, d=9 the assignment solver; embedding the
  // same matrix plus an isolated unit row must preserve the matching score.
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrixd c8 = random_normal_matrix(8, 8, rng);
    Matrixd c9 = Matrixd::Zero(9, 9);
    c9.topLeftCorner(8, 8) = c8;
    c9(8, 8) = 1.0;
    const auto r8 = match_components(c8);
    const auto r9 = match_components(c9);
    CHECK(r9.permutation[8] == 8);
    CHECK(r8.mean_abs_congruence * 8.0 + 1.0 ==
          doctest::Approx(r9.mean_abs_congruence * 9.0).epsilon(1e-10));
  }
}

TEST_CASE("match score is invariant to estimate permutation and sign") {
  Rng rng(31);
  const Matrixd s_true = random_normal_matrix(200, 4, rng);
  Matrixd mixed = s_true * random_normal_matrix(4, 4, rng).transpose();

  const double base = score_separation(mixed, s_true).mean_abs_congruence;

  Matrixd shuffled(200, 4);
  shuffled << -mixed.col(3), mixed.col(0), -mixed.col(2), mixed.col(1);
  CHECK(score_separation(shuffled, s_true).mean_abs_congruence ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("amari_index closed forms") {
  const Matrixd eye = Matrixd::Identity(3, 3);
  CHECK(amari_index(eye, eye) == doctest::Approx(0.0));

  // W^T A = 3 * permutation.
  Matrixd p = Matrixd::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 1;
  CHECK(amari_index(eye, Matrixd(3.0 * p)) < 1e-12);

  Matrixd w(2, 2), a(2, 2);
  w << 1, 0, 0, 1;
  a << 1, 1, 1, -1;  // |W^T A| = [[1,1],[1,1]] saturates every row and column
  const Matrixd g = w.transpose() * a;
  CHECK((g.array().abs() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(amari_index(w, a) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(3);
  CHECK(amari_index(Matrixd(random_normal_matrix(5, 5, rng)),
                    Matrixd(Matrixd::Identity(5, 5))) > 0.01);

  CHECK_THROWS_AS(amari_index(Matrixd(Matrixd::Zero(2, 2)),
                              Matrixd(Matrixd::Identity(2, 2))),
                  SingularMatrix);
}

TEST_CASE("rank_methods") {
  SUBCASE("constant ordering") {
    std::map<std::string, std::vector<double>> scores;
    scores["good"] = {0.9, 0.9, 0.9};
    scores["bad"] = {0.8, 0.8, 0.8};
    const auto summary = rank_methods(scores);
    for (double r : summary.ranks.at("good")) CHECK(r == doctest::Approx(1.0));
    for (double r : summary.ranks.at("bad")) CHECK(r == doctest::Approx(2.0));
    CHECK(summary.quartiles.at("good")[2] == doctest::Approx(1.0));
  }

  SUBCASE("ties share the mean rank") {
    std::map<std::string, std::vector<double>> scores;
    scores["a"] = {0.5};
    scores["b"] = {0.5};
    const auto summary = rank_methods(scores);
    CHECK(summary.ranks.at("a")[0] == doctest::Approx(1.5));
    CHECK(summary.ranks.at("b")[0] == doctest::Approx(1.5));
  }

  SUBCASE("three methods over four trials match per-trial sorting") {
    std::map<std::string, std::vector<double>> scores;
    scores["m1"] = {0.9, 0.2, 0.5, 0.7};
    scores["m2"] = {0.8, 0.3, 0.5, 0.9};
    scores["m3"] = {0.1, 0.4, 0.6, 0.8};
    const auto summary = rank_methods(scores);

    const std::vector<std::string> names{"m1", "m2", "m3"};
    for (std::size_t t = 0; t < 4; ++t) {
      for (const auto& name : names) {
        double rank = 0;
        int tied = 0;
        for (const auto& other : names) {
          if (scores[other][t] > scores[name][t]) rank += 1;
          if (scores[other][t] == scores[name][t]) ++tied;
        }
        const double expected = rank + (1.0 + tied) / 2.0;
        CHECK(summary.ranks.at(name)[t] == doctest::Approx(expected));
      }
    }
  }

  SUBCASE("mismatched trial counts are rejected") {
    std::map<std::string, std::vector<double>> scores;
    scores["a"] = {0.5, 0.6};
    scores["b"] = {0.5};
    CHECK_THROWS_AS(rank_methods(scores), MismatchedTrialSets);
  }
}
