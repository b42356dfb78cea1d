#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mweica/types.hpp"

namespace mweica {

// Pairing of estimated components with reference components.
template <typename Scalar>
struct MatchReport {
  Matrix<Scalar> congruences;       // (i, j) = congruence(est_i, true_j)
  std::vector<Index> permutation;   // permutation[i] = matched true index
  Scalar mean_abs_congruence = 0;   // mean |congruence| over matched pairs
  std::optional<Scalar> amari;      // filled by callers that know the mixing
};

// Tucker congruence: the uncentered cosine between two vectors. Recovered
// sources are centered by construction, so on them this coincides with the
// correlation coefficient.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar tucker_congruence(const Eigen::MatrixBase<DerivedX>& x,
                                            const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size())
    throw ShapeMismatch("congruence needs vectors of equal length");
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (!(nx > Scalar(0)) || !(ny > Scalar(0)))
    throw ZeroVector("congruence undefined for a zero vector");
  return x.dot(y) / (nx * ny);
}

// Pairwise congruences on mean-centered columns. Centering makes scores of
// loaded media (pixel columns sit in [0, 1], audio may carry DC offsets)
// agree with scores of the centered sources they estimate.
template <typename Scalar>
Matrix<Scalar> congruence_matrix(const Matrix<Scalar>& s_est,
                                 const Matrix<Scalar>& s_true) {
  if (s_est.rows() != s_true.rows() || s_est.cols() != s_true.cols())
    throw ShapeMismatch("source matrices must have identical shapes");
  const Matrix<Scalar> est = s_est.rowwise() - s_est.colwise().mean();
  const Matrix<Scalar> ref = s_true.rowwise() - s_true.colwise().mean();
  const Index d = est.cols();
  Matrix<Scalar> c(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      c(i, j) = tucker_congruence(est.col(i), ref.col(j));
  return c;
}

namespace detail {

// Kuhn-Munkres on a square cost matrix; returns row -> column assignment
// minimizing total cost.
template <typename Scalar>
std::vector<Index> hungarian_min_cost(const Matrix<Scalar>& cost) {
  const Index n = cost.rows();
  std::vector<Scalar> u(static_cast<std::size_t>(n) + 1, Scalar(0));
  std::vector<Scalar> v(static_cast<std::size_t>(n) + 1, Scalar(0));
  std::vector<Index> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<Scalar> minv(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<Scalar>::infinity());
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      Index j1 = 0;
      Scalar delta = std::numeric_limits<Scalar>::infinity();
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return assignment;
}

}  // namespace detail

// Bijective assignment maximizing the summed |congruence|; exhaustive for
// small d, Kuhn-Munkres beyond. Matching on the absolute value absorbs the
// sign ambiguity of recovered components.
template <typename Scalar>
MatchReport<Scalar> match_components(const Matrix<Scalar>& c) {
  if (c.rows() != c.cols()) throw ShapeMismatch("congruence matrix must be square");
  const Index d = c.rows();
  MatchReport<Scalar> report;
  report.congruences = c;
  const Matrix<Scalar> abs_c = c.cwiseAbs();

  std::vector<Index> best(static_cast<std::size_t>(d));
  if (d <= 8) {
    std::vector<Index> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), Index(0));
    Scalar best_score = -std::numeric_limits<Scalar>::infinity();
    do {
      Scalar score = Scalar(0);
      for (Index i = 0; i < d; ++i)
        score += abs_c(i, perm[static_cast<std::size_t>(i)]);
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = detail::hungarian_min_cost(Matrix<Scalar>(-abs_c));
  }

  report.permutation = best;
  Scalar total = Scalar(0);
  for (Index i = 0; i < d; ++i) total += abs_c(i, best[static_cast<std::size_t>(i)]);
  report.mean_abs_congruence = total / static_cast<Scalar>(d);
  return report;
}

// Convenience: congruence matrix + optimal matching in one step.
template <typename Scalar>
MatchReport<Scalar> score_separation(const Matrix<Scalar>& s_est,
                                     const Matrix<Scalar>& s_true) {
  return match_components(congruence_matrix(s_est, s_true));
}

// Amari error of G = W^T * A: zero exactly when G is a scaled permutation,
// invariant under permutation and diagonal rescaling of either factor.
template <typename Scalar>
Scalar amari_index(const Matrix<Scalar>& w, const Matrix<Scalar>& a) {
  if (w.rows() != w.cols() || a.rows() != a.cols() || w.rows() != a.rows())
    throw ShapeMismatch("amari index needs square matrices of one size");
  if (w.determinant() == Scalar(0) || a.determinant() == Scalar(0))
    throw SingularMatrix("amari index needs invertible matrices");
  const Matrix<Scalar> g = (w.transpose() * a).cwiseAbs();
  const Index d = g.rows();
  Scalar total = Scalar(0);
  for (Index i = 0; i < d; ++i) {
    const Scalar row_max = g.row(i).maxCoeff();
    const Scalar col_max = g.col(i).maxCoeff();
    if (!(row_max > Scalar(0)) || !(col_max > Scalar(0)))
      throw SingularMatrix("amari index saw a zero row or column");
    total += g.row(i).sum() / row_max - Scalar(1);
    total += g.col(i).sum() / col_max - Scalar(1);
  }
  return total / (Scalar(2) * static_cast<Scalar>(d));
}

// Per-trial ranking of methods by score, rank 1 = best (highest score),
// ties sharing the mean rank.
struct RankSummary {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<double>> ranks;  // one rank per trial
  // {min, lower quartile, median, upper quartile, max} per method
  std::map<std::string, std::array<double, 5>> quartiles;
};

namespace detail {

// Quantile with linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline RankSummary rank_methods(
    const std::map<std::string, std::vector<double>>& scores) {
  if (scores.empty()) throw MismatchedTrialSets("no methods to rank");
  const std::size_t trials = scores.begin()->second.size();
  if (trials == 0) throw MismatchedTrialSets("no trials to rank");
  for (const auto& [name, vals] : scores)
    if (vals.size() != trials)
      throw MismatchedTrialSets("method '" + name +
                                "' was not scored on every trial");

  RankSummary summary;
  for (const auto& [name, vals] : scores) {
    summary.methods.push_back(name);
    summary.ranks[name].resize(trials);
  }

  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::pair<double, std::string>> entries;
    for (const auto& [name, vals] : scores) entries.emplace_back(vals[t], name);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    // Tied scores share the mean of the ranks they span.
    std::size_t i = 0;
    while (i < entries.size()) {
      std::size_t j = i;
      while (j + 1 < entries.size() && entries[j + 1].first == entries[i].first)
        ++j;
      const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t m = i; m <= j; ++m)
        summary.ranks[entries[m].second][t] = shared;
      i = j + 1;
    }
  }

  for (const auto& name : summary.methods) {
    std::vector<double> sorted = summary.ranks[name];
    std::sort(sorted.begin(), sorted.end());
    summary.quartiles[name] = {sorted.front(),
                               detail::quantile_sorted(sorted, 0.25),
                               detail::quantile_sorted(sorted, 0.5),
                               detail::quantile_sorted(sorted, 0.75),
                               sorted.back()};
  }
  return summary;
}

}  // namespace mweica
