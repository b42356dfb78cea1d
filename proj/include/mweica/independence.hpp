#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mweica/ica.hpp"
#include "mweica/types.hpp"
#include "mweica/weighted_stats.hpp"

namespace mweica {

// Dependence measure: mean diagonalization error of Gaussian-weighted
// covariances over weight centers drawn from the data. Zero for data with
// independent components, positive otherwise (in population).
template <typename Scalar>
struct IndexReport {
  Scalar index = 0;
  Index n_used = 0;
  std::vector<Scalar> per_point;
  std::uint64_t seed = 0;
};

namespace detail {

// The error needs strict positive definiteness; a weighted covariance that
// misses it by a rounding-level deficit is nudged back with a relative
// jitter of 1e-12, anything worse rejects the weight point.
template <typename Scalar>
std::optional<Scalar> diag_error_jittered(const Matrix<Scalar>& cov) {
  try {
    return diag_error(cov);
  } catch (const NotPositiveDefinite&) {
  }
  try {
    return diag_error(regularize(cov, Scalar(1e-12)));
  } catch (const NotPositiveDefinite&) {
  }
  return std::nullopt;
}

template <typename Scalar>
IndexReport<Scalar> index_over_stream(const Matrix<Scalar>& x, Index n,
                                      std::uint64_t seed,
                                      const std::vector<Index>& forced) {
  validate_data(x);
  if (n < 1) throw Error("weight-point count must be at least 1");
  const Index k = x.rows();
  const Index d = x.cols();
  if (n > k) throw Error("weight-point count exceeds the sample count");

  const Vector<Scalar> mu = sample_mean(x);
  const Matrix<Scalar> xc = x.rowwise() - mu.transpose();
  const Matrix<Scalar> sigma = sample_covariance(x);

  std::vector<Index> pool;
  if (!forced.empty()) {
    pool = forced;
    for (const Index r : pool)
      if (r < 0 || r >= k) throw Error("weight row index out of range");
  } else {
    Rng rng(seed);
    pool = rng.permutation(k);
  }

  const MweicaOptions defaults;
  WeightPointStream<Scalar> stream(xc, sigma, std::move(pool),
                                   static_cast<Scalar>(d + 1),
                                   defaults.max_redraws, n);
  IndexReport<Scalar> report;
  report.seed = seed;
  while (static_cast<Index>(report.per_point.size()) < n) {
    auto candidate = stream.next();
    if (!candidate) break;
    const auto de = diag_error_jittered(candidate->cov);
    if (!de) continue;
    report.per_point.push_back(*de);
  }
  if (report.per_point.empty())
    throw TooFewValidWeightPoints(
        "no weight point passed the effective-sample-size check");

  report.n_used = static_cast<Index>(report.per_point.size());
  Scalar total = 0;
  for (const Scalar v : report.per_point) total += v;
  report.index = total / static_cast<Scalar>(report.n_used);
  return report;
}

}  // namespace detail

template <typename Scalar>
IndexReport<Scalar> independence_index(const Matrix<Scalar>& x, Index n,
                                       std::uint64_t seed) {
  return detail::index_over_stream(x, n, seed, {});
}

// Same estimator at caller-chosen weight rows; pairs of datasets can then be
// compared like for like.
template <typename Scalar>
IndexReport<Scalar> independence_index(const Matrix<Scalar>& x,
                                       const std::vector<Index>& rows) {
  if (rows.empty()) throw Error("weight-point count must be at least 1");
  return detail::index_over_stream(x, static_cast<Index>(rows.size()), 0,
                                   rows);
}

}  // namespace mweica
