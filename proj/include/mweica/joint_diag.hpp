#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mweica/types.hpp"
#include "mweica/weighted_stats.hpp"

namespace mweica {

// Ordered set of symmetric positive definite matrices of one dimension.
template <typename Scalar>
using DiagSet = std::vector<Matrix<Scalar>>;

using DiagSetd = DiagSet<double>;

// Output of the diagonalizers. W acts by congruence: W^T * S * W is
// (approximately) diagonal for every S that went in. criterion_history[0]
// is the mean diagonalization error at initialization, followed by one
// entry per sweep.
template <typename Scalar>
struct DiagResult {
  Matrix<Scalar> W;
  std::vector<Scalar> criterion_history;
  int sweeps_used = 0;
  bool converged = true;
  bool near_degenerate_spectrum = false;
};

struct JointDiagOptions {
  double tol = 1e-9;        // stop when the largest pairwise update is below this
  int max_sweeps = 100;
  bool precondition = true; // whiten by the inverse square root of the mean matrix
};

namespace detail {

template <typename Scalar>
void check_spd_set(const DiagSet<Scalar>& s) {
  if (s.empty()) throw ShapeMismatch("empty matrix set");
  const Index d = s.front().rows();
  for (const auto& m : s) {
    if (m.rows() != d || m.cols() != d)
      throw ShapeMismatch("matrix set members have mismatched dimensions");
    if (!is_symmetric(m))
      throw NotPositiveDefinite("matrix set member is not symmetric");
    Eigen::LLT<Matrix<Scalar>> llt(((m + m.transpose()) / Scalar(2)).eval());
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("matrix set member is not positive definite");
  }
}

// Unit column norms, columns ordered by decreasing conjugated diagonal of
// `reference`, sign fixed so each column's largest-magnitude entry is
// positive. The criterion is invariant under all three changes; this just
// pins a representative for reproducibility.
template <typename Scalar>
Matrix<Scalar> canonicalize_columns(Matrix<Scalar> w,
                                    const Matrix<Scalar>& reference) {
  const Index d = w.cols();
  for (Index c = 0; c < d; ++c) {
    const Scalar norm = w.col(c).norm();
    if (!(norm > Scalar(0)))
      throw SingularMatrix("diagonalizer has a zero column");
    w.col(c) /= norm;
  }
  Vector<Scalar> key(d);
  for (Index c = 0; c < d; ++c)
    key(c) = w.col(c).dot(reference * w.col(c));
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return key(a) > key(b); });
  Matrix<Scalar> out(w.rows(), d);
  for (Index c = 0; c < d; ++c) {
    out.col(c) = w.col(order[static_cast<std::size_t>(c)]);
    Index imax = 0;
    out.col(c).cwiseAbs().maxCoeff(&imax);
    if (out(imax, c) < Scalar(0)) out.col(c) = -out.col(c);
  }
  return out;
}

}  // namespace detail

// Smallest pairwise separation between the conjugated diagonal profiles.
// For coordinates a < b the per-matrix statistic is the log of the diagonal
// ratio d_i(a)/d_i(b); its spread around the set mean is zero exactly when
// the two profiles are proportional, in which case the pair (a, b) can be
// remixed after rescaling without changing the criterion and the
// diagonalizer is not identified. Invariant under column rescaling and
// reordering of w.
template <typename Scalar>
Scalar profile_separation(const Matrix<Scalar>& w, const DiagSet<Scalar>& s) {
  if (s.empty()) throw ShapeMismatch("empty matrix set");
  const Index d = w.cols();
  if (d < 2) return std::numeric_limits<Scalar>::infinity();
  Matrix<Scalar> log_prof(static_cast<Index>(s.size()), d);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vector<Scalar> diag = (w.transpose() * s[i] * w).diagonal();
    if (diag.minCoeff() <= Scalar(0)) return Scalar(0);
    log_prof.row(static_cast<Index>(i)) = diag.array().log();
  }
  Scalar separation = std::numeric_limits<Scalar>::infinity();
  for (Index a = 0; a < d; ++a) {
    for (Index b = a + 1; b < d; ++b) {
      const auto ratios = (log_prof.col(a) - log_prof.col(b)).eval();
      const Scalar spread = (ratios.array() - ratios.mean()).abs().maxCoeff();
      separation = std::min(separation, spread);
    }
  }
  return separation;
}

// Mean of diag_error over the congruence transforms W^T * S_i * W.
template <typename Scalar>
Scalar mean_diag_error(const Matrix<Scalar>& w, const DiagSet<Scalar>& s) {
  if (s.empty()) throw ShapeMismatch("empty matrix set");
  if (w.rows() != w.cols() || w.rows() != s.front().rows())
    throw ShapeMismatch("diagonalizer shape does not match matrix set");
  if (w.determinant() == Scalar(0))
    throw SingularMatrix("diagonalizer is singular");
  Scalar total = Scalar(0);
  for (const auto& m : s) {
    Matrix<Scalar> conj = w.transpose() * m * w;
    total += diag_error(((conj + conj.transpose()) / Scalar(2)).eval());
  }
  return total / static_cast<Scalar>(s.size());
}

// Exact simultaneous diagonalization of two matrices via the generalized
// symmetric eigenproblem: whiten by sigma1, eigendecompose the whitened
// sigma2. Numerically preferable to forming sigma1^-1 * sigma2 directly.
// A repeated generalized eigenvalue means the diagonalizer is no longer
// unique up to scaling; that is reported, not thrown.
template <typename Scalar>
DiagResult<Scalar> simultaneous_diag_pair(const Matrix<Scalar>& sigma1,
                                          const Matrix<Scalar>& sigma2) {
  if (sigma1.rows() != sigma1.cols() || sigma2.rows() != sigma2.cols() ||
      sigma1.rows() != sigma2.rows())
    throw ShapeMismatch("pair diagonalization needs square matrices of one size");
  if (!is_symmetric(sigma1) || !is_symmetric(sigma2))
    throw NotPositiveDefinite("pair diagonalization needs symmetric inputs");
  {
    Eigen::LLT<Matrix<Scalar>> llt(((sigma1 + sigma1.transpose()) / Scalar(2)).eval());
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("first matrix must be strictly positive definite");
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix<Scalar>> solver(
      ((sigma2 + sigma2.transpose()) / Scalar(2)).eval(),
      ((sigma1 + sigma1.transpose()) / Scalar(2)).eval(),
      Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NotPositiveDefinite("generalized eigendecomposition failed");

  DiagResult<Scalar> result;
  result.W = detail::canonicalize_columns(Matrix<Scalar>(solver.eigenvectors()),
                                          sigma1);
  const Vector<Scalar> evals = solver.eigenvalues();  // ascending
  for (Index i = 0; i + 1 < evals.size(); ++i) {
    const Scalar scale = std::max(
        {std::abs(evals(i)), std::abs(evals(i + 1)),
         std::numeric_limits<Scalar>::min()});
    if (std::abs(evals(i + 1) - evals(i)) < Scalar(1e-8) * scale)
      result.near_degenerate_spectrum = true;
  }
  result.criterion_history = {mean_diag_error(result.W, DiagSet<Scalar>{sigma1, sigma2})};
  result.sweeps_used = 0;
  result.converged = true;
  return result;
}

// Approximate joint diagonalization of a set of SPD matrices by cyclic
// pairwise sweeps, minimizing the mean of log(det diag / det) over the
// conjugated set. Each pair (p, q) gets the elementary transformation
//   T = [[1, -h_pq/theta], [-h_qp/theta, 1]]
// that solves the linearized two-by-two restriction of the criterion, with
// h derived from the averaged ratio statistics of the current conjugates;
// T is applied to all matrices and accumulated into the diagonalizer.
// Failure to converge is reported through the flag, not thrown.
template <typename Scalar>
DiagResult<Scalar> pham_joint_diag(const DiagSet<Scalar>& s,
                                   const JointDiagOptions& opts = {}) {
  detail::check_spd_set(s);
  if (s.size() < 2)
    throw ShapeMismatch("joint diagonalization needs at least two matrices");
  if (!(opts.tol > 0)) throw Error("tolerance must be positive");
  if (opts.max_sweeps < 1) throw Error("sweep budget must be at least 1");

  const Index d = s.front().rows();
  const auto n = static_cast<Scalar>(s.size());
  std::vector<Matrix<Scalar>> work(s.begin(), s.end());

  // Left-acting accumulator: B * S_i * B^T is diagonal at the end.
  Matrix<Scalar> b = Matrix<Scalar>::Identity(d, d);
  if (opts.precondition) {
    Matrix<Scalar> mean = Matrix<Scalar>::Zero(d, d);
    for (const auto& m : work) mean += m;
    mean /= n;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(mean);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= Scalar(0))
      throw NotPositiveDefinite("mean matrix is not positive definite");
    b = es.operatorInverseSqrt();
    for (auto& m : work) m = (b * m * b).eval();
  }

  DiagResult<Scalar> result;
  auto criterion = [&work, n]() {
    Scalar total = Scalar(0);
    for (const auto& m : work)
      total += diag_error(((m + m.transpose()) / Scalar(2)).eval());
    return total / n;
  };
  result.criterion_history.push_back(criterion());

  result.converged = false;
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    Scalar largest_update = Scalar(0);
    for (Index p = 1; p < d; ++p) {
      for (Index q = 0; q < p; ++q) {
        Scalar g_pq = 0, g_qp = 0, omega_pq = 0, omega_qp = 0;
        for (const auto& m : work) {
          g_pq += m(p, q) / m(p, p);
          g_qp += m(p, q) / m(q, q);
          omega_pq += m(q, q) / m(p, p);
          omega_qp += m(p, p) / m(q, q);
        }
        g_pq /= n;
        g_qp /= n;
        omega_pq /= n;
        omega_qp /= n;

        // omega >= 1 by AM-GM, with equality when the diagonal ratio is the
        // same in every matrix; the guard keeps that case finite.
        const Scalar omega = std::sqrt(omega_pq * omega_qp);
        const Scalar ratio = std::sqrt(omega_qp / omega_pq);
        const Scalar sum_part = (ratio * g_pq + g_qp) / (omega + Scalar(1));
        const Scalar diff_part =
            (ratio * g_pq - g_qp) / std::max(omega - Scalar(1), Scalar(1e-9));
        const Scalar h_pq = sum_part + diff_part;
        const Scalar h_qp = (sum_part - diff_part) / ratio;
        const Scalar theta =
            Scalar(1) + std::sqrt(std::max(Scalar(1) - h_pq * h_qp, Scalar(0)));
        const Scalar alpha = -h_pq / theta;  // mixes row q into row p
        const Scalar beta = -h_qp / theta;   // mixes row p into row q

        largest_update =
            std::max({largest_update, std::abs(alpha), std::abs(beta)});

        for (auto& m : work) {
          const auto row_p = m.row(p).eval();
          const auto row_q = m.row(q).eval();
          m.row(p) = row_p + alpha * row_q;
          m.row(q) = beta * row_p + row_q;
          const auto col_p = m.col(p).eval();
          const auto col_q = m.col(q).eval();
          m.col(p) = col_p + alpha * col_q;
          m.col(q) = beta * col_p + col_q;
        }
        const auto b_p = b.row(p).eval();
        const auto b_q = b.row(q).eval();
        b.row(p) = b_p + alpha * b_q;
        b.row(q) = beta * b_p + b_q;
      }
    }
    for (auto& m : work) m = ((m + m.transpose()) / Scalar(2)).eval();
    result.criterion_history.push_back(criterion());
    if (largest_update < static_cast<Scalar>(opts.tol)) {
      ++sweep;
      result.converged = true;
      break;
    }
  }
  result.sweeps_used = sweep;
  result.W = detail::canonicalize_columns(Matrix<Scalar>(b.transpose()),
                                          s.front());
  if (profile_separation(result.W, s) < Scalar(1e-8))
    result.near_degenerate_spectrum = true;
  return result;
}

template <typename Scalar>
DiagResult<Scalar> pham_joint_diag(const DiagSet<Scalar>& s, double tol,
                                   int max_sweeps) {
  JointDiagOptions opts;
  opts.tol = tol;
  opts.max_sweeps = max_sweeps;
  return pham_joint_diag(s, opts);
}

}  // namespace mweica
