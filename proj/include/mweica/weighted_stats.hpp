#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

#include "mweica/types.hpp"

namespace mweica {

// Per-sample weights kept in the log domain, defined up to a common additive
// constant. Distant weight centers in high dimension would underflow the
// plain density values; the normalized weights are identical either way.
template <typename Scalar>
struct WeightVector {
  Vector<Scalar> log_weights;

  // Max-shifted, exponentiated and renormalized to sum to one.
  Vector<Scalar> normalized() const {
    if (log_weights.size() == 0)
      throw WeightUnderflow("empty weight vector");
    const Scalar shift = log_weights.maxCoeff();
    if (!std::isfinite(shift))
      throw WeightUnderflow("weight vector has no finite entry");
    Vector<Scalar> w = (log_weights.array() - shift).exp();
    const Scalar total = w.sum();
    if (!(total > Scalar(0)) || !std::isfinite(total))
      throw WeightUnderflow("normalized weights do not sum to a positive value");
    return w / total;
  }
};

template <typename Derived>
Vector<typename Derived::Scalar> sample_mean(const Eigen::MatrixBase<Derived>& x) {
  return x.colwise().mean().transpose();
}

// Population covariance (divides by k, not k-1), matching the weighted
// estimator below under uniform weights.
template <typename Derived>
Matrix<typename Derived::Scalar> sample_covariance(
    const Eigen::MatrixBase<Derived>& x, bool require_positive_definite = false) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() < 2) throw DegenerateData("covariance needs at least 2 samples");
  Matrix<Scalar> centered = x.rowwise() - x.colwise().mean();
  Matrix<Scalar> cov =
      centered.transpose() * centered / static_cast<Scalar>(x.rows());
  cov = ((cov + cov.transpose()) / Scalar(2)).eval();
  if (require_positive_definite) {
    for (Index c = 0; c < x.cols(); ++c) {
      if ((centered.col(c).array() == centered(0, c)).all())
        throw DegenerateData("column " + std::to_string(c) +
                             " is constant; covariance is singular");
    }
    Eigen::LLT<Matrix<Scalar>> llt(cov);
    if (llt.info() != Eigen::Success)
      throw DegenerateData("sample covariance is not positive definite");
  }
  return cov;
}

// sigma + eps * (trace(sigma)/d) * I.
template <typename Derived>
Matrix<typename Derived::Scalar> regularize(const Eigen::MatrixBase<Derived>& sigma,
                                            typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  const Scalar tr = sigma.trace();
  if (tr == Scalar(0)) throw ZeroMatrix("cannot regularize a zero-trace matrix");
  Matrix<Scalar> out = sigma;
  out.diagonal().array() += eps * tr / static_cast<Scalar>(sigma.rows());
  return out;
}

// Log density of N(m, sigma) at every sample, without the constant terms
// (-d/2 log 2pi and -1/2 log det sigma drop out under normalization).
// sigma receives a small ridge before inversion; image data often carries
// near-constant channels.
template <typename DerivedX, typename DerivedM, typename DerivedS>
WeightVector<typename DerivedX::Scalar> gaussian_log_weights(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedM>& m,
    const Eigen::MatrixBase<DerivedS>& sigma,
    typename DerivedX::Scalar ridge = 1e-10) {
  using Scalar = typename DerivedX::Scalar;
  if (m.size() != x.cols() || sigma.rows() != x.cols() || sigma.cols() != x.cols())
    throw ShapeMismatch("weight center / covariance shape does not match data");

  Matrix<Scalar> sig =
      ridge > Scalar(0) ? regularize(sigma, ridge) : Matrix<Scalar>(sigma);
  Eigen::LLT<Matrix<Scalar>> llt(sig);
  if (llt.info() != Eigen::Success)
    throw SingularWeightCovariance(
        "weighting covariance is not positive definite after regularization");

  // Squared Mahalanobis distances via the Cholesky factor: solve L z = (x-m)^T
  // and take column norms.
  Matrix<Scalar> centered = (x.rowwise() - m.transpose()).transpose();
  llt.matrixL().solveInPlace(centered);
  WeightVector<Scalar> w;
  w.log_weights = Scalar(-0.5) * centered.colwise().squaredNorm().transpose();
  return w;
}

template <typename Derived, typename Scalar>
Vector<Scalar> weighted_mean(const Eigen::MatrixBase<Derived>& x,
                             const WeightVector<Scalar>& w) {
  if (w.log_weights.size() != x.rows())
    throw ShapeMismatch("weight vector length does not match sample count");
  return x.transpose() * w.normalized();
}

// Weighted second moment about the weighted mean; symmetric PSD by
// construction.
template <typename Derived, typename Scalar>
Matrix<Scalar> weighted_covariance(const Eigen::MatrixBase<Derived>& x,
                                   const WeightVector<Scalar>& w) {
  const Vector<Scalar> wn = w.normalized();
  if (wn.size() != x.rows())
    throw ShapeMismatch("weight vector length does not match sample count");
  const Vector<Scalar> mean = x.transpose() * wn;
  Matrix<Scalar> centered = x.rowwise() - mean.transpose();
  Matrix<Scalar> cov =
      centered.transpose() * (centered.array().colwise() * wn.array()).matrix();
  return ((cov + cov.transpose()) / Scalar(2)).eval();
}

// (sum w)^2 / sum w^2 for the normalized weights; lies in [1, k].
template <typename Scalar>
Scalar effective_sample_size(const WeightVector<Scalar>& w) {
  const Vector<Scalar> wn = w.normalized();
  const Scalar denom = wn.squaredNorm();
  if (!(denom > Scalar(0)))
    throw WeightUnderflow("effective sample size undefined for zero weights");
  return Scalar(1) / denom;
}

// log(det diag(A) / det A); nonnegative, zero exactly on diagonal matrices.
template <typename Derived>
typename Derived::Scalar diag_error(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols())
    throw ShapeMismatch("diagonalization error needs a square matrix");
  Scalar log_det_diag = Scalar(0);
  for (Index i = 0; i < a.rows(); ++i) {
    if (!(a(i, i) > Scalar(0)))
      throw NotPositiveDefinite("matrix has a non-positive diagonal entry");
    log_det_diag += std::log(a(i, i));
  }
  Eigen::LLT<Matrix<Scalar>> llt(((a + a.transpose()) / Scalar(2)).eval());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("matrix is not positive definite");
  Scalar log_det = Scalar(0);
  for (Index i = 0; i < a.rows(); ++i)
    log_det += Scalar(2) * std::log(Scalar(llt.matrixLLT()(i, i)));
  // Hadamard guarantees >= 0; rounding can leave a tiny negative.
  return std::max(log_det_diag - log_det, Scalar(0));
}

}  // namespace mweica
