#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mweica {

// Dense working types. Rows are samples, columns are dimensions unless a
// function says otherwise.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;
using Index = Eigen::Index;

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateData : Error { using Error::Error; };
struct SingularWeightCovariance : Error { using Error::Error; };
struct WeightUnderflow : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct ZeroMatrix : Error { using Error::Error; };
struct TooFewValidWeightPoints : Error { using Error::Error; };
struct ZeroVarianceSource : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct MismatchedTrialSets : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct RetryExhausted : Error { using Error::Error; };

// I/O errors live here too so callers can catch one hierarchy.
struct ParseError : Error { using Error::Error; };
struct RaggedRows : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct CorruptHeader : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct EmptyColumn : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Symmetry within relative tolerance (scaled by the largest entry).
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a,
                  typename Derived::Scalar rel_tol = 1e-12) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) return false;
  const Scalar scale = a.cwiseAbs().maxCoeff();
  const Scalar diff = (a - a.transpose()).cwiseAbs().maxCoeff();
  return diff <= rel_tol * std::max(scale, Scalar(1));
}

// Throws unless X looks like a usable sample: finite, k >= d + 1.
template <typename Derived>
void validate_data(const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() < x.cols() + 1)
    throw DegenerateData("data matrix needs at least d + 1 samples, got " +
                         std::to_string(x.rows()) + " rows for " +
                         std::to_string(x.cols()) + " columns");
  if (!x.allFinite())
    throw DegenerateData("data matrix contains non-finite entries");
}

}  // namespace mweica
