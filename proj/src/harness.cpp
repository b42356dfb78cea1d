#include "mweica/harness.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <string>

#include "mweica/rng.hpp"

namespace mweica {

MixSpec random_mixing_matrix(Index d, std::uint64_t seed,
                             double condition_bound) {
  if (d < 2) throw Error("mixing dimension must be at least 2");
  if (!(condition_bound >= 1.0))
    throw Error("condition bound must be at least 1");

  MixSpec spec;
  spec.seed = seed;
  spec.condition_bound = condition_bound;
  Rng rng(seed);
  const int max_attempts = 1000;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Matrixd a = random_normal_matrix(d, d, rng);
    Eigen::JacobiSVD<Matrixd> svd(a);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0.0 && smax <= condition_bound * smin) {
      spec.A = std::move(a);
      return spec;
    }
  }
  throw RetryExhausted("no mixing matrix within condition bound " +
                       std::to_string(condition_bound) + " after " +
                       std::to_string(max_attempts) + " draws");
}

Matrixd mix(const Matrixd& s, const MixSpec& spec) {
  if (spec.A.rows() != spec.A.cols())
    throw ShapeMismatch("mixing matrix must be square");
  if (s.cols() != spec.A.rows())
    throw ShapeMismatch("source count " + std::to_string(s.cols()) +
                        " does not match mixing dimension " +
                        std::to_string(spec.A.rows()));
  if (spec.A.determinant() == 0.0)
    throw SingularMatrix("mixing matrix is singular");
  return s * spec.A.transpose();
}

SignalBundle bootstrap_sources(const std::vector<Vectord>& column_data,
                               Index n_samples, std::uint64_t seed) {
  if (column_data.empty()) throw EmptyColumn("no input columns");
  if (n_samples < 1) throw Error("sample count must be at least 1");
  for (std::size_t c = 0; c < column_data.size(); ++c)
    if (column_data[c].size() == 0)
      throw EmptyColumn("input column " + std::to_string(c) + " is empty");

  SignalBundle bundle;
  bundle.kind = SignalKind::bootstrap;
  bundle.data.resize(n_samples, static_cast<Index>(column_data.size()));
  for (std::size_t c = 0; c < column_data.size(); ++c) {
    Rng sub(Rng::mix(seed, static_cast<std::uint64_t>(c)));
    const Vectord& source = column_data[c];
    const auto len = static_cast<std::uint64_t>(source.size());
    for (Index i = 0; i < n_samples; ++i)
      bundle.data(i, static_cast<Index>(c)) =
          source(static_cast<Index>(sub.below(len)));
    bundle.source_descriptors.push_back("bootstrap");
  }
  return bundle;
}

SourceKind source_kind_from_name(const std::string& name) {
  if (name == "uniform") return SourceKind::uniform;
  if (name == "laplace") return SourceKind::laplace;
  if (name == "sine_mixture") return SourceKind::sine_mixture;
  if (name == "bimodal") return SourceKind::bimodal;
  throw Error("unknown source kind '" + name + "'");
}

std::string source_kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::uniform: return "uniform";
    case SourceKind::laplace: return "laplace";
    case SourceKind::sine_mixture: return "sine_mixture";
    case SourceKind::bimodal: return "bimodal";
  }
  throw Error("unknown source kind");
}

SignalBundle synth_sources(SourceKind kind, Index k, Index d,
                           std::uint64_t seed) {
  if (d < 1) throw Error("source count must be at least 1");
  if (k < d + 1) throw Error("need at least d+1 samples");

  SignalBundle bundle;
  bundle.kind = SignalKind::synthetic;
  bundle.data.resize(k, d);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Index c = 0; c < d; ++c) {
    Rng sub(Rng::mix(seed, static_cast<std::uint64_t>(c)));
    switch (kind) {
      case SourceKind::uniform: {
        // Uniform on [-sqrt(3), sqrt(3)]: variance 1.
        const double half_width = std::sqrt(3.0);
        for (Index i = 0; i < k; ++i)
          bundle.data(i, c) = (2.0 * sub.uniform01() - 1.0) * half_width;
        break;
      }
      case SourceKind::laplace: {
        // Scale 1/sqrt(2): variance 1.
        const double scale = 1.0 / std::sqrt(2.0);
        for (Index i = 0; i < k; ++i) bundle.data(i, c) = sub.laplace(scale);
        break;
      }
      case SourceKind::sine_mixture: {
        // Two tones with seeded phases; irrational per-column cycle rates
        // keep distinct columns decorrelated on the sample grid. Each tone
        // has variance 1/2 over a random phase, the sum has variance 1.
        const double f1 =
            std::fmod(static_cast<double>(c + 1) * 0.6180339887498949, 1.0);
        const double f2 =
            std::fmod(static_cast<double>(c + 1) * 0.41421356237309515, 1.0);
        const double p1 = two_pi * sub.uniform01();
        const double p2 = two_pi * sub.uniform01();
        for (Index i = 0; i < k; ++i) {
          const auto t = static_cast<double>(i);
          bundle.data(i, c) =
              std::sin(two_pi * f1 * t + p1) + std::sin(two_pi * f2 * t + p2);
        }
        break;
      }
      case SourceKind::bimodal: {
        // Equal-weight Gaussian mixture at +-1 with spread 0.4, scaled by
        // 1/sqrt(1.16) to unit variance.
        const double scale = 1.0 / std::sqrt(1.16);
        for (Index i = 0; i < k; ++i) {
          const double mode = sub.below(2) ? 1.0 : -1.0;
          bundle.data(i, c) = (mode + 0.4 * sub.normal()) * scale;
        }
        break;
      }
    }
    bundle.source_descriptors.push_back(source_kind_name(kind));
  }
  return bundle;
}

}  // namespace mweica
