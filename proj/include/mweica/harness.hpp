#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mweica/io.hpp"
#include "mweica/types.hpp"

namespace mweica {

// Seeded random mixing: square invertible A with a bounded condition
// number, applied to sources row-wise as X = S * A^T.
struct MixSpec {
  Matrixd A;
  std::uint64_t seed = 0;
  double condition_bound = 20.0;
};

MixSpec random_mixing_matrix(Index d, std::uint64_t seed,
                             double condition_bound = 20.0);
Matrixd mix(const Matrixd& s, const MixSpec& spec);

// With-replacement resample of each input column under its own decorrelated
// substream; output columns are mutually independent by construction.
SignalBundle bootstrap_sources(const std::vector<Vectord>& column_data,
                               Index n_samples, std::uint64_t seed);

enum class SourceKind { uniform, laplace, sine_mixture, bimodal };

SourceKind source_kind_from_name(const std::string& name);
std::string source_kind_name(SourceKind kind);

// d mutually independent zero-mean unit-variance columns of the chosen
// family (normalized in population, so sample moments fluctuate at the
// usual 1/sqrt(k) scale).
SignalBundle synth_sources(SourceKind kind, Index k, Index d,
                           std::uint64_t seed);

}  // namespace mweica
