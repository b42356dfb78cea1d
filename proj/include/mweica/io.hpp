#pragma once

#include <string>
#include <vector>

#include "mweica/types.hpp"

namespace mweica {

enum class SignalKind { csv, wav, image, synthetic, bootstrap };

// A loaded or generated multi-signal table: samples are rows, one signal per
// column. Metadata fields are meaningful only for the matching kind.
struct SignalBundle {
  Matrixd data;
  SignalKind kind = SignalKind::csv;
  int sample_rate_hz = 0;  // wav: > 0
  Index image_width = 0;   // image: width * height == data.rows()
  Index image_height = 0;
  std::vector<std::string> source_descriptors;  // per-column provenance
};

// CSV dialect: UTF-8, comma separator, LF line endings, decimal point,
// values written with 17 significant digits so doubles round-trip exactly.
// An optional single non-numeric header line is skipped on load.
SignalBundle load_csv(const std::string& path);
void save_csv(const Matrixd& m, const std::string& path,
              const std::vector<std::string>& header = {});
void save_csv(const SignalBundle& b, const std::string& path);

// WAV: RIFF, PCM, 16-bit little-endian, mono or multichannel. Samples map
// to [-1, 1) by division by 32768; channels become columns.
SignalBundle load_wav(const std::string& path);
void save_wav(const SignalBundle& b, const std::string& path, int rate);

// PGM: binary P5, maxval 255, one image per file, pixels row-major in one
// column scaled to [0, 1]. Saving data already inside [0, 1] quantizes it
// directly (so load/save round trips are byte-identical); anything else is
// min-max rescaled per column first, oriented so the median pixel lands at
// or below one half.
SignalBundle load_image_gray(const std::string& path);
void save_image_gray(const SignalBundle& b, const std::string& path);

// Min-max rescale of an arbitrary signal into [0, 1]; constant input maps
// to zero.
Vectord to_pixel_range(const Vectord& v);

}  // namespace mweica
