#include "mweica/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace mweica {

namespace {

std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return bytes;
}

void write_all_bytes(const std::string& path,
                     const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path + "'");
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& field, double& value) {
  const std::string t = trimmed(field);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint16_t get_u16le(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32le(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace

SignalBundle load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");

  SignalBundle bundle;
  bundle.kind = SignalKind::csv;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool saw_any_line = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    saw_any_line = true;
    const std::vector<std::string> fields = split_fields(line);

    std::vector<double> values(fields.size());
    bool numeric = true;
    std::size_t bad_field = 0;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (!parse_double(fields[f], values[f])) {
        numeric = false;
        bad_field = f;
        break;
      }
    }
    if (!numeric) {
      if (line_no == 1 && rows.empty()) {
        for (const auto& f : fields) bundle.source_descriptors.push_back(trimmed(f));
        continue;
      }
      throw ParseError("line " + std::to_string(line_no) + ", field " +
                       std::to_string(bad_field + 1) + ": '" +
                       trimmed(fields[bad_field]) + "' is not numeric");
    }
    if (!rows.empty() && values.size() != rows.front().size())
      throw RaggedRows("line " + std::to_string(line_no) + " has " +
                       std::to_string(values.size()) + " fields, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(values));
  }
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  if (rows.empty())
    throw ParseError(saw_any_line ? "no data rows in '" + path + "'"
                                  : "'" + path + "' is empty");

  bundle.data.resize(static_cast<Index>(rows.size()),
                     static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      bundle.data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return bundle;
}

void save_csv(const Matrixd& m, const std::string& path,
              const std::vector<std::string>& header) {
  if (!header.empty() && static_cast<Index>(header.size()) != m.cols())
    throw ShapeMismatch("header width does not match the matrix");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j) out << ',';
      out << header[j];
    }
    out << '\n';
  }
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

void save_csv(const SignalBundle& b, const std::string& path) {
  save_csv(b.data, path);
}

SignalBundle load_wav(const std::string& path) {
  const std::vector<unsigned char> bytes = read_all_bytes(path);
  if (bytes.size() < 12 || bytes[0] != 'R' || bytes[1] != 'I' ||
      bytes[2] != 'F' || bytes[3] != 'F' || bytes[8] != 'W' ||
      bytes[9] != 'A' || bytes[10] != 'V' || bytes[11] != 'E')
    throw CorruptHeader("'" + path + "': no RIFF/WAVE signature at byte 0");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  bool have_data = false;
  std::size_t data_at = 0;
  std::size_t data_size = 0;

  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                         bytes.begin() + static_cast<std::ptrdiff_t>(at) + 4);
    const std::uint32_t size = get_u32le(bytes, at + 4);
    const std::size_t payload = at + 8;
    if (payload + size > bytes.size())
      throw CorruptHeader("'" + path + "': chunk '" + id + "' at byte " +
                          std::to_string(at) + " overruns the file");
    if (id == "fmt ") {
      if (size < 16)
        throw CorruptHeader("'" + path + "': fmt chunk at byte " +
                            std::to_string(at) + " is too short");
      const std::uint16_t audio_format = get_u16le(bytes, payload);
      channels = get_u16le(bytes, payload + 2);
      rate = get_u32le(bytes, payload + 4);
      const std::uint16_t bits = get_u16le(bytes, payload + 14);
      if (audio_format != 1)
        throw UnsupportedFormat("'" + path + "': only PCM is supported");
      if (bits != 16)
        throw UnsupportedFormat("'" + path + "': only 16-bit samples are supported");
      if (channels == 0 || rate == 0)
        throw CorruptHeader("'" + path + "': zero channel count or sample rate");
      have_fmt = true;
    } else if (id == "data") {
      have_data = true;
      data_at = payload;
      data_size = size;
    }
    at = payload + size + (size & 1);  // chunks are word-aligned
  }
  if (!have_fmt || !have_data)
    throw CorruptHeader("'" + path + "': missing fmt or data chunk");
  const std::size_t frame_bytes = std::size_t(2) * channels;
  if (data_size % frame_bytes != 0)
    throw CorruptHeader("'" + path + "': data chunk at byte " +
                        std::to_string(data_at) +
                        " is not a whole number of frames");

  SignalBundle bundle;
  bundle.kind = SignalKind::wav;
  bundle.sample_rate_hz = static_cast<int>(rate);
  const auto frames = static_cast<Index>(data_size / frame_bytes);
  bundle.data.resize(frames, channels);
  for (Index i = 0; i < frames; ++i) {
    for (Index c = 0; c < channels; ++c) {
      const std::size_t off =
          data_at + static_cast<std::size_t>(i) * frame_bytes +
          std::size_t(2) * static_cast<std::size_t>(c);
      const auto raw = static_cast<std::int16_t>(get_u16le(bytes, off));
      bundle.data(i, c) = static_cast<double>(raw) / 32768.0;
    }
  }
  return bundle;
}

void save_wav(const SignalBundle& b, const std::string& path, int rate) {
  if (rate <= 0) throw Error("sample rate must be positive");
  if (b.data.size() == 0) throw ShapeMismatch("no samples to write");
  const Index frames = b.data.rows();
  const Index channels = b.data.cols();
  const std::size_t data_size =
      std::size_t(2) * static_cast<std::size_t>(frames) *
      static_cast<std::size_t>(channels);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32le(out, static_cast<std::uint32_t>(36 + data_size));
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32le(out, 16);
  put_u16le(out, 1);  // PCM
  put_u16le(out, static_cast<std::uint16_t>(channels));
  put_u32le(out, static_cast<std::uint32_t>(rate));
  const auto block_align = static_cast<std::uint16_t>(2 * channels);
  put_u32le(out, static_cast<std::uint32_t>(rate) * block_align);
  put_u16le(out, block_align);
  put_u16le(out, 16);  // bits per sample
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32le(out, static_cast<std::uint32_t>(data_size));
  for (Index i = 0; i < frames; ++i) {
    for (Index c = 0; c < channels; ++c) {
      const long q = std::lround(b.data(i, c) * 32768.0);
      const long clamped = std::clamp(q, long(-32768), long(32767));
      put_u16le(out, static_cast<std::uint16_t>(
                         static_cast<std::int16_t>(clamped)));
    }
  }
  write_all_bytes(path, out);
}

SignalBundle load_image_gray(const std::string& path) {
  const std::vector<unsigned char> bytes = read_all_bytes(path);
  std::size_t at = 0;
  const auto fail = [&](const std::string& what) -> ParseError {
    return ParseError("'" + path + "': " + what + " at byte " +
                      std::to_string(at));
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw UnsupportedFormat("'" + path + "': not a binary PGM (P5) file");
  at = 2;

  // Header tokens are separated by whitespace; '#' starts a comment that
  // runs to the end of the line.
  const auto next_token = [&]() -> long {
    while (at < bytes.size()) {
      if (std::isspace(bytes[at])) {
        ++at;
      } else if (bytes[at] == '#') {
        while (at < bytes.size() && bytes[at] != '\n') ++at;
      } else {
        break;
      }
    }
    if (at >= bytes.size()) throw fail("truncated header");
    long value = 0;
    bool any = false;
    while (at < bytes.size() && std::isdigit(bytes[at])) {
      value = value * 10 + (bytes[at] - '0');
      if (value > (1L << 30)) throw fail("header field too large");
      ++at;
      any = true;
    }
    if (!any) throw fail("expected a decimal header field");
    return value;
  };

  const long width = next_token();
  const long height = next_token();
  const long maxval = next_token();
  if (width <= 0 || height <= 0) throw fail("non-positive image dimensions");
  if (maxval != 255)
    throw UnsupportedFormat("'" + path + "': only maxval 255 is supported");
  if (at >= bytes.size() || !std::isspace(bytes[at]))
    throw fail("missing whitespace after maxval");
  ++at;  // exactly one whitespace byte before the payload

  const std::size_t pixels =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - at < pixels) {
    at = bytes.size();
    throw fail("pixel payload truncated");
  }

  SignalBundle bundle;
  bundle.kind = SignalKind::image;
  bundle.image_width = width;
  bundle.image_height = height;
  bundle.data.resize(static_cast<Index>(pixels), 1);
  for (std::size_t i = 0; i < pixels; ++i)
    bundle.data(static_cast<Index>(i), 0) =
        static_cast<double>(bytes[at + i]) / 255.0;
  return bundle;
}

Vectord to_pixel_range(const Vectord& v) {
  if (v.size() == 0) throw ShapeMismatch("empty signal");
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (!(hi > lo)) return Vectord::Zero(v.size());
  return (v.array() - lo) / (hi - lo);
}

void save_image_gray(const SignalBundle& b, const std::string& path) {
  if (b.data.cols() != 1)
    throw ShapeMismatch("a PGM file holds exactly one signal column");
  if (b.image_width <= 0 || b.image_height <= 0)
    throw DimensionMismatch("image dimensions are not set");
  if (b.image_width * b.image_height != b.data.rows())
    throw DimensionMismatch("sample count " + std::to_string(b.data.rows()) +
                            " does not equal width*height " +
                            std::to_string(b.image_width * b.image_height));

  Vectord col = b.data.col(0);
  if (col.minCoeff() < 0.0 || col.maxCoeff() > 1.0) {
    // Separated components carry no scale or sign; rescale into pixel range
    // and orient so the median lands at or below one half.
    col = to_pixel_range(col);
    Vectord sorted = col;
    std::nth_element(sorted.data(), sorted.data() + sorted.size() / 2,
                     sorted.data() + sorted.size());
    if (sorted(sorted.size() / 2) > 0.5)
      col = (1.0 - col.array()).matrix();
  }

  std::vector<unsigned char> out;
  const std::string header = "P5\n" + std::to_string(b.image_width) + " " +
                             std::to_string(b.image_height) + "\n255\n";
  out.insert(out.end(), header.begin(), header.end());
  for (Index i = 0; i < col.size(); ++i) {
    const long q = std::lround(std::clamp(col(i), 0.0, 1.0) * 255.0);
    out.push_back(static_cast<unsigned char>(q));
  }
  write_all_bytes(path, out);
}

}  // namespace mweica
