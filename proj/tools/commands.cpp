#include "commands.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <utility>

#include "mweica/eval.hpp"
#include "mweica/harness.hpp"
#include "mweica/ica.hpp"
#include "mweica/independence.hpp"
#include "mweica/io.hpp"

namespace fs = std::filesystem;

namespace mweica::cli {

namespace {

int exit_code_for(const std::exception& e) {
  // 3 for failures of the numerics on valid input, 2 for everything the
  // caller can fix (files, formats, options, unusable data).
  if (dynamic_cast<const TooFewValidWeightPoints*>(&e) ||
      dynamic_cast<const SingularWeightCovariance*>(&e) ||
      dynamic_cast<const NotPositiveDefinite*>(&e) ||
      dynamic_cast<const SingularMatrix*>(&e) ||
      dynamic_cast<const ZeroVarianceSource*>(&e) ||
      dynamic_cast<const WeightUnderflow*>(&e) ||
      dynamic_cast<const RetryExhausted*>(&e) ||
      dynamic_cast<const ZeroMatrix*>(&e) ||
      dynamic_cast<const ZeroVector*>(&e) ||
      dynamic_cast<const MismatchedTrialSets*>(&e))
    return 3;
  return 2;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Collects (temporary, final) path pairs; commit renames everything at
// once, the destructor sweeps up anything left behind by a failure.
class OutputStager {
 public:
  explicit OutputStager(fs::path dir) : dir_(std::move(dir)) {}

  OutputStager(const OutputStager&) = delete;
  OutputStager& operator=(const OutputStager&) = delete;

  std::string stage(const std::string& name) {
    const fs::path tmp = dir_ / (name + ".partial");
    staged_.emplace_back(tmp, dir_ / name);
    return tmp.string();
  }

  void commit() {
    for (const auto& [tmp, final_path] : staged_)
      fs::rename(tmp, final_path);
    staged_.clear();
  }

  ~OutputStager() {
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_) fs::remove(tmp, ec);
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> staged_;
};

class Metadata {
 public:
  void set(const std::string& key, const std::string& value) {
    kv_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) {
    set(key, format_double(value));
  }
  void set(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
  }
  void set(const std::string& key, Index value) {
    set(key, std::to_string(value));
  }
  void set(const std::string& key, int value) {
    set(key, std::to_string(value));
  }
  void set(const std::string& key, bool value) {
    set(key, std::string(value ? "true" : "false"));
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& [k, v] : kv_) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed on '" + path + "'");
  }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
};

SignalKind kind_from_extension(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".csv") return SignalKind::csv;
  if (ext == ".wav") return SignalKind::wav;
  if (ext == ".pgm") return SignalKind::image;
  throw UnsupportedFormat("'" + path +
                          "': unknown extension (expect .csv, .wav or .pgm)");
}

SignalBundle load_any(const std::string& path) {
  switch (kind_from_extension(path)) {
    case SignalKind::csv: return load_csv(path);
    case SignalKind::wav: return load_wav(path);
    default: return load_image_gray(path);
  }
}

struct LoadedInputs {
  Matrixd x;          // all input signals, one per column
  SignalKind kind = SignalKind::csv;
  int sample_rate_hz = 0;
  Index image_width = 0;
  Index image_height = 0;
  std::vector<std::string> digests;
};

LoadedInputs load_inputs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw Error("no input files given");
  LoadedInputs in;
  Index rows = -1;
  Index cols = 0;
  std::vector<SignalBundle> bundles;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    SignalBundle b = load_any(paths[i]);
    in.digests.push_back(fnv1a64_file(paths[i]));
    if (i == 0) {
      in.kind = b.kind;
      in.sample_rate_hz = b.sample_rate_hz;
      in.image_width = b.image_width;
      in.image_height = b.image_height;
      rows = b.data.rows();
    } else {
      if (b.kind != in.kind)
        throw ShapeMismatch("'" + paths[i] +
                            "': inputs mix different media");
      if (b.data.rows() != rows)
        throw ShapeMismatch("'" + paths[i] + "' has " +
                            std::to_string(b.data.rows()) +
                            " samples, expected " + std::to_string(rows));
      if (b.kind == SignalKind::wav && b.sample_rate_hz != in.sample_rate_hz)
        throw ShapeMismatch("'" + paths[i] + "': sample rate differs");
      if (b.kind == SignalKind::image &&
          (b.image_width != in.image_width ||
           b.image_height != in.image_height))
        throw ShapeMismatch("'" + paths[i] + "': image dimensions differ");
    }
    cols += b.data.cols();
    bundles.push_back(std::move(b));
  }
  in.x.resize(rows, cols);
  Index at = 0;
  for (const auto& b : bundles) {
    in.x.middleCols(at, b.data.cols()) = b.data;
    at += b.data.cols();
  }
  return in;
}

// Signals leave in the medium they arrived in. Audio columns are rescaled
// to a 0.999 peak (linear per-column gain, recorded by the caller); image
// columns go through the min-max pixel quantizer.
void save_signals(const LoadedInputs& in, const Matrixd& signals,
                  const std::string& stem, OutputStager& stager,
                  Metadata& meta) {
  switch (in.kind) {
    case SignalKind::csv: {
      save_csv(signals, stager.stage(stem + ".csv"));
      return;
    }
    case SignalKind::wav: {
      for (Index j = 0; j < signals.cols(); ++j) {
        const double peak = signals.col(j).cwiseAbs().maxCoeff();
        const double gain = peak > 0.0 ? 0.999 / peak : 1.0;
        SignalBundle b;
        b.kind = SignalKind::wav;
        b.sample_rate_hz = in.sample_rate_hz;
        b.data = signals.col(j) * gain;
        const std::string name = stem + "_" + std::to_string(j) + ".wav";
        save_wav(b, stager.stage(name), in.sample_rate_hz);
        meta.set("gain_" + name, gain);
      }
      return;
    }
    default: {
      for (Index j = 0; j < signals.cols(); ++j) {
        SignalBundle b;
        b.kind = SignalKind::image;
        b.image_width = in.image_width;
        b.image_height = in.image_height;
        b.data = signals.col(j);
        save_image_gray(b, stager.stage(stem + "_" + std::to_string(j) + ".pgm"));
      }
      return;
    }
  }
}

void describe_inputs(const RunConfig& config, const LoadedInputs& in,
                     Metadata& meta) {
  for (std::size_t i = 0; i < config.inputs.size(); ++i) {
    meta.set("input_" + std::to_string(i), config.inputs[i]);
    meta.set("digest_" + std::to_string(i), in.digests[i]);
  }
  meta.set("k", in.x.rows());
  meta.set("d", in.x.cols());
}

fs::path prepare_out_dir(const RunConfig& config) {
  if (config.out_dir.empty()) throw Error("an output directory is required");
  fs::create_directories(config.out_dir);
  return {config.out_dir};
}

}  // namespace

int run_mix(const RunConfig& config) {
  const fs::path out = prepare_out_dir(config);
  const LoadedInputs in = load_inputs(config.inputs);
  if (in.x.cols() < 2)
    throw ShapeMismatch("mixing needs at least two source signals");

  const MixSpec spec = random_mixing_matrix(in.x.cols(), config.seed);
  const Matrixd mixed = mix(in.x, spec);

  Eigen::JacobiSVD<Matrixd> svd(spec.A);
  const double condition =
      svd.singularValues().maxCoeff() / svd.singularValues().minCoeff();

  OutputStager stager(out);
  Metadata meta;
  meta.set("command", std::string("mix"));
  meta.set("seed", config.seed);
  meta.set("condition_bound", spec.condition_bound);
  meta.set("condition", condition);
  describe_inputs(config, in, meta);
  save_signals(in, mixed, "mixed", stager, meta);
  save_csv(spec.A, stager.stage("A.csv"));
  meta.write(stager.stage("metadata.txt"));
  stager.commit();
  return 0;
}

int run_unmix(const RunConfig& config) {
  const fs::path out = prepare_out_dir(config);
  const LoadedInputs in = load_inputs(config.inputs);
  if (in.x.cols() < 2)
    throw ShapeMismatch("unmixing needs at least two mixed signals");

  UnmixingResult<double> result;
  if (config.method == "mweica") {
    MweicaOptions opts;
    opts.n_weights = config.n_weights;
    opts.seed = config.seed;
    opts.tol = config.tol;
    opts.max_sweeps = config.max_sweeps;
    result = mweica(in.x, opts);
  } else if (config.method == "weica") {
    result = weica(in.x, config.seed);
  } else if (config.method == "fastica") {
    result = fastica_baseline(in.x, config.seed, config.tol,
                              config.max_sweeps);
  } else {
    throw Error("unknown method '" + config.method + "'");
  }

  OutputStager stager(out);
  Metadata meta;
  meta.set("command", std::string("unmix"));
  meta.set("method", config.method);
  meta.set("seed", config.seed);
  meta.set("n_weights", static_cast<Index>(result.weight_indices.size()));
  meta.set("tol", config.tol);
  meta.set("max_sweeps", config.max_sweeps);
  describe_inputs(config, in, meta);
  meta.set("residual", result.residual);
  meta.set("converged", result.diagnostics.converged);
  meta.set("sweeps_used", result.diagnostics.sweeps_used);
  meta.set("near_degenerate_spectrum",
           result.diagnostics.near_degenerate_spectrum);
  meta.set("rejected_weight_points",
           result.diagnostics.rejected_weight_points);
  save_csv(result.W, stager.stage("W.csv"));
  save_signals(in, result.sources, "source", stager, meta);
  meta.write(stager.stage("metadata.txt"));
  stager.commit();
  return 0;
}

int run_index(const RunConfig& config) {
  const fs::path out = prepare_out_dir(config);
  const LoadedInputs in = load_inputs(config.inputs);

  const Index n = config.n_weights > 0
                      ? config.n_weights
                      : std::min<Index>(32, in.x.rows());
  const IndexReport<double> report = independence_index(in.x, n, config.seed);

  OutputStager stager(out);
  Metadata meta;
  meta.set("command", std::string("index"));
  meta.set("seed", config.seed);
  meta.set("n_requested", n);
  meta.set("n_used", report.n_used);
  describe_inputs(config, in, meta);
  meta.set("index", report.index);

  Matrixd per_point(report.n_used, 1);
  for (Index i = 0; i < report.n_used; ++i)
    per_point(i, 0) = report.per_point[static_cast<std::size_t>(i)];
  save_csv(per_point, stager.stage("per_point.csv"), {"diag_error"});
  meta.write(stager.stage("metadata.txt"));
  stager.commit();

  std::cout << "index=" << format_double(report.index) << "\n";
  return 0;
}

int run_bench(const RunConfig& config) {
  const fs::path out = prepare_out_dir(config);
  if (config.trials < 1) throw Error("trials must be at least 1");
  const int trials = config.trials;

  // With an input table its columns become bootstrap pools (columns
  // resampled independently are independent sources by construction);
  // without one the trials use synthetic uniform sources.
  std::vector<Vectord> pools;
  std::vector<std::string> digests;
  Index k = 5000;
  Index d = 2;
  if (!config.inputs.empty()) {
    if (config.inputs.size() != 1)
      throw Error("bench takes at most one input table");
    if (kind_from_extension(config.inputs[0]) != SignalKind::csv)
      throw UnsupportedFormat("bench input must be a CSV table");
    const SignalBundle b = load_csv(config.inputs[0]);
    digests.push_back(fnv1a64_file(config.inputs[0]));
    if (b.data.cols() < 2)
      throw ShapeMismatch("bench input needs at least two columns");
    for (Index c = 0; c < b.data.cols(); ++c) pools.push_back(b.data.col(c));
    k = b.data.rows();
    d = b.data.cols();
  }

  const std::vector<std::string> methods = {"mweica", "weica", "fastica"};
  std::map<std::string, std::vector<double>> scores;
  for (const auto& m : methods)
    scores[m].assign(static_cast<std::size_t>(trials), 0.0);
  std::vector<double> setup_ms(static_cast<std::size_t>(trials), 0.0);
  std::map<std::string, std::vector<double>> unmix_ms = scores;

  // Trials are independent given their substream seed; slots keep the
  // aggregation order fixed no matter how they are scheduled.
  detail::parallel_slots(trials, [&](Index t) {
    const std::uint64_t trial_seed =
        Rng::mix(config.seed, static_cast<std::uint64_t>(t));
    const auto t0 = std::chrono::steady_clock::now();
    const SignalBundle sources =
        pools.empty()
            ? synth_sources(SourceKind::uniform, k, d, trial_seed)
            : bootstrap_sources(pools, k, trial_seed);
    const MixSpec spec = random_mixing_matrix(d, Rng::mix(trial_seed, 1));
    const Matrixd x = mix(sources.data, spec);
    const auto t1 = std::chrono::steady_clock::now();
    setup_ms[static_cast<std::size_t>(t)] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    for (const auto& m : methods) {
      const auto u0 = std::chrono::steady_clock::now();
      UnmixingResult<double> result;
      if (m == "mweica") {
        MweicaOptions opts;
        opts.n_weights = config.n_weights;
        opts.seed = trial_seed;
        opts.tol = config.tol;
        opts.max_sweeps = config.max_sweeps;
        result = mweica(x, opts);
      } else if (m == "weica") {
        result = weica(x, trial_seed);
      } else {
        result = fastica_baseline(x, trial_seed);
      }
      const auto u1 = std::chrono::steady_clock::now();
      unmix_ms.at(m)[static_cast<std::size_t>(t)] =
          std::chrono::duration<double, std::milli>(u1 - u0).count();
      scores.at(m)[static_cast<std::size_t>(t)] =
          score_separation(result.sources, sources.data).mean_abs_congruence;
    }
  });

  const RankSummary summary = rank_methods(scores);

  OutputStager stager(out);
  Matrixd score_table(trials, 1 + static_cast<Index>(methods.size()));
  std::vector<std::string> score_header = {"trial"};
  for (std::size_t m = 0; m < methods.size(); ++m) {
    score_header.push_back(methods[m]);
    for (int t = 0; t < trials; ++t)
      score_table(t, 1 + static_cast<Index>(m)) =
          scores[methods[m]][static_cast<std::size_t>(t)];
  }
  for (int t = 0; t < trials; ++t) score_table(t, 0) = t;
  save_csv(score_table, stager.stage("scores.csv"), score_header);

  {
    std::ofstream ranks(stager.stage("ranks.csv"),
                        std::ios::binary | std::ios::trunc);
    if (!ranks) throw IoError("cannot write rank summary");
    ranks << "method,min_rank,q1,median,q3,max_rank\n";
    for (const auto& m : methods) {
      const auto& q = summary.quartiles.at(m);
      ranks << m;
      for (const double v : q) ranks << ',' << format_double(v);
      ranks << '\n';
    }
    if (!ranks) throw IoError("cannot write rank summary");
  }

  // Wall-clock table; inherently non-reproducible, hence a separate file
  // that determinism comparisons leave out.
  {
    std::ofstream times(stager.stage("timings.csv"),
                        std::ios::binary | std::ios::trunc);
    if (!times) throw IoError("cannot write timing table");
    times << "trial,setup_ms";
    for (const auto& m : methods) times << ',' << m << "_ms";
    times << '\n';
    for (int t = 0; t < trials; ++t) {
      times << t << ',' << format_double(setup_ms[static_cast<std::size_t>(t)]);
      for (const auto& m : methods)
        times << ','
              << format_double(unmix_ms[m][static_cast<std::size_t>(t)]);
      times << '\n';
    }
    if (!times) throw IoError("cannot write timing table");
  }

  Metadata meta;
  meta.set("command", std::string("bench"));
  meta.set("seed", config.seed);
  meta.set("trials", trials);
  meta.set("n_weights", config.n_weights);
  meta.set("tol", config.tol);
  meta.set("max_sweeps", config.max_sweeps);
  meta.set("k", k);
  meta.set("d", d);
  meta.set("sources", pools.empty() ? std::string("synthetic:uniform")
                                    : std::string("bootstrap"));
  for (std::size_t i = 0; i < config.inputs.size(); ++i) {
    meta.set("input_" + std::to_string(i), config.inputs[i]);
    meta.set("digest_" + std::to_string(i), digests[i]);
  }
  for (const auto& m : methods)
    meta.set("median_rank_" + m, summary.quartiles.at(m)[2]);
  meta.write(stager.stage("metadata.txt"));
  stager.commit();

  for (const auto& m : methods)
    std::cout << m << " median_rank="
              << format_double(summary.quartiles.at(m)[2]) << "\n";
  return 0;
}

int run(const RunConfig& config) {
  try {
    if (config.subcommand == "mix") return run_mix(config);
    if (config.subcommand == "unmix") return run_unmix(config);
    if (config.subcommand == "index") return run_index(config);
    if (config.subcommand == "bench") return run_bench(config);
    std::cerr << "error: unknown subcommand '" << config.subcommand << "'\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace mweica::cli
