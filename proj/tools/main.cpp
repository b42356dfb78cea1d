#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Blind source separation by joint diagonalization of "
      "Gaussian-weighted covariance matrices"};
  app.require_subcommand(1);

  mweica::cli::RunConfig config;

  const auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", config.out_dir, "output directory")->required();
  };
  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", config.seed, "random seed")
        ->capture_default_str();
  };
  const auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--n-weights", config.n_weights,
                    "weight-point count (0 = min(32, sample count))")
        ->capture_default_str();
    sub->add_option("--tol", config.tol, "solver stopping tolerance")
        ->capture_default_str();
    sub->add_option("--max-sweeps", config.max_sweeps,
                    "solver sweep/iteration budget")
        ->capture_default_str();
  };

  CLI::App* mix = app.add_subcommand(
      "mix", "mix source signals with a seeded random matrix");
  mix->add_option("inputs", config.inputs, "source files (csv/wav/pgm)")
      ->required()
      ->check(CLI::ExistingFile);
  add_seed(mix);
  add_out(mix);

  CLI::App* unmix =
      app.add_subcommand("unmix", "recover sources from mixed signals");
  unmix->add_option("inputs", config.inputs, "mixed files (csv/wav/pgm)")
      ->required()
      ->check(CLI::ExistingFile);
  unmix
      ->add_option("--method", config.method,
                   "separation method: mweica, weica or fastica")
      ->check(CLI::IsMember({"mweica", "weica", "fastica"}))
      ->capture_default_str();
  add_seed(unmix);
  add_solver_flags(unmix);
  add_out(unmix);

  CLI::App* index = app.add_subcommand(
      "index", "measure dependence between the columns of a table");
  index->add_option("inputs", config.inputs, "input file (csv/wav/pgm)")
      ->required()
      ->check(CLI::ExistingFile);
  index
      ->add_option("--n-weights", config.n_weights,
                   "weight-point count (0 = min(32, sample count))")
      ->capture_default_str();
  add_seed(index);
  add_out(index);

  CLI::App* bench = app.add_subcommand(
      "bench", "seeded mix/unmix/score trials for all methods");
  bench->add_option("inputs", config.inputs,
                    "optional CSV whose columns become bootstrap pools")
      ->check(CLI::ExistingFile);
  bench->add_option("--trials", config.trials, "number of trials")
      ->capture_default_str();
  add_seed(bench);
  add_solver_flags(bench);
  add_out(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (CLI::App* sub : {mix, unmix, index, bench}) {
    if (sub->parsed()) {
      config.subcommand = sub->get_name();
      break;
    }
  }
  return mweica::cli::run(config);
}
