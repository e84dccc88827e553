#include "besovlab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Spectral approximation and Besov-norm experiments on discretized manifolds"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const Flag options[] = {
      {"--manifold", "manifold", "circle | torus2 | sphere2 | mesh"},
      {"--nodes", "nodes", "circle/torus nodes per dimension, or sphere quadrature band"},
      {"--band", "band", "eigenvalue cutoff of the computed spectrum"},
      {"--mesh", "mesh", "OFF triangle mesh (manifold = mesh)"},
      {"--alpha", "alpha", "smoothness values, comma separated"},
      {"--p", "p", "integrability exponents, comma separated (inf allowed)"},
      {"--q", "q", "fine-index values, comma separated (inf allowed)"},
      {"--k", "k", "Sobolev orders, comma separated"},
      {"--jmax", "jmax", "dyadic truncation level J"},
      {"--seed", "seed", "random seed"},
      {"--out", "out", "output directory"},
      {"--corpus", "corpus", "corpus ids, comma separated, or all"},
      {"--trials", "trials", "randomized trials per check"},
  };
  std::map<std::string, std::string> values;
  for (const auto& o : options) app.add_option(o.name, values[o.key], o.help);
  app.add_option("--config", config_path, "plain-text config file (key = value)");
  bool timings = false;
  app.add_flag("--timings", timings, "record wall-clock runtime columns");

  for (const auto& name : besovlab::subcommands()) app.add_subcommand(name, "run the " + name + " experiment");
  app.add_subcommand("all", "run every experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    besovlab::Settings settings;
    if (!config_path.empty()) settings = besovlab::read_config(config_path);
    for (const auto& [key, value] : values) {
      if (!value.empty()) settings[key] = value;
    }
    if (timings) settings["timings"] = "true";
    const besovlab::ExperimentConfig config = besovlab::make_config(settings);
    return besovlab::run(app.get_subcommands().front()->get_name(), config);
  } catch (const besovlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
