#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "decilab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"decimated linear process laboratory"};
  app.require_subcommand(1);
  decilab::cli::Invocation inv;
  std::uint64_t seed = 0;
  std::string out_dir;
  const std::map<std::string, std::string> about{
      {"gamma", "limiting covariance matrix of the family"},
      {"simulate", "one realization of the decimated coefficients"},
      {"cov-check", "Monte Carlo covariance of square-sums at one level"},
      {"clt", "replicated normalized square-sums with normality diagnostics"},
      {"specdens", "spectral density at zero from windowed coefficients"},
      {"sweep", "cov-check across levels"}};
  for (const auto& name : decilab::cli::commands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", inv.config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "base seed, overrides run.seed");
    sub->add_option("--out", out_dir, "output directory, overrides run.out");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : decilab::cli::kExitConfig;
  }
  for (const auto* sub : app.get_subcommands()) {
    inv.command = sub->get_name();
    if (sub->count("--seed") > 0) inv.seed = seed;
    if (sub->count("--out") > 0) inv.out_dir = out_dir;
  }
  return decilab::cli::run(inv, std::cout, std::cerr);
}
