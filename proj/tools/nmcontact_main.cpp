#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nmcontact/config.hpp"
#include "nmcontact/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Unilateral contact with nonmonotone friction on the unit square"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Run the benchmark described by a config file");
  std::string config_path;
  solve->add_option("config", config_path, "Path to the key = value config file")->required();
  std::optional<std::string> preset;
  solve->add_option("--preset", preset, "Override the preset (wall-left or wall-right)")
      ->check(CLI::IsMember({"wall-left", "wall-right"}));
  std::optional<int> mesh_n;
  solve->add_option("--mesh", mesh_n, "Solve a single mesh with N divisions per side");
  std::optional<double> epsilon;
  solve->add_option("--epsilon", epsilon, "Override the regularization parameter");
  std::optional<std::string> out_dir;
  solve->add_option("--out", out_dir, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    nmc::ProblemConfig cfg = nmc::parse_config(config_path);
    if (preset) cfg.preset = *preset;
    if (mesh_n) cfg.n_list = {*mesh_n};
    if (epsilon) cfg.epsilon = *epsilon;
    if (out_dir) cfg.output_dir = *out_dir;
    return nmc::run_benchmark(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
