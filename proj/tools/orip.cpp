// orip: run, sweep and inspect outlier-robust informative planning experiments.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orip/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Outlier-robust informative planning experiments"};
  app.set_version_flag("--version", orip::experiment::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out = "out";

  auto* run = app.add_subcommand("run", "run one experiment");
  bool debug_tree = false;
  run->add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
  run->add_option("--set", overrides, "override a config key, e.g. --set search.iterations=200");
  run->add_option("--out", out, "output directory")->capture_default_str();
  run->add_flag("--debug-tree", debug_tree, "dump every search tree as JSON under trees/");

  auto* sweep = app.add_subcommand("sweep", "run modes x rhos x seeds and aggregate");
  orip::cli::SweepRequest req;
  std::string modes = "uct-none,uct-best,uct-copod,puct-copod", rhos = "0.05,0.1,0.15", seeds = "1-10";
  sweep->add_option("--config", req.config_path, "base JSON config");
  sweep->add_option("--set", req.overrides, "override a config key");
  sweep->add_option("--modes", modes, "comma-separated modes")->capture_default_str();
  sweep->add_option("--rhos", rhos, "comma-separated outlier rates")->capture_default_str();
  sweep->add_option("--seeds", seeds, "comma-separated seeds or a range a-b")->capture_default_str();
  sweep->add_option("--jobs", req.jobs, "parallel runs")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--checkpoint-step", req.checkpoint_step, "sample spacing of summary rows")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", req.out, "output directory")->capture_default_str();
  sweep->add_flag("--debug-tree", req.debug_tree, "dump search trees for every run");

  auto* score = app.add_subcommand("copod-score", "score a numeric CSV with COPOD");
  std::string input, output;
  double contamination = 0.1;
  score->add_option("input", input, "CSV with a header row")->required();
  score->add_option("--contamination", contamination, "expected outlier fraction")->capture_default_str();
  score->add_option("-o,--output", output, "output CSV")->required();

  auto* terrain = app.add_subcommand("terrain", "export a synthetic terrain");
  orip::world::TerrainSpec spec;
  std::string terrain_out, format = "esri";
  terrain->add_option("--seed", spec.seed, "terrain seed")->capture_default_str();
  terrain->add_option("--rows", spec.rows, "grid rows")->capture_default_str();
  terrain->add_option("--cols", spec.cols, "grid columns")->capture_default_str();
  terrain->add_option("--peaks", spec.peak_count, "number of peaks including the crater")->capture_default_str();
  terrain->add_option("--format", format, "esri or csv")->capture_default_str();
  terrain->add_option("-o,--output", terrain_out, "output file")->required();

  auto* pilot = app.add_subcommand("pilot", "write the pilot path as CSV");
  std::string pilot_out;
  pilot->add_option("--config", config_path, "JSON config file");
  pilot->add_option("--set", overrides, "override a config key");
  pilot->add_option("-o,--output", pilot_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return orip::cli::cmd_run(config_path, overrides, out, debug_tree);
  if (*sweep) {
    try {
      req.modes = orip::cli::split_list(modes);
      for (const auto& r : orip::cli::split_list(rhos)) req.rhos.push_back(std::stod(r));
      for (const auto& s : orip::cli::split_list(seeds)) {
        const auto dash = s.find('-');
        if (dash == std::string::npos) {
          req.seeds.push_back(std::stoull(s));
          continue;
        }
        const auto lo = std::stoull(s.substr(0, dash)), hi = std::stoull(s.substr(dash + 1));
        for (auto k = lo; k <= hi; ++k) req.seeds.push_back(k);
      }
    } catch (const std::exception&) {
      std::cerr << "invalid sweep: could not parse --rhos or --seeds\n";
      return orip::cli::kInvalidConfig;
    }
    return orip::cli::cmd_sweep(req);
  }
  if (*score) return orip::cli::cmd_copod_score(input, contamination, output);
  if (*terrain) return orip::cli::cmd_terrain(spec, terrain_out, format);
  if (*pilot) return orip::cli::cmd_pilot(config_path, overrides, pilot_out);
  return 0;
}
