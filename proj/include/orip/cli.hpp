#ifndef ORIP_CLI_HPP
#define ORIP_CLI_HPP

// Command implementations behind the `orip` executable. Each returns a
// process exit code and reports problems on `err`.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "orip/config.hpp"
#include "orip/copod.hpp"
#include "orip/experiment_io.hpp"
#include "orip/grid_io.hpp"
#include "orip/pipeline.hpp"
#include "orip/world_sim.hpp"

namespace orip::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalidConfig = 2, kRuntimeFailure = 3 };

struct RunOutcome {
  int exit_code = kOk;
  std::vector<pipeline::EpochRecord> records;
  std::string error;
};

inline std::string run_dir_name(const pipeline::PipelineConfig& cfg) {
  std::ostringstream name;
  name << experiment::mode_label(cfg) << "_rho" << experiment::format_number(cfg.rho) << "_seed" << cfg.seed;
  return name.str();
}

/// Runs one configured experiment and writes results.csv, trajectory.csv and
/// manifest.json (plus trees/ when `debug_tree`) into `out_dir`.
inline RunOutcome execute_run(const pipeline::PipelineConfig& cfg, const fs::path& out_dir, bool debug_tree,
                              std::shared_ptr<const world::ElevationGrid> truth = nullptr) {
  RunOutcome outcome;
  fs::create_directories(out_dir);
  std::function<void(int, const mcts::SearchResult&)> on_search;
  int tree_serial = 0;
  if (debug_tree) {
    fs::create_directories(out_dir / "trees");
    on_search = [&](int epoch, const mcts::SearchResult& result) {
      std::ostringstream name;
      name << "epoch_" << std::setw(4) << std::setfill('0') << epoch << "_" << tree_serial++ << ".json";
      std::ofstream(out_dir / "trees" / name.str()) << experiment::tree_to_json(result.tree).dump();
    };
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    outcome.records = pipeline::run_experiment(cfg, std::move(truth), on_search);
  } catch (const pipeline::RunFailure& e) {
    outcome.exit_code = kRuntimeFailure;
    outcome.error = e.what();
    return outcome;
  } catch (const NumericalFailure& e) {
    outcome.exit_code = kRuntimeFailure;
    outcome.error = std::string("epoch 0: ") + e.what();
    return outcome;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  {
    std::ofstream csv(out_dir / "results.csv");
    experiment::write_results_csv(csv, cfg, outcome.records);
  }
  {
    std::ofstream traj(out_dir / "trajectory.csv");
    experiment::write_trajectory_csv(traj, outcome.records);
  }
  std::ofstream(out_dir / "manifest.json") << experiment::manifest(cfg, outcome.records, wall).dump(2) << "\n";
  return outcome;
}

inline int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& out,
                   bool debug_tree, std::ostream& err = std::cerr) {
  pipeline::PipelineConfig cfg;
  try {
    cfg = config::load(config_path, overrides);
  } catch (const config::ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const InvalidParameter& e) {
    err << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  }
  std::shared_ptr<const world::ElevationGrid> truth;
  try {
    truth = pipeline::make_world(cfg.world);
  } catch (const std::exception& e) {
    err << "invalid config: world: " << e.what() << "\n";
    return kInvalidConfig;
  }
  const auto outcome = execute_run(cfg, out, debug_tree, truth);
  if (outcome.exit_code != kOk) err << "run failed at " << outcome.error << "\n";
  return outcome.exit_code;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

struct SweepRequest {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::string> modes;
  std::vector<double> rhos;
  std::vector<std::uint64_t> seeds;
  std::string out = "out";
  int jobs = 1;
  int checkpoint_step = 20;
  bool debug_tree = false;
};

/// Cross product of modes × rhos × seeds. A failing run is logged and the
/// sweep continues; the exit code is non-zero if any run failed.
inline int cmd_sweep(const SweepRequest& req, std::ostream& log = std::cerr) {
  if (req.modes.empty() || req.rhos.empty() || req.seeds.empty()) {
    log << "invalid sweep: modes, rhos and seeds must all be non-empty\n";
    return kInvalidConfig;
  }
  pipeline::PipelineConfig base;
  std::vector<pipeline::PipelineConfig> runs;
  try {
    base = config::load(req.config_path, req.overrides);
    for (const auto& m : req.modes) {
      const auto& spec = experiment::parse_mode(m);
      for (const double rho : req.rhos) {
        for (const auto seed : req.seeds) {
          auto c = base;
          c.planner_mode = spec.planner;
          c.detector_mode = spec.detector;
          c.search.objective_count = c.objective_count();
          c.rho = rho;
          c.seed = seed;
          c.validate();
          runs.push_back(c);
        }
      }
    }
  } catch (const std::exception& e) {
    log << "invalid sweep: " << e.what() << "\n";
    return kInvalidConfig;
  }
  std::shared_ptr<const world::ElevationGrid> truth;
  try {
    truth = pipeline::make_world(base.world);
  } catch (const std::exception& e) {
    log << "invalid config: world: " << e.what() << "\n";
    return kInvalidConfig;
  }

  const fs::path out(req.out);
  fs::create_directories(out);
  std::vector<RunOutcome> outcomes(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      outcomes[i] = execute_run(runs[i], out / run_dir_name(runs[i]), req.debug_tree, truth);
      std::lock_guard<std::mutex> lock(log_mutex);
      log << "[" << (i + 1) << "/" << runs.size() << "] " << run_dir_name(runs[i]) << ": "
          << (outcomes[i].exit_code == kOk ? "ok" : "FAILED " + outcomes[i].error) << "\n";
    }
  };
  const int jobs = std::max(1, std::min<int>(req.jobs, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<experiment::RunCurve> curves;
  std::ofstream failed(out / "failed_runs.txt");
  int n_failed = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (outcomes[i].exit_code != kOk) {
      failed << run_dir_name(runs[i]) << ": " << outcomes[i].error << "\n";
      ++n_failed;
      continue;
    }
    curves.push_back(experiment::curve_from_rows(experiment::rows_from_records(runs[i], outcomes[i].records)));
  }
  const auto grid = experiment::checkpoints(base.pilot_samples, base.budget_samples, req.checkpoint_step);
  std::ofstream summary(out / "sweep_summary.csv");
  experiment::write_summary_csv(summary, experiment::aggregate(curves, grid));
  return n_failed == 0 ? kOk : kFailure;
}

/// Reads a headered numeric CSV and appends COPOD score and flag columns.
inline int cmd_copod_score(const std::string& input, double contamination, const std::string& output,
                           std::ostream& err = std::cerr) {
  std::ifstream in(input);
  if (!in) {
    err << input << ": cannot open file\n";
    return kFailure;
  }
  std::string header;
  if (!std::getline(in, header)) {
    err << input << ":1: missing header row\n";
    return kFailure;
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto names = io::detail::split_csv(header);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::detail::trim(line).empty()) continue;
    const auto fields = io::detail::split_csv(line);
    if (fields.size() != names.size()) {
      err << input << ":" << line_no << ": expected " << names.size() << " columns, found " << fields.size() << "\n";
      return kFailure;
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = io::detail::parse_number(fields[c]);
      if (!v || !std::isfinite(*v)) {
        err << input << ":" << line_no << ": column " << (c + 1) << " ('" << io::detail::trim(names[c])
            << "') is not a finite number\n";
        return kFailure;
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  Matrix data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < names.size(); ++c)
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  copod::CopodModel model;
  try {
    model = copod::fit_copod(data, contamination);
  } catch (const InvalidParameter& e) {
    err << input << ": " << e.what() << "\n";
    return kFailure;
  }
  const Vector scores = copod::score_rows(model, data);
  const auto flags = copod::detect(model, data);
  std::ofstream out(output);
  if (!out) {
    err << output << ": cannot write file\n";
    return kFailure;
  }
  out << header << ",score,is_outlier\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << experiment::format_number(rows[i][c]);
    out << "," << experiment::format_number(scores[static_cast<Eigen::Index>(i)]) << "," << (flags[i] ? 1 : 0)
        << "\n";
  }
  return kOk;
}

inline int cmd_terrain(const world::TerrainSpec& spec, const std::string& out_path, const std::string& format,
                       std::ostream& err = std::cerr) {
  if (format != "esri" && format != "csv") {
    err << "unknown format '" << format << "' (expected esri or csv)\n";
    return kInvalidConfig;
  }
  world::ElevationGrid grid;
  try {
    grid = world::synth_terrain(spec);
  } catch (const InvalidParameter& e) {
    err << e.what() << "\n";
    return kInvalidConfig;
  }
  std::ofstream out(out_path);
  if (!out) {
    err << out_path << ": cannot write file\n";
    return kFailure;
  }
  if (format == "esri") io::write_esri(grid, out);
  else io::write_csv_grid(grid, out);
  out.flush();
  if (!out) {
    err << out_path << ": write failed\n";
    return kFailure;
  }
  return kOk;
}

/// Writes the pilot loop for a world as x1,x2,heading.
inline int cmd_pilot(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& out_path, std::ostream& err = std::cerr) {
  try {
    const auto cfg = config::load(config_path, overrides);
    const auto truth = pipeline::make_world(cfg.world);
    const auto path = world::bezier_pilot_path(truth->extent(), static_cast<std::size_t>(cfg.pilot_samples));
    std::ofstream out(out_path);
    out << "x1,x2,heading\n";
    for (const auto& p : path)
      out << experiment::format_number(p.x1) << "," << experiment::format_number(p.x2) << ","
          << experiment::format_number(p.heading) << "\n";
    return out ? kOk : kFailure;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kInvalidConfig;
  }
}

}  // namespace orip::cli

#endif  // ORIP_CLI_HPP
