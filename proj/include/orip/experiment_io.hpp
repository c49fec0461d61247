#ifndef ORIP_EXPERIMENT_IO_HPP
#define ORIP_EXPERIMENT_IO_HPP

// Result files for single runs and sweeps.
//
//   results.csv     one row per epoch (epoch 0 is the pilot)
//   trajectory.csv  epoch,x1,x2,heading for every executed pose
//   manifest.json   config echo, build info, timing
//   sweep_summary.csv  per (mode, rho, sample checkpoint): mean/std RMSE

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "orip/common.hpp"
#include "orip/config.hpp"
#include "orip/pareto_mcts.hpp"
#include "orip/pipeline.hpp"

namespace orip::experiment {

using nlohmann::json;

inline constexpr const char* kVersion = "0.3.0";

/// Named baseline: planner plus detector.
struct ModeSpec {
  std::string label;
  pipeline::PlannerMode planner;
  pipeline::DetectorMode detector;
};

inline const std::vector<ModeSpec>& known_modes() {
  using pipeline::DetectorMode;
  using pipeline::PlannerMode;
  static const std::vector<ModeSpec> modes{
      {"uct-none", PlannerMode::kUct, DetectorMode::kNone},
      {"uct-best", PlannerMode::kUct, DetectorMode::kOracleLabels},
      {"uct-copod", PlannerMode::kUct, DetectorMode::kCopodBatch},
      {"puct-copod", PlannerMode::kPuct, DetectorMode::kCopodBatch},
      {"uct-copod-all", PlannerMode::kUct, DetectorMode::kCopodAllHistory},
      {"puct-copod-all", PlannerMode::kPuct, DetectorMode::kCopodAllHistory},
  };
  return modes;
}

inline const ModeSpec& parse_mode(const std::string& label) {
  for (const auto& m : known_modes())
    if (m.label == label) return m;
  throw InvalidParameter("unknown mode '" + label +
                         "' (expected uct-none, uct-best, uct-copod, puct-copod, uct-copod-all, puct-copod-all)");
}

inline std::string mode_label(const pipeline::PipelineConfig& c) {
  for (const auto& m : known_modes())
    if (m.planner == c.planner_mode && m.detector == c.detector_mode) return m.label;
  return std::string(pipeline::to_string(c.planner_mode)) + "-" + pipeline::to_string(c.detector_mode);
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kResultsHeader =
    "seed,mode,rho,epoch,samples,retained,rmse,batch_size,n_filtered,n_false_alarms,n_missed,"
    "cum_filtered,cum_false_alarms,cum_missed";

inline void write_results_csv(std::ostream& out, const pipeline::PipelineConfig& cfg,
                              const std::vector<pipeline::EpochRecord>& records) {
  out << kResultsHeader << "\n";
  const std::string mode = mode_label(cfg);
  for (const auto& r : records) {
    out << cfg.seed << "," << mode << "," << format_number(cfg.rho) << "," << r.epoch << "," << r.samples << ","
        << r.retained << "," << format_number(r.rmse) << "," << r.batch_size << "," << r.n_filtered << ","
        << r.n_false_alarms << "," << r.n_missed << "," << r.cum_filtered << "," << r.cum_false_alarms << ","
        << r.cum_missed << "\n";
  }
}

inline void write_trajectory_csv(std::ostream& out, const std::vector<pipeline::EpochRecord>& records) {
  out << "epoch,x1,x2,heading\n";
  for (const auto& r : records)
    for (const auto& p : r.trajectory)
      out << r.epoch << "," << format_number(p.x1) << "," << format_number(p.x2) << "," << format_number(p.heading)
          << "\n";
}

/// One results.csv row, as read back.
struct ResultRow {
  std::uint64_t seed = 0;
  std::string mode;
  double rho = 0.0;
  int epoch = 0;
  int samples = 0;
  int retained = 0;
  double rmse = 0.0;
  int cum_false_alarms = 0;
};

inline std::vector<ResultRow> read_results_csv(std::istream& in, const std::string& name = "results.csv") {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kResultsHeader) throw ParseError(name + ":1: unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 14) throw ParseError(name + ":" + std::to_string(line_no) + ": expected 14 fields");
    try {
      ResultRow r;
      r.seed = std::stoull(f[0]);
      r.mode = f[1];
      r.rho = std::stod(f[2]);
      r.epoch = std::stoi(f[3]);
      r.samples = std::stoi(f[4]);
      r.retained = std::stoi(f[5]);
      r.rmse = std::stod(f[6]);
      r.cum_false_alarms = std::stoi(f[12]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

inline json tree_to_json(const mcts::SearchTree& tree) {
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    json mean = json::array();
    if (n.visit_count > 0)
      for (Eigen::Index k = 0; k < n.reward_sum.size(); ++k) mean.push_back(n.reward_sum[k] / n.visit_count);
    nodes.push_back({{"id", i},
                     {"parent", n.parent},
                     {"action", n.incoming_action ? json(*n.incoming_action) : json(nullptr)},
                     {"x1", n.pose.x1},
                     {"x2", n.pose.x2},
                     {"heading", n.pose.heading},
                     {"visits", n.visit_count},
                     {"mean_reward", mean}});
  }
  return {{"nodes", nodes}};
}

/// Curve of one run resampled at sample-count checkpoints: the value at s is
/// that of the last epoch with at most s samples.
struct RunCurve {
  std::string mode;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> samples;
  std::vector<double> rmse;
  std::vector<double> false_alarm_rate;  // cum_false_alarms / retained
};

inline RunCurve curve_from_rows(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InvalidParameter("curve: no rows");
  RunCurve c;
  c.mode = rows.front().mode;
  c.rho = rows.front().rho;
  c.seed = rows.front().seed;
  for (const auto& r : rows) {
    c.samples.push_back(r.samples);
    c.rmse.push_back(r.rmse);
    c.false_alarm_rate.push_back(r.retained > 0 ? static_cast<double>(r.cum_false_alarms) / r.retained : 0.0);
  }
  return c;
}

inline std::vector<ResultRow> rows_from_records(const pipeline::PipelineConfig& cfg,
                                                const std::vector<pipeline::EpochRecord>& records) {
  // Round-trip through the CSV text so aggregates match what is on disk.
  std::stringstream ss;
  write_results_csv(ss, cfg, records);
  return read_results_csv(ss);
}

struct SummaryRow {
  std::string mode;
  double rho = 0.0;
  int samples = 0;
  int n_runs = 0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;  // sample standard deviation across runs
  double false_alarm_rate_mean = 0.0;
};

inline std::vector<int> checkpoints(int pilot, int budget, int step) {
  if (step < 1) throw InvalidParameter("checkpoint step must be positive");
  std::vector<int> out;
  for (int s = pilot; s < budget; s += step) out.push_back(s);
  out.push_back(budget);
  return out;
}

inline std::size_t index_at(const RunCurve& c, int samples) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < c.samples.size(); ++k)
    if (c.samples[k] <= samples) idx = k;
  return idx;
}

inline std::vector<SummaryRow> aggregate(const std::vector<RunCurve>& runs, const std::vector<int>& grid) {
  std::map<std::pair<std::string, double>, std::vector<const RunCurve*>> groups;
  for (const auto& r : runs) groups[{r.mode, r.rho}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    for (const int s : grid) {
      SummaryRow row;
      row.mode = key.first;
      row.rho = key.second;
      row.samples = s;
      row.n_runs = static_cast<int>(members.size());
      double sum = 0.0, fa = 0.0;
      std::vector<double> vals;
      for (const auto* m : members) {
        const auto k = index_at(*m, s);
        vals.push_back(m->rmse[k]);
        sum += m->rmse[k];
        fa += m->false_alarm_rate[k];
      }
      row.rmse_mean = sum / static_cast<double>(vals.size());
      row.false_alarm_rate_mean = fa / static_cast<double>(vals.size());
      double ss = 0.0;
      for (double v : vals) ss += (v - row.rmse_mean) * (v - row.rmse_mean);
      row.rmse_std = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
      out.push_back(row);
    }
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "mode,rho,samples,n_runs,rmse_mean,rmse_std,false_alarm_rate_mean\n";
  for (const auto& r : rows)
    out << r.mode << "," << format_number(r.rho) << "," << r.samples << "," << r.n_runs << ","
        << format_number(r.rmse_mean) << "," << format_number(r.rmse_std) << ","
        << format_number(r.false_alarm_rate_mean) << "\n";
}

inline json manifest(const pipeline::PipelineConfig& cfg, const std::vector<pipeline::EpochRecord>& records,
                     double wall_seconds) {
  json j;
  j["config"] = config::to_json(cfg);
  j["mode"] = mode_label(cfg);
  j["version"] = kVersion;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
#ifdef __VERSION__
  j["compiler"] = __VERSION__;
#endif
  j["epochs"] = records.size();
  if (!records.empty()) {
    j["final_samples"] = records.back().samples;
    j["final_rmse"] = records.back().rmse;
  }
  j["timing"] = {{"wall_seconds", wall_seconds}};
  return j;
}

}  // namespace orip::experiment

#endif  // ORIP_EXPERIMENT_IO_HPP
