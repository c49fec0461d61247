#ifndef ORIP_PIPELINE_HPP
#define ORIP_PIPELINE_HPP

// The sampling loop: collect pilot data along a fixed loop, fit the GP, then
// repeatedly plan with MCTS on the predictive-std (and, for PUCT, smoothed
// outlier-count) reward maps, drive the plan, inject spike outliers, filter
// them according to the detector mode and refit.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "orip/common.hpp"
#include "orip/copod.hpp"
#include "orip/gp_regression.hpp"
#include "orip/grid_io.hpp"
#include "orip/pareto_mcts.hpp"
#include "orip/world_sim.hpp"

namespace orip::pipeline {

enum class PlannerMode { kUct, kPuct };
enum class DetectorMode { kNone, kCopodBatch, kCopodAllHistory, kOracleLabels };

inline const char* to_string(PlannerMode m) { return m == PlannerMode::kUct ? "uct" : "puct"; }

inline const char* to_string(DetectorMode m) {
  switch (m) {
    case DetectorMode::kNone: return "none";
    case DetectorMode::kCopodBatch: return "copod_batch";
    case DetectorMode::kCopodAllHistory: return "copod_all_history";
    case DetectorMode::kOracleLabels: return "oracle_labels";
  }
  return "?";
}

struct WorldConfig {
  world::TerrainSpec terrain;
  std::string grid_path;  // when set, replaces the synthetic terrain
  double sensing_noise_std = 1.0;
};

struct PipelineConfig {
  PlannerMode planner_mode = PlannerMode::kUct;
  DetectorMode detector_mode = DetectorMode::kNone;
  double rho = 0.1;
  int budget_samples = 2000;
  int pilot_samples = 100;
  int init_opt_iters = 500;
  int epoch_opt_iters = 50;
  mcts::SearchConfig search;
  world::MotionConfig motion;
  double contamination = 0.1;
  bool copod_location_features = true;  // score [x1, x2, y]; false scores y alone
  double smoothing_sigma = 3.0;
  std::uint64_t seed = 0;
  WorldConfig world;

  /// Throws InvalidParameter naming the offending field.
  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidParameter("rho: must lie in [0, 1]");
    if (pilot_samples < 2) throw InvalidParameter("pilot_samples: must be at least 2");
    if (budget_samples < pilot_samples) throw InvalidParameter("budget_samples: must be >= pilot_samples");
    if (init_opt_iters < 0) throw InvalidParameter("init_opt_iters: must be non-negative");
    if (epoch_opt_iters < 0) throw InvalidParameter("epoch_opt_iters: must be non-negative");
    if (!(contamination > 0.0 && contamination < 0.5))
      throw InvalidParameter("contamination: must lie in (0, 0.5)");
    if (!(smoothing_sigma > 0.0)) throw InvalidParameter("smoothing_sigma: must be positive");
    if (!(world.sensing_noise_std >= 0.0)) throw InvalidParameter("world.sensing_noise_std: must be non-negative");
    if (planner_mode == PlannerMode::kPuct &&
        (detector_mode == DetectorMode::kNone || detector_mode == DetectorMode::kOracleLabels))
      throw InvalidParameter("planner_mode: puct needs a COPOD detector mode (no outlier signal otherwise)");
    try {
      search.validate();
    } catch (const InvalidParameter& e) {
      throw InvalidParameter(std::string("search: ") + e.what());
    }
    try {
      motion.validate();
    } catch (const InvalidParameter& e) {
      throw InvalidParameter(std::string("motion: ") + e.what());
    }
  }

  [[nodiscard]] int objective_count() const { return planner_mode == PlannerMode::kPuct ? 2 : 1; }
};

/// Thrown when a run cannot continue; carries the epoch it failed in.
class RunFailure : public NumericalFailure {
 public:
  RunFailure(int epoch, const std::string& what)
      : NumericalFailure(format(epoch, what)), epoch_(epoch) {}
  [[nodiscard]] int epoch() const { return epoch_; }

 private:
  static std::string format(int epoch, const std::string& what) {
    std::ostringstream msg;
    msg << "epoch " << epoch << ": " << what;
    return msg.str();
  }
  int epoch_;
};

/// Maps the workspace to [−1, 1]² and observations to zero mean, unit variance.
struct Preprocessor {
  std::array<double, 2> input_center{0.0, 0.0};
  std::array<double, 2> input_halfwidth{1.0, 1.0};
  double target_mean = 0.0;
  double target_std = 1.0;

  static Preprocessor fit(const world::Extent& extent, const std::vector<double>& targets) {
    Preprocessor p;
    p.input_center = {0.5 * (extent.x1_min + extent.x1_max), 0.5 * (extent.x2_min + extent.x2_max)};
    p.input_halfwidth = {0.5 * extent.width(), 0.5 * extent.height()};
    if (targets.empty()) throw InvalidParameter("preprocessor: no pilot targets");
    double mean = 0.0;
    for (double y : targets) mean += y;
    mean /= static_cast<double>(targets.size());
    double var = 0.0;
    for (double y : targets) var += (y - mean) * (y - mean);
    var /= static_cast<double>(targets.size());
    p.target_mean = mean;
    p.target_std = var > 0.0 ? std::sqrt(var) : 1.0;
    return p;
  }

  [[nodiscard]] std::array<double, 2> scale_input(double x1, double x2) const {
    return {(x1 - input_center[0]) / input_halfwidth[0], (x2 - input_center[1]) / input_halfwidth[1]};
  }
  [[nodiscard]] std::array<double, 2> unscale_input(double u1, double u2) const {
    return {u1 * input_halfwidth[0] + input_center[0], u2 * input_halfwidth[1] + input_center[1]};
  }
  [[nodiscard]] double standardize(double y) const { return (y - target_mean) / target_std; }
  [[nodiscard]] double unstandardize(double z) const { return z * target_std + target_mean; }

  [[nodiscard]] Matrix scale_inputs(const Matrix& world_xy) const {
    Matrix out(world_xy.rows(), 2);
    for (Eigen::Index i = 0; i < world_xy.rows(); ++i) {
      const auto u = scale_input(world_xy(i, 0), world_xy(i, 1));
      out(i, 0) = u[0];
      out(i, 1) = u[1];
    }
    return out;
  }
};

struct RewardMaps {
  Matrix std_map;      // normalised predictive std
  Matrix outlier_map;  // normalised smoothed outlier counts
};

/// Min-max rescale to [0, 1]; a constant map becomes all zeros.
inline Matrix normalize_unit(const Matrix& m) {
  const double lo = m.minCoeff(), hi = m.maxCoeff();
  if (!(hi > lo)) return Matrix::Zero(m.rows(), m.cols());
  return ((m.array() - lo) / (hi - lo)).matrix();
}

inline Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = v(r * cols + c);
  return out;
}

/// `scaled_queries` are the cell centres in GP input units, row-major over cells.
inline RewardMaps build_reward_maps(const gp::FittedGP& model, const Matrix& scaled_queries, const Matrix& occurrence,
                                    double smoothing_sigma) {
  const auto pred = gp::predict(model, scaled_queries);
  RewardMaps maps;
  maps.std_map = normalize_unit(unflatten(pred.std, occurrence.rows(), occurrence.cols()));
  maps.outlier_map = normalize_unit(world::gaussian_smooth(occurrence, smoothing_sigma));
  return maps;
}

/// Reward layers the planner sees: std only for UCT, std and outliers for PUCT.
inline mcts::RewardField reward_field(const RewardMaps& maps, const world::GridGeometry& g, PlannerMode mode) {
  mcts::RewardField f;
  f.geometry = g;
  f.layers.push_back(maps.std_map);
  if (mode == PlannerMode::kPuct) f.layers.push_back(maps.outlier_map);
  return f;
}

inline double rmse(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw InvalidParameter("rmse: shape mismatch");
  if (pred.size() == 0) throw InvalidParameter("rmse: empty grids");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

struct EpochRecord {
  int epoch = 0;            // 0 is the pilot
  int samples = 0;          // cumulative samples sensed, before filtering
  int retained = 0;         // samples currently in the GP training set
  double rmse = 0.0;        // raw observation units
  int batch_size = 0;
  int n_filtered = 0;       // this batch
  int n_false_alarms = 0;   // this batch: filtered but not injected
  int n_missed = 0;         // this batch: injected but kept
  int cum_filtered = 0;     // over the run (current labels in all-history mode)
  int cum_false_alarms = 0;
  int cum_missed = 0;
  bool perturbed = false;   // planning needed an in-place heading reset
  gp::Hyperparams hyperparams;
  std::vector<world::RobotState> trajectory;
};

struct PilotResult {
  gp::Dataset data;
  Preprocessor preprocessor;
  gp::Hyperparams hyperparams;
};

/// Mutable state of one run. Epochs depend on history, so a run is sequential.
struct PipelineState {
  PipelineConfig config;
  std::shared_ptr<const world::ElevationGrid> truth;
  world::Workspace workspace;
  Matrix scaled_queries;
  Preprocessor preprocessor;

  std::vector<world::Sample> history;  // every sensed sample, after injection
  std::vector<bool> flagged;           // detector (or oracle) verdict per history sample
  Matrix occurrence;                   // detector-flagged counts per cell
  gp::Hyperparams hyperparams;
  gp::FittedGP model;
  world::RobotState pose;
  int sensed = 0;
  int epoch = 0;
  int cum_filtered = 0;
  int cum_false_alarms = 0;
  int cum_missed = 0;
  bool gp_warning = false;

  Rng injection_rng;
  Rng sensing_rng;
  Rng search_rng;

  /// Optional observer for each epoch's search tree (debug dumps).
  std::function<void(int epoch, const mcts::SearchResult&)> on_search;
};

inline std::shared_ptr<const world::ElevationGrid> make_world(const WorldConfig& w) {
  if (!w.grid_path.empty()) return std::make_shared<const world::ElevationGrid>(io::load_grid(w.grid_path));
  return std::make_shared<const world::ElevationGrid>(world::synth_terrain(w.terrain));
}

inline PipelineState make_state(const PipelineConfig& config, std::shared_ptr<const world::ElevationGrid> truth) {
  config.validate();
  PipelineState s;
  s.config = config;
  s.config.search.objective_count = config.objective_count();
  s.truth = std::move(truth);
  s.workspace.geometry = s.truth->geometry;
  s.occurrence = Matrix::Zero(s.truth->geometry.rows, s.truth->geometry.cols);
  s.injection_rng = make_stream(config.seed, "injection");
  s.sensing_rng = make_stream(config.seed, "sensing");
  s.search_rng = make_stream(config.seed, "search");
  return s;
}

/// Training set built from the samples not currently flagged.
inline gp::Dataset retained_dataset(const PipelineState& s) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < s.history.size(); ++i)
    if (!s.flagged[i]) keep.push_back(i);
  gp::Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(keep.size()), 2);
  d.targets.resize(static_cast<Eigen::Index>(keep.size()));
  d.outlier_flag.resize(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto& smp = s.history[keep[k]];
    const auto u = s.preprocessor.scale_input(smp.location[0], smp.location[1]);
    const auto row = static_cast<Eigen::Index>(k);
    d.inputs(row, 0) = u[0];
    d.inputs(row, 1) = u[1];
    d.targets(row) = s.preprocessor.standardize(smp.value);
    d.outlier_flag[k] = smp.is_injected_outlier;
  }
  return d;
}

inline double current_rmse(const PipelineState& s) {
  const auto pred = gp::predict(s.model, s.scaled_queries);
  const auto& g = s.truth->geometry;
  Matrix mean(g.rows, g.cols);
  for (Eigen::Index r = 0; r < g.rows; ++r)
    for (Eigen::Index c = 0; c < g.cols; ++c) mean(r, c) = s.preprocessor.unstandardize(pred.mean(r * g.cols + c));
  return rmse(mean, s.truth->values);
}

inline void refit(PipelineState& s, int iterations) {
  const auto data = retained_dataset(s);
  if (data.size() < 1) throw NumericalFailure("no retained samples to fit");
  const auto opt = gp::optimize_hyperparams(data, s.hyperparams, iterations);
  s.gp_warning = s.gp_warning || opt.warning;
  s.hyperparams = opt.hyperparams;
  s.model = gp::fit(data, s.hyperparams);
}

inline int count_retained(const PipelineState& s) {
  int n = 0;
  for (bool f : s.flagged) n += f ? 0 : 1;
  return n;
}

/// Senses along the pilot loop, freezes the preprocessing statistics and runs
/// the initial hyperparameter optimisation.
inline PilotResult run_pilot(PipelineState& s, EpochRecord* record = nullptr) {
  const auto& cfg = s.config;
  const auto& extent = s.truth->extent();
  const auto path = world::bezier_pilot_path(extent, static_cast<std::size_t>(cfg.pilot_samples));
  std::vector<world::Sample> batch;
  batch.reserve(path.size());
  for (const auto& p : path) {
    world::Sample smp;
    smp.location = {p.x1, p.x2};
    smp.value = world::sense(*s.truth, p.x1, p.x2, cfg.world.sensing_noise_std, s.sensing_rng);
    batch.push_back(smp);
  }
  batch = world::inject_outliers(std::move(batch), cfg.rho, s.injection_rng);
  s.history = batch;
  s.flagged.assign(batch.size(), false);
  if (cfg.detector_mode == DetectorMode::kOracleLabels) {
    for (std::size_t i = 0; i < batch.size(); ++i) s.flagged[i] = batch[i].is_injected_outlier;
  }
  s.sensed = static_cast<int>(batch.size());

  std::vector<double> kept_values;
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (!s.flagged[i]) kept_values.push_back(batch[i].value);
  s.preprocessor = Preprocessor::fit(extent, kept_values);
  s.scaled_queries = s.preprocessor.scale_inputs(s.truth->geometry.cell_centers());

  s.hyperparams = gp::Hyperparams{};
  refit(s, cfg.init_opt_iters);
  s.pose = {path.back().x1, path.back().x2, path.back().heading};

  int pilot_filtered = 0;
  for (bool f : s.flagged) pilot_filtered += f ? 1 : 0;
  s.cum_filtered = pilot_filtered;
  if (record != nullptr) {
    *record = {};
    record->epoch = 0;
    record->samples = s.sensed;
    record->retained = count_retained(s);
    record->rmse = current_rmse(s);
    record->batch_size = static_cast<int>(batch.size());
    record->n_filtered = pilot_filtered;
    record->cum_filtered = pilot_filtered;
    record->hyperparams = s.hyperparams;
    for (const auto& p : path) record->trajectory.push_back({p.x1, p.x2, p.heading});
  }
  return {retained_dataset(s), s.preprocessor, s.hyperparams};
}

inline Matrix copod_features(const std::vector<world::Sample>& samples, bool with_location) {
  Matrix f(static_cast<Eigen::Index>(samples.size()), with_location ? 3 : 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (with_location) {
      f(r, 0) = samples[i].location[0];
      f(r, 1) = samples[i].location[1];
    }
    f(r, f.cols() - 1) = samples[i].value;
  }
  return f;
}

inline mcts::SearchResult plan(PipelineState& s, const world::RobotState& pose) {
  const auto maps = build_reward_maps(s.model, s.scaled_queries, s.occurrence, s.config.smoothing_sigma);
  mcts::SearchContext ctx{s.workspace, s.config.motion, reward_field(maps, s.truth->geometry, s.config.planner_mode)};
  const auto mode =
      s.config.planner_mode == PlannerMode::kPuct ? mcts::SelectionMode::kPareto : mcts::SelectionMode::kScalar;
  return mcts::search(pose, ctx, s.config.search, mode, s.search_rng);
}

/// Heading pointing from `pose` to the workspace centre.
inline double heading_to_center(const world::RobotState& pose, const world::Extent& e) {
  const double c1 = 0.5 * (e.x1_min + e.x1_max), c2 = 0.5 * (e.x2_min + e.x2_max);
  return world::wrap_angle(std::atan2(c2 - pose.x2, c1 - pose.x1));
}

inline bool budget_remaining(const PipelineState& s) { return s.sensed < s.config.budget_samples; }

inline EpochRecord run_epoch(PipelineState& s) {
  const auto& cfg = s.config;
  if (!budget_remaining(s)) throw InvalidParameter("run_epoch: sampling budget exhausted");
  EpochRecord rec;
  rec.epoch = ++s.epoch;

  // (1)-(2) reward maps and search; a dead end gets one heading reset.
  auto result = plan(s, s.pose);
  if (s.on_search) s.on_search(rec.epoch, result);
  if (result.terminal || result.actions.empty()) {
    s.pose.heading = heading_to_center(s.pose, s.truth->extent());
    rec.perturbed = true;
    result = plan(s, s.pose);
    if (s.on_search) s.on_search(rec.epoch, result);
    if (result.terminal || result.actions.empty())
      throw RunFailure(rec.epoch, "no feasible action after heading reset");
  }

  // (3) drive the plan, one sample per step.
  std::vector<world::Sample> batch;
  for (const int a : result.actions) {
    if (!budget_remaining(s)) break;
    s.pose = world::dubins_step(s.pose, cfg.motion.steering_set[static_cast<std::size_t>(a)], cfg.motion);
    world::Sample smp;
    smp.location = {s.pose.x1, s.pose.x2};
    smp.value = world::sense(*s.truth, s.pose.x1, s.pose.x2, cfg.world.sensing_noise_std, s.sensing_rng);
    batch.push_back(smp);
    rec.trajectory.push_back(s.pose);
    ++s.sensed;
  }

  // (4) spike injection.
  batch = world::inject_outliers(std::move(batch), cfg.rho, s.injection_rng);
  const std::size_t first_new = s.history.size();
  s.history.insert(s.history.end(), batch.begin(), batch.end());
  s.flagged.resize(s.history.size(), false);

  // (5)-(6) filtering and outlier-occurrence bookkeeping.
  std::vector<std::array<double, 2>> newly_flagged;
  switch (cfg.detector_mode) {
    case DetectorMode::kNone:
      break;
    case DetectorMode::kOracleLabels:
      for (std::size_t i = first_new; i < s.history.size(); ++i) s.flagged[i] = s.history[i].is_injected_outlier;
      break;
    case DetectorMode::kCopodBatch: {
      const auto model = copod::fit_copod(copod_features(s.history, cfg.copod_location_features), cfg.contamination);
      const auto flags = copod::detect(model, copod_features(batch, cfg.copod_location_features));
      for (std::size_t k = 0; k < flags.size(); ++k) s.flagged[first_new + k] = flags[k];
      break;
    }
    case DetectorMode::kCopodAllHistory: {
      const auto features = copod_features(s.history, cfg.copod_location_features);
      const auto model = copod::fit_copod(features, cfg.contamination);
      const auto flags = copod::detect(model, features);
      for (std::size_t i = 0; i < flags.size(); ++i) s.flagged[i] = flags[i];
      break;
    }
  }
  for (std::size_t i = first_new; i < s.history.size(); ++i) {
    const bool f = s.flagged[i];
    const bool injected = s.history[i].is_injected_outlier;
    rec.n_filtered += f ? 1 : 0;
    rec.n_false_alarms += (f && !injected) ? 1 : 0;
    rec.n_missed += (!f && injected) ? 1 : 0;
    if (f) newly_flagged.push_back(s.history[i].location);
  }
  if (cfg.detector_mode == DetectorMode::kCopodAllHistory) {
    std::vector<std::array<double, 2>> all_flagged;
    s.cum_filtered = s.cum_false_alarms = s.cum_missed = 0;
    for (std::size_t i = 0; i < s.history.size(); ++i) {
      const bool f = s.flagged[i];
      const bool injected = s.history[i].is_injected_outlier;
      if (f) all_flagged.push_back(s.history[i].location);
      s.cum_filtered += f ? 1 : 0;
      s.cum_false_alarms += (f && !injected) ? 1 : 0;
      s.cum_missed += (!f && injected) ? 1 : 0;
    }
    s.occurrence = world::outlier_occurrence_grid(all_flagged, s.truth->geometry);
  } else {
    s.occurrence += world::outlier_occurrence_grid(newly_flagged, s.truth->geometry);
    s.cum_filtered += rec.n_filtered;
    s.cum_false_alarms += rec.n_false_alarms;
    s.cum_missed += rec.n_missed;
  }

  // (7) refit with warm-started hyperparameters.
  try {
    refit(s, cfg.epoch_opt_iters);
  } catch (const NumericalFailure& e) {
    throw RunFailure(rec.epoch, e.what());
  }

  // (8) evaluation.
  rec.samples = s.sensed;
  rec.retained = count_retained(s);
  rec.rmse = current_rmse(s);
  rec.batch_size = static_cast<int>(batch.size());
  rec.cum_filtered = s.cum_filtered;
  rec.cum_false_alarms = s.cum_false_alarms;
  rec.cum_missed = s.cum_missed;
  rec.hyperparams = s.hyperparams;
  return rec;
}

/// Pilot plus epochs until the budget is spent. Records are in epoch order,
/// starting with the pilot (epoch 0).
inline std::vector<EpochRecord> run_experiment(
    const PipelineConfig& config, std::shared_ptr<const world::ElevationGrid> truth = nullptr,
    std::function<void(int, const mcts::SearchResult&)> on_search = {}) {
  config.validate();
  if (!truth) truth = make_world(config.world);
  auto state = make_state(config, std::move(truth));
  state.on_search = std::move(on_search);
  std::vector<EpochRecord> records(1);
  try {
    run_pilot(state, &records.front());
  } catch (const RunFailure&) {
    throw;
  } catch (const NumericalFailure& e) {
    throw RunFailure(0, e.what());
  }
  while (budget_remaining(state)) records.push_back(run_epoch(state));
  return records;
}

}  // namespace orip::pipeline

#endif  // ORIP_PIPELINE_HPP
