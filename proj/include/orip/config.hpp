#ifndef ORIP_CONFIG_HPP
#define ORIP_CONFIG_HPP

// JSON experiment configuration. Every key is optional; missing keys keep the
// defaults of PipelineConfig. Unknown keys are rejected so that typos surface.
//
// {
//   "planner_mode": "uct" | "puct",
//   "detector_mode": "none" | "copod_batch" | "copod_all_history" | "oracle_labels",
//   "rho": 0.1,
//   "budget_samples": 2000,
//   "pilot_samples": 100,
//   "init_opt_iters": 500,
//   "epoch_opt_iters": 50,
//   "contamination": 0.1,
//   "copod_features": "location_value" | "value",
//   "smoothing_sigma": 3.0,
//   "seed": 0,
//   "search": { "exploration_c": 1.0, "iterations": 500, "rollout_steps": 5 },
//   "motion": { "speed": 2.0, "dt": 1.0, "steering_max": 0.15, "steering_count": 5 },
//   "world":  { "terrain_seed": 7, "rows": 50, "cols": 50, "peaks": 6,
//               "slope_max": 0.02, "hill_min": 2.0, "hill_max": 6.0,
//               "grid_path": "", "sensing_noise_std": 1.0 }
// }

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orip/common.hpp"
#include "orip/pipeline.hpp"

namespace orip::config {

using nlohmann::json;

/// Names the field that failed validation, e.g. "search.iterations".
class ConfigError : public InvalidParameter {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : InvalidParameter(field + ": " + what), field_(field) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.count(it.key()) == 0) throw ConfigError(prefix + it.key(), "unknown key");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& prefix) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError(prefix + key, "expected an integer");
      out = v.get<int>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(prefix + key, "expected a non-negative integer");
      out = v.get<std::uint64_t>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(prefix + key, "expected a number");
      out = v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(prefix + key, "expected true or false");
      out = v.get<bool>();
    } else {
      if (!v.is_string()) throw ConfigError(prefix + key, "expected a string");
      out = v.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(prefix + key, e.what());
  }
}

inline const json& object_at(const json& root, const char* key) {
  static const json empty = json::object();
  if (!root.contains(key)) return empty;
  const auto& v = root.at(key);
  if (!v.is_object()) throw ConfigError(key, "expected an object");
  return v;
}

}  // namespace detail

inline pipeline::PlannerMode parse_planner(const std::string& s) {
  if (s == "uct") return pipeline::PlannerMode::kUct;
  if (s == "puct") return pipeline::PlannerMode::kPuct;
  throw ConfigError("planner_mode", "expected 'uct' or 'puct', got '" + s + "'");
}

inline pipeline::DetectorMode parse_detector(const std::string& s) {
  using pipeline::DetectorMode;
  if (s == "none") return DetectorMode::kNone;
  if (s == "copod_batch") return DetectorMode::kCopodBatch;
  if (s == "copod_all_history") return DetectorMode::kCopodAllHistory;
  if (s == "oracle_labels") return DetectorMode::kOracleLabels;
  throw ConfigError("detector_mode",
                    "expected one of none, copod_batch, copod_all_history, oracle_labels; got '" + s + "'");
}

/// Parses and validates. Errors are ConfigError with the offending field.
inline pipeline::PipelineConfig from_json(const json& root) {
  using detail::read;
  if (!root.is_object()) throw ConfigError("<root>", "expected a JSON object");
  detail::reject_unknown(root,
                         {"planner_mode", "detector_mode", "rho", "budget_samples", "pilot_samples", "init_opt_iters",
                          "epoch_opt_iters", "contamination", "copod_features", "smoothing_sigma", "seed", "search",
                          "motion", "world"},
                         "");
  pipeline::PipelineConfig c;
  std::string planner = pipeline::to_string(c.planner_mode);
  std::string detector = pipeline::to_string(c.detector_mode);
  std::string features = c.copod_location_features ? "location_value" : "value";
  read(root, "planner_mode", planner, "");
  read(root, "detector_mode", detector, "");
  c.planner_mode = parse_planner(planner);
  c.detector_mode = parse_detector(detector);
  read(root, "rho", c.rho, "");
  read(root, "budget_samples", c.budget_samples, "");
  read(root, "pilot_samples", c.pilot_samples, "");
  read(root, "init_opt_iters", c.init_opt_iters, "");
  read(root, "epoch_opt_iters", c.epoch_opt_iters, "");
  read(root, "contamination", c.contamination, "");
  read(root, "copod_features", features, "");
  if (features != "location_value" && features != "value")
    throw ConfigError("copod_features", "expected 'location_value' or 'value', got '" + features + "'");
  c.copod_location_features = features == "location_value";
  read(root, "smoothing_sigma", c.smoothing_sigma, "");
  read(root, "seed", c.seed, "");

  const auto& search = detail::object_at(root, "search");
  detail::reject_unknown(search, {"exploration_c", "iterations", "rollout_steps"}, "search.");
  read(search, "exploration_c", c.search.exploration_c, "search.");
  read(search, "iterations", c.search.iterations, "search.");
  read(search, "rollout_steps", c.search.rollout_steps, "search.");
  c.search.objective_count = c.objective_count();

  const auto& motion = detail::object_at(root, "motion");
  detail::reject_unknown(motion, {"speed", "dt", "steering_max", "steering_count"}, "motion.");
  double steering_max = c.motion.steering_set.back();
  int steering_count = static_cast<int>(c.motion.steering_set.size());
  read(motion, "speed", c.motion.speed, "motion.");
  read(motion, "dt", c.motion.dt, "motion.");
  read(motion, "steering_max", steering_max, "motion.");
  read(motion, "steering_count", steering_count, "motion.");
  if (!(steering_max >= 0.0)) throw ConfigError("motion.steering_max", "must be non-negative");
  try {
    c.motion.steering_set = world::MotionConfig::symmetric_steering(steering_max, steering_count);
  } catch (const InvalidParameter& e) {
    throw ConfigError("motion.steering_count", e.what());
  }

  const auto& w = detail::object_at(root, "world");
  detail::reject_unknown(w, {"terrain_seed", "rows", "cols", "peaks", "slope_max", "hill_min", "hill_max", "grid_path",
                          "sensing_noise_std"}, "world.");
  int rows = static_cast<int>(c.world.terrain.rows), cols = static_cast<int>(c.world.terrain.cols);
  read(w, "terrain_seed", c.world.terrain.seed, "world.");
  read(w, "rows", rows, "world.");
  read(w, "cols", cols, "world.");
  read(w, "peaks", c.world.terrain.peak_count, "world.");
  read(w, "slope_max", c.world.terrain.slope_max, "world.");
  read(w, "hill_min", c.world.terrain.hill_min, "world.");
  read(w, "hill_max", c.world.terrain.hill_max, "world.");
  read(w, "grid_path", c.world.grid_path, "world.");
  read(w, "sensing_noise_std", c.world.sensing_noise_std, "world.");
  if (rows < 2) throw ConfigError("world.rows", "must be at least 2");
  if (cols < 2) throw ConfigError("world.cols", "must be at least 2");
  if (c.world.terrain.peak_count < 1) throw ConfigError("world.peaks", "must be at least 1");
  if (!(c.world.terrain.slope_max >= 0.0)) throw ConfigError("world.slope_max", "must be non-negative");
  if (!(c.world.terrain.hill_min >= 0.0)) throw ConfigError("world.hill_min", "must be non-negative");
  if (!(c.world.terrain.hill_max >= c.world.terrain.hill_min))
    throw ConfigError("world.hill_max", "must be at least hill_min");
  c.world.terrain.rows = rows;
  c.world.terrain.cols = cols;

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidParameter& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "<config>" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return c;
}

inline json to_json(const pipeline::PipelineConfig& c) {
  json j;
  j["planner_mode"] = pipeline::to_string(c.planner_mode);
  j["detector_mode"] = pipeline::to_string(c.detector_mode);
  j["rho"] = c.rho;
  j["budget_samples"] = c.budget_samples;
  j["pilot_samples"] = c.pilot_samples;
  j["init_opt_iters"] = c.init_opt_iters;
  j["epoch_opt_iters"] = c.epoch_opt_iters;
  j["contamination"] = c.contamination;
  j["copod_features"] = c.copod_location_features ? "location_value" : "value";
  j["smoothing_sigma"] = c.smoothing_sigma;
  j["seed"] = c.seed;
  j["search"] = {{"exploration_c", c.search.exploration_c},
                 {"iterations", c.search.iterations},
                 {"rollout_steps", c.search.rollout_steps}};
  j["motion"] = {{"speed", c.motion.speed},
                 {"dt", c.motion.dt},
                 {"steering_max", c.motion.steering_set.back()},
                 {"steering_count", static_cast<int>(c.motion.steering_set.size())}};
  j["world"] = {{"terrain_seed", c.world.terrain.seed},
                {"rows", static_cast<int>(c.world.terrain.rows)},
                {"cols", static_cast<int>(c.world.terrain.cols)},
                {"peaks", c.world.terrain.peak_count},
                {"slope_max", c.world.terrain.slope_max},
                {"hill_min", c.world.terrain.hill_min},
                {"hill_max", c.world.terrain.hill_max},
                {"grid_path", c.world.grid_path},
                {"sensing_noise_std", c.world.sensing_noise_std}};
  return j;
}

/// Applies "a.b.c=value" to the document. The value is read as JSON when it
/// parses (numbers, booleans, quoted strings) and as a bare string otherwise.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "override must look like key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty key segment");
    if (!node->is_object()) throw ConfigError(path, "cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("--config", "'" + path + "' is not valid JSON");
  return j;
}

inline pipeline::PipelineConfig load(const std::string& path, const std::vector<std::string>& overrides = {}) {
  json j = path.empty() ? json::object() : read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j);
}

}  // namespace orip::config

#endif  // ORIP_CONFIG_HPP
