#ifndef ORIP_WORLD_SIM_HPP
#define ORIP_WORLD_SIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "orip/common.hpp"

namespace orip::world {

inline constexpr double kTwoPi = 2.0 * M_PI;

struct Cell {
  Eigen::Index row = 0;  // along x2
  Eigen::Index col = 0;  // along x1

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Extent {
  double x1_min = 0.0;
  double x1_max = 1.0;
  double x2_min = 0.0;
  double x2_max = 1.0;

  [[nodiscard]] bool contains(double x1, double x2) const {
    return x1 >= x1_min && x1 <= x1_max && x2 >= x2_min && x2 <= x2_max;
  }
  [[nodiscard]] double width() const { return x1_max - x1_min; }
  [[nodiscard]] double height() const { return x2_max - x2_min; }
};

/// Cell-centred raster geometry. Row index grows with x2, column with x1.
struct GridGeometry {
  Extent extent;
  Eigen::Index rows = 2;
  Eigen::Index cols = 2;

  void validate() const {
    if (rows < 2 || cols < 2) throw InvalidParameter("grid: need at least 2×2 cells");
    if (!(extent.x1_min < extent.x1_max) || !(extent.x2_min < extent.x2_max))
      throw InvalidParameter("grid: extent min must be below max on both axes");
  }

  [[nodiscard]] double cell_width() const { return extent.width() / static_cast<double>(cols); }
  [[nodiscard]] double cell_height() const { return extent.height() / static_cast<double>(rows); }

  [[nodiscard]] std::array<double, 2> cell_center(Eigen::Index row, Eigen::Index col) const {
    return {extent.x1_min + (static_cast<double>(col) + 0.5) * cell_width(),
            extent.x2_min + (static_cast<double>(row) + 0.5) * cell_height()};
  }

  /// Nearest cell; positions on or beyond the border map to the edge cell.
  [[nodiscard]] Cell world_to_cell(double x1, double x2) const {
    const auto c = static_cast<Eigen::Index>(std::floor((x1 - extent.x1_min) / cell_width()));
    const auto r = static_cast<Eigen::Index>(std::floor((x2 - extent.x2_min) / cell_height()));
    return {std::clamp<Eigen::Index>(r, 0, rows - 1), std::clamp<Eigen::Index>(c, 0, cols - 1)};
  }

  /// All cell centres as an (rows·cols) × 2 matrix, row-major over cells.
  [[nodiscard]] Matrix cell_centers() const {
    Matrix out(rows * cols, 2);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const auto p = cell_center(r, c);
        out(r * cols + c, 0) = p[0];
        out(r * cols + c, 1) = p[1];
      }
    }
    return out;
  }
};

struct ElevationGrid {
  GridGeometry geometry;
  Matrix values;  // rows × cols

  ElevationGrid() = default;
  ElevationGrid(GridGeometry g, Matrix v) : geometry(g), values(std::move(v)) {
    geometry.validate();
    if (values.rows() != geometry.rows || values.cols() != geometry.cols)
      throw InvalidParameter("grid: value matrix does not match geometry");
  }

  [[nodiscard]] const Extent& extent() const { return geometry.extent; }

  /// Bilinear interpolation between cell centres, clamped at the border.
  [[nodiscard]] double interpolate(double x1, double x2) const {
    if (!geometry.extent.contains(x1, x2)) throw InvalidParameter("grid: location outside extent");
    const double fc = std::clamp((x1 - geometry.extent.x1_min) / geometry.cell_width() - 0.5, 0.0,
                                 static_cast<double>(geometry.cols - 1));
    const double fr = std::clamp((x2 - geometry.extent.x2_min) / geometry.cell_height() - 0.5, 0.0,
                                 static_cast<double>(geometry.rows - 1));
    const auto c0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(fc), geometry.cols - 2);
    const auto r0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(fr), geometry.rows - 2);
    const double tc = fc - static_cast<double>(c0);
    const double tr = fr - static_cast<double>(r0);
    const double top = (1 - tc) * values(r0, c0) + tc * values(r0, c0 + 1);
    const double bottom = (1 - tc) * values(r0 + 1, c0) + tc * values(r0 + 1, c0 + 1);
    return (1 - tr) * top + tr * bottom;
  }

  /// Values flattened in the same order as GridGeometry::cell_centers().
  [[nodiscard]] Vector flattened() const {
    Vector out(values.size());
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c) out(r * values.cols() + c) = values(r, c);
    return out;
  }
};

struct RobotState {
  double x1 = 0.0;
  double x2 = 0.0;
  double heading = 0.0;  // [0, 2π)
};

inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

struct MotionConfig {
  double speed = 2.0;
  double dt = 1.0;
  std::vector<double> steering_set = {-0.15, -0.075, 0.0, 0.075, 0.15};

  /// Odd count of evenly spaced angles covering [−max_abs, max_abs].
  static std::vector<double> symmetric_steering(double max_abs, int count) {
    if (count < 1 || count % 2 == 0) throw InvalidParameter("motion: steering count must be odd");
    if (count == 1) return {0.0};
    std::vector<double> out(static_cast<std::size_t>(count));
    const int half = count / 2;
    for (int k = -half; k <= half; ++k) out[static_cast<std::size_t>(k + half)] = max_abs * k / half;
    return out;
  }

  void validate() const {
    if (!(speed > 0.0) || !(dt > 0.0)) throw InvalidParameter("motion: speed and dt must be positive");
    const std::size_t n = steering_set.size();
    if (n == 0 || n % 2 == 0) throw InvalidParameter("motion: steering set must have odd size");
    if (!std::is_sorted(steering_set.begin(), steering_set.end()))
      throw InvalidParameter("motion: steering set must be sorted");
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(steering_set[k] + steering_set[n - 1 - k]) > 1e-12)
        throw InvalidParameter("motion: steering set must be symmetric about zero");
    }
  }

  [[nodiscard]] std::size_t zero_action() const { return steering_set.size() / 2; }
};

/// One Euler step of the Dubins car: the position moves along the current
/// heading, then the heading turns by steering·dt.
inline RobotState dubins_step(const RobotState& s, double steering, const MotionConfig& cfg) {
  RobotState next;
  next.x1 = s.x1 + cfg.speed * std::cos(s.heading) * cfg.dt;
  next.x2 = s.x2 + cfg.speed * std::sin(s.heading) * cfg.dt;
  next.heading = wrap_angle(s.heading + steering * cfg.dt);
  return next;
}

/// Where the robot may be. Optional occupancy marks blocked cells.
struct Workspace {
  GridGeometry geometry;
  std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> occupied;

  [[nodiscard]] bool is_free(double x1, double x2) const {
    if (!geometry.extent.contains(x1, x2)) return false;
    if (!occupied) return true;
    const auto cell = geometry.world_to_cell(x1, x2);
    return !(*occupied)(cell.row, cell.col);
  }
};

struct Sample {
  std::array<double, 2> location{};
  double value = 0.0;
  bool is_injected_outlier = false;
};

inline double sense(const ElevationGrid& grid, double x1, double x2, double noise_std, Rng& rng) {
  const double truth = grid.interpolate(x1, x2);
  return truth + gaussian(rng, 0.0, noise_std);
}

/// Replaces round(rho·M) distinct, uniformly chosen samples with spikes of
/// magnitude amp·range (amp ~ U[1, 2], random sign), where range is the
/// spread between the 0.05 and 0.95 quantiles of the batch.
inline std::vector<Sample> inject_outliers(std::vector<Sample> batch, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidParameter("inject: rho must lie in [0, 1]");
  if (batch.empty()) return batch;
  const auto count = static_cast<std::size_t>(std::lround(rho * static_cast<double>(batch.size())));
  if (count == 0) return batch;
  std::vector<double> vals;
  vals.reserve(batch.size());
  for (const auto& s : batch) vals.push_back(s.value);
  const double range = quantile_linear(vals, 0.95) - quantile_linear(vals, 0.05);

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + uniform_index(rng, order.size() - k);
    std::swap(order[k], order[pick]);
    const double amp = uniform(rng, 1.0, 2.0);
    const double sign = uniform(rng) < 0.5 ? -1.0 : 1.0;
    auto& s = batch[order[k]];
    s.value += sign * amp * range;
    s.is_injected_outlier = true;
  }
  return batch;
}

/// Control polygon of the closed pilot loop, as fractions of the extent.
/// Four cubic segments: three sweep the perimeter corners, the last one
/// bends through the interior before closing.
inline const std::array<std::array<std::array<double, 2>, 4>, 4>& pilot_control_points() {
  static const std::array<std::array<std::array<double, 2>, 4>, 4> pts{{
      {{{0.5, 0.1}, {0.8, 0.1}, {0.9, 0.2}, {0.9, 0.5}}},
      {{{0.9, 0.5}, {0.9, 0.8}, {0.8, 0.9}, {0.5, 0.9}}},
      {{{0.5, 0.9}, {0.2, 0.9}, {0.1, 0.8}, {0.1, 0.5}}},
      {{{0.1, 0.5}, {0.5, 0.6}, {0.2, 0.1}, {0.5, 0.1}}},
  }};
  return pts;
}

struct PathPoint {
  double x1;
  double x2;
  double heading;  // tangent direction
};

inline PathPoint bezier_point(const Extent& e, double t) {
  const auto& segs = pilot_control_points();
  const double total = static_cast<double>(segs.size());
  double u = std::fmod(t, total);
  if (u < 0) u += total;
  auto k = static_cast<std::size_t>(u);
  if (k >= segs.size()) k = segs.size() - 1;
  const double s = u - static_cast<double>(k);
  const auto& p = segs[k];
  const double b0 = (1 - s) * (1 - s) * (1 - s), b1 = 3 * s * (1 - s) * (1 - s), b2 = 3 * s * s * (1 - s),
               b3 = s * s * s;
  const double d0 = -3 * (1 - s) * (1 - s), d1 = 3 * (1 - s) * (1 - s) - 6 * s * (1 - s),
               d2 = 6 * s * (1 - s) - 3 * s * s, d3 = 3 * s * s;
  std::array<double, 2> pos{}, tan{};
  for (int a = 0; a < 2; ++a) {
    pos[a] = b0 * p[0][a] + b1 * p[1][a] + b2 * p[2][a] + b3 * p[3][a];
    tan[a] = d0 * p[0][a] + d1 * p[1][a] + d2 * p[2][a] + d3 * p[3][a];
  }
  return {e.x1_min + pos[0] * e.width(), e.x2_min + pos[1] * e.height(),
          wrap_angle(std::atan2(tan[1] * e.height(), tan[0] * e.width()))};
}

/// n points at uniformly spaced parameter values around the closed loop.
inline std::vector<PathPoint> bezier_pilot_path(const Extent& extent, std::size_t n_samples) {
  if (n_samples < 2) throw InvalidParameter("pilot: need at least two samples");
  const double total = static_cast<double>(pilot_control_points().size());
  std::vector<PathPoint> out;
  out.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k)
    out.push_back(bezier_point(extent, total * static_cast<double>(k) / static_cast<double>(n_samples)));
  return out;
}

inline Matrix outlier_occurrence_grid(const std::vector<std::array<double, 2>>& flagged, const GridGeometry& g) {
  Matrix counts = Matrix::Zero(g.rows, g.cols);
  for (const auto& p : flagged) {
    if (!g.extent.contains(p[0], p[1])) throw InvalidParameter("occurrence: location outside extent");
    const auto cell = g.world_to_cell(p[0], p[1]);
    counts(cell.row, cell.col) += 1.0;
  }
  return counts;
}

namespace detail {

/// Half-sample symmetric reflection of an index into [0, n).
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index period = 2 * n;
  Eigen::Index m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace detail

/// Normalised 1-D Gaussian taps for offsets −radius..radius, radius = ceil(3σ).
inline std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("smooth: sigma must be positive");
  const auto radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (auto& w : taps) w /= sum;
  return taps;
}

/// Separable Gaussian blur with reflected borders.
inline Matrix gaussian_smooth(const Matrix& grid, double sigma_cells) {
  const auto taps = gaussian_taps(sigma_cells);
  const auto radius = static_cast<Eigen::Index>(taps.size() / 2);
  const Eigen::Index rows = grid.rows(), cols = grid.cols();
  Matrix tmp = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k)
        acc += taps[static_cast<std::size_t>(k + radius)] * grid(r, detail::reflect_index(c + k, cols));
      tmp(r, c) = acc;
    }
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k)
        acc += taps[static_cast<std::size_t>(k + radius)] * tmp(detail::reflect_index(r + k, rows), c);
      out(r, c) = acc;
    }
  return out;
}

struct TerrainSpec {
  std::uint64_t seed = 7;
  Eigen::Index rows = 50;
  Eigen::Index cols = 50;
  int peak_count = 6;
  double slope_max = 0.02;
  double hill_min = 2.0;
  double hill_max = 6.0;
};

/// Synthetic stand-in for a volcanic elevation raster: a gentle planar
/// trend, `peak_count − 1` low rolling hills and one tall crater (a steep
/// cone with a sunken summit). Extent is [0, cols] × [0, rows] (one unit per cell).
inline ElevationGrid synth_terrain(const TerrainSpec& spec) {
  if (spec.peak_count < 1) throw InvalidParameter("terrain: peak_count must be at least 1");
  if (!(spec.slope_max >= 0.0) || !(spec.hill_min >= 0.0) || !(spec.hill_max >= spec.hill_min))
    throw InvalidParameter("terrain: need slope_max >= 0 and 0 <= hill_min <= hill_max");
  GridGeometry g;
  g.rows = spec.rows;
  g.cols = spec.cols;
  g.extent = {0.0, static_cast<double>(spec.cols), 0.0, static_cast<double>(spec.rows)};
  g.validate();
  Rng rng = make_stream(spec.seed, "terrain");
  const double w = g.extent.width(), h = g.extent.height();

  const double slope1 = uniform(rng, -spec.slope_max, spec.slope_max),
               slope2 = uniform(rng, -spec.slope_max, spec.slope_max);
  struct Bump {
    double c1, c2, s1, s2, height;
  };
  std::vector<Bump> hills;
  for (int k = 1; k < spec.peak_count; ++k) {
    hills.push_back({uniform(rng, 0.0, w), uniform(rng, 0.0, h), uniform(rng, 0.08, 0.22) * w,
                     uniform(rng, 0.08, 0.22) * h, uniform(rng, spec.hill_min, spec.hill_max)});
  }
  const Bump crater{uniform(rng, 0.3, 0.7) * w, uniform(rng, 0.3, 0.7) * h, uniform(rng, 0.07, 0.1) * w,
                    uniform(rng, 0.07, 0.1) * h, uniform(rng, 180.0, 240.0)};
  const double rim_depth = 0.55 * crater.height;

  Matrix v(g.rows, g.cols);
  for (Eigen::Index r = 0; r < g.rows; ++r) {
    for (Eigen::Index c = 0; c < g.cols; ++c) {
      const auto p = g.cell_center(r, c);
      double z = slope1 * p[0] + slope2 * p[1];
      for (const auto& b : hills) {
        const double d1 = (p[0] - b.c1) / b.s1, d2 = (p[1] - b.c2) / b.s2;
        z += b.height * std::exp(-0.5 * (d1 * d1 + d2 * d2));
      }
      const double d1 = (p[0] - crater.c1) / crater.s1, d2 = (p[1] - crater.c2) / crater.s2;
      const double rr = d1 * d1 + d2 * d2;
      z += crater.height * std::exp(-0.5 * rr);
      z -= rim_depth * std::exp(-0.5 * rr / 0.16);
      v(r, c) = z;
    }
  }
  return ElevationGrid(g, std::move(v));
}

}  // namespace orip::world

#endif  // ORIP_WORLD_SIM_HPP
