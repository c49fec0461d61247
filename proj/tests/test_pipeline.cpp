#include <gtest/gtest.h>

#include "orip/pipeline.hpp"

using namespace orip;
using namespace orip::pipeline;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.world.terrain.rows = 20;
  c.world.terrain.cols = 20;
  c.budget_samples = 80;
  c.pilot_samples = 20;
  c.init_opt_iters = 50;
  c.epoch_opt_iters = 5;
  c.search.iterations = 100;
  c.rho = 0.2;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Rmse, HandSummation) {
  Matrix truth = Matrix::Zero(3, 3);
  Matrix pred(3, 3);
  pred << 1, 2, 3, 0, 0, 0, -1, -2, -3;
  EXPECT_NEAR(rmse(pred, truth), std::sqrt(28.0 / 9.0), 1e-12);
  EXPECT_NEAR(rmse(pred, truth), 1.7638342073763937, 1e-12);
  EXPECT_EQ(rmse(truth, truth), 0.0);
  EXPECT_NEAR(rmse(truth.array() + 2.5, truth), 2.5, 1e-15);
  EXPECT_THROW(rmse(Matrix::Zero(2, 3), truth), InvalidParameter);
}

TEST(Preprocessor, RoundTrip) {
  const auto p = Preprocessor::fit({-10, 30, 5, 9}, {1.0, 4.0, 9.0, -2.0});
  Rng rng = make_stream(1, "test");
  for (int k = 0; k < 100; ++k) {
    const double y = gaussian(rng, 0, 1e3);
    EXPECT_NEAR(p.unstandardize(p.standardize(y)), y, 1e-12 * std::max(1.0, std::abs(y)));
    const double x1 = uniform(rng, -10, 30), x2 = uniform(rng, 5, 9);
    const auto u = p.scale_input(x1, x2);
    EXPECT_GE(u[0], -1.0);
    EXPECT_LE(u[1], 1.0);
    const auto back = p.unscale_input(u[0], u[1]);
    EXPECT_NEAR(back[0], x1, 1e-12);
    EXPECT_NEAR(back[1], x2, 1e-12);
  }
  const auto corner = p.scale_input(-10, 9);
  EXPECT_DOUBLE_EQ(corner[0], -1.0);
  EXPECT_DOUBLE_EQ(corner[1], 1.0);
  EXPECT_NEAR(p.target_mean, 3.0, 1e-15);
  EXPECT_NEAR(p.target_std, std::sqrt(16.5), 1e-12);
}

TEST(RewardMaps, NormalizedAndLayeredByMode) {
  Matrix m(2, 2);
  m << 1, 3, 5, 9;
  const Matrix n = normalize_unit(m);
  EXPECT_EQ(n(0, 0), 0.0);
  EXPECT_EQ(n(1, 1), 1.0);
  EXPECT_EQ(n(0, 1), 0.25);
  EXPECT_EQ(normalize_unit(Matrix::Constant(3, 3, 4.0)), Matrix::Zero(3, 3));

  RewardMaps maps{n, Matrix::Zero(2, 2)};
  world::GridGeometry g;
  g.extent = {0, 2, 0, 2};
  EXPECT_EQ(reward_field(maps, g, PlannerMode::kUct).dims(), 1);
  EXPECT_EQ(reward_field(maps, g, PlannerMode::kPuct).dims(), 2);
}

TEST(Config, RejectsPuctWithoutDetector) {
  auto c = small_config();
  c.planner_mode = PlannerMode::kPuct;
  c.detector_mode = DetectorMode::kNone;
  EXPECT_THROW(c.validate(), InvalidParameter);
  c.detector_mode = DetectorMode::kOracleLabels;
  EXPECT_THROW(c.validate(), InvalidParameter);
  c.detector_mode = DetectorMode::kCopodBatch;
  EXPECT_NO_THROW(c.validate());
  c.rho = 1.5;
  EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Pilot, FreezesStatisticsFromPilotData) {
  auto c = small_config();
  c.rho = 0.0;
  auto s = make_state(c, make_world(c.world));
  EpochRecord rec;
  const auto pilot = run_pilot(s, &rec);
  EXPECT_EQ(rec.epoch, 0);
  EXPECT_EQ(rec.samples, 20);
  EXPECT_EQ(pilot.data.size(), 20);
  EXPECT_NEAR(pilot.data.targets.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(pilot.data.targets.squaredNorm() / 20.0), 1.0, 1e-12);
  EXPECT_LE(pilot.data.inputs.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GT(rec.rmse, 0.0);
}

TEST(Run, OracleFilterRemovesExactlyInjected) {
  auto c = small_config();
  c.detector_mode = DetectorMode::kOracleLabels;
  auto s = make_state(c, make_world(c.world));
  run_pilot(s);
  while (budget_remaining(s)) run_epoch(s);
  int injected = 0;
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    EXPECT_EQ(s.flagged[i], s.history[i].is_injected_outlier);
    injected += s.history[i].is_injected_outlier;
  }
  EXPECT_GT(injected, 0);
  const auto data = retained_dataset(s);
  for (bool f : data.outlier_flag) EXPECT_FALSE(f);
  EXPECT_EQ(s.cum_false_alarms, 0);
  EXPECT_EQ(s.cum_missed, 0);
}

TEST(Run, BudgetAccountingAndMonotoneCounts) {
  auto c = small_config();
  c.detector_mode = DetectorMode::kCopodBatch;
  c.planner_mode = PlannerMode::kPuct;
  const auto records = run_experiment(c);
  ASSERT_GE(records.size(), 2u);
  for (std::size_t k = 1; k < records.size(); ++k) {
    EXPECT_GT(records[k].samples, records[k - 1].samples);
    EXPECT_EQ(records[k].samples - records[k - 1].samples, records[k].batch_size);
    EXPECT_EQ(records[k].epoch, static_cast<int>(k));
    EXPECT_GE(records[k].cum_false_alarms, records[k - 1].cum_false_alarms);
    EXPECT_LE(records[k].n_false_alarms, records[k].n_filtered);
    EXPECT_EQ(static_cast<int>(records[k].trajectory.size()), records[k].batch_size);
  }
  // Execution stops as soon as the budget is spent.
  EXPECT_EQ(records.back().samples, c.budget_samples);
  EXPECT_EQ(records.back().retained, records.back().samples - records.back().cum_filtered);
}

TEST(Run, ModeReductionWithoutOutliers) {
  auto c = small_config();
  c.rho = 0.0;
  c.detector_mode = DetectorMode::kNone;
  const auto a = run_experiment(c);
  c.detector_mode = DetectorMode::kOracleLabels;
  const auto b = run_experiment(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].samples, b[k].samples);
    EXPECT_EQ(a[k].rmse, b[k].rmse);
    ASSERT_EQ(a[k].trajectory.size(), b[k].trajectory.size());
    for (std::size_t i = 0; i < a[k].trajectory.size(); ++i) {
      EXPECT_EQ(a[k].trajectory[i].x1, b[k].trajectory[i].x1);
      EXPECT_EQ(a[k].trajectory[i].x2, b[k].trajectory[i].x2);
    }
  }
}

TEST(Run, DeterministicPerSeed) {
  auto c = small_config();
  c.detector_mode = DetectorMode::kCopodAllHistory;
  const auto a = run_experiment(c), b = run_experiment(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].rmse, b[k].rmse);
    EXPECT_EQ(a[k].cum_filtered, b[k].cum_filtered);
  }
  c.seed = 4;
  const auto d = run_experiment(c);
  EXPECT_NE(a.back().rmse, d.back().rmse);
}

TEST(Run, AllHistoryRelabelsAndRebuildsOccurrence) {
  auto c = small_config();
  c.detector_mode = DetectorMode::kCopodAllHistory;
  auto s = make_state(c, make_world(c.world));
  run_pilot(s);
  while (budget_remaining(s)) run_epoch(s);
  int flagged = 0;
  for (bool f : s.flagged) flagged += f;
  EXPECT_EQ(flagged, s.cum_filtered);
  EXPECT_EQ(s.occurrence.sum(), static_cast<double>(flagged));
}

TEST(Run, HeadingResetPointsAtCentre) {
  const world::Extent e{0, 10, 0, 10};
  EXPECT_NEAR(heading_to_center({9.0, 5.0, 0.0}, e), M_PI, 1e-12);
  EXPECT_NEAR(heading_to_center({5.0, 1.0, 0.0}, e), M_PI / 2, 1e-12);
}

TEST(Run, SurvivesWallStart) {
  // After the pilot, park the robot facing a wall; the epoch resets the heading.
  auto c = small_config();
  auto s = make_state(c, make_world(c.world));
  run_pilot(s);
  s.pose = {19.5, 10.0, 0.0};
  const auto rec = run_epoch(s);
  EXPECT_TRUE(rec.perturbed);
  EXPECT_GT(rec.batch_size, 0);
}
