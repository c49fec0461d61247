#include <gtest/gtest.h>

#include <functional>

#include "oracles.hpp"
#include "orip/pareto_mcts.hpp"

using namespace orip;
using namespace orip::mcts;

namespace {

world::GridGeometry square_grid(int n) {
  world::GridGeometry g;
  g.rows = n;
  g.cols = n;
  g.extent = {0.0, static_cast<double>(n), 0.0, static_cast<double>(n)};
  return g;
}

SearchContext make_context(int n, int layers, std::uint64_t seed) {
  SearchContext ctx;
  ctx.workspace.geometry = square_grid(n);
  ctx.rewards.geometry = ctx.workspace.geometry;
  Rng rng = make_stream(seed, "rewards");
  for (int k = 0; k < layers; ++k) {
    Matrix m(n, n);
    for (int i = 0; i < n * n; ++i) m.data()[i] = uniform(rng);
    ctx.rewards.layers.push_back(m);
  }
  return ctx;
}

SearchNode node_with(double mean, int visits) {
  SearchNode n;
  n.visit_count = visits;
  n.reward_sum = Vector::Constant(1, mean * visits);
  return n;
}

void check_conservation(const SearchTree& tree) {
  for (const auto& n : tree.nodes) {
    int sum = 0;
    for (const int c : n.children) sum += tree[c].visit_count;
    EXPECT_EQ(n.visit_count, sum + n.simulations_started);
  }
}

}  // namespace

TEST(Ucb, DirectSubstitution) {
  const auto n = node_with(0.5, 4);
  // N_p = 7: 0.5 + sqrt(2 ln 7 / 4)
  EXPECT_NEAR(ucb_value(n, 7, 1.0), 0.5 + std::sqrt(std::log(7.0) / 2.0), 1e-15);
  EXPECT_NEAR(ucb_value(n, 7, 2.0), 0.5 + 2.0 * std::sqrt(std::log(7.0) / 2.0), 1e-15);
  // A single parent visit gives no exploration bonus.
  EXPECT_EQ(ucb_value(n, 1, 1.0), 0.5);
}

TEST(Ucb, LessVisitedWins) {
  const auto a = node_with(0.3, 1), b = node_with(0.3, 100);
  EXPECT_GT(ucb_value(a, 200, 1.0), ucb_value(b, 200, 1.0));
}

TEST(Pucb, DirectSubstitution) {
  SearchNode n;
  n.visit_count = 2;
  n.reward_sum = Vector(2);
  n.reward_sum << 0.4, 1.6;
  // N_p = 3 so ln N_p is not special.
  const Vector v = pucb_vector(n, 3, 2, 1.0);
  const double bonus = std::sqrt((4.0 * std::log(3.0) + std::log(2.0)) / 4.0);
  EXPECT_NEAR(v[0], 0.2 + bonus, 1e-15);
  EXPECT_NEAR(v[1], 0.8 + bonus, 1e-15);
}

TEST(Pucb, DegeneratesToUcbWithOneObjective) {
  Rng rng = make_stream(1, "test");
  for (int k = 0; k < 1000; ++k) {
    const int np = 1 + static_cast<int>(uniform_index(rng, 100000));
    const int nj = 1 + static_cast<int>(uniform_index(rng, 1000));
    EXPECT_EQ(pucb_exploration(1.0, np, nj, 1), ucb_exploration(1.0, np, nj));
  }
}

TEST(ParetoFront, SmallCases) {
  std::vector<Vector> anti{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(0.5, 0.5)};
  EXPECT_EQ(pareto_front(anti), (std::vector<std::size_t>{0, 1, 2}));
  std::vector<Vector> dom{Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)};
  EXPECT_EQ(pareto_front(dom), (std::vector<std::size_t>{0}));
  std::vector<Vector> dup{Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0)};
  EXPECT_EQ(pareto_front(dup), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(pareto_front({}).empty());
}

TEST(ParetoFront, MatchesOracleAndShiftInvariant) {
  Rng rng = make_stream(2, "test");
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Vector> v;
    const int n = 1 + static_cast<int>(uniform_index(rng, 30));
    for (int i = 0; i < n; ++i) {
      // Coarse values make ties and duplicates common.
      v.push_back(Eigen::Vector2d(std::round(uniform(rng, 0, 5)), std::round(uniform(rng, 0, 5))));
    }
    const auto front = pareto_front(v);
    EXPECT_EQ(front, oracle::pareto_front(v));
    EXPECT_FALSE(front.empty());
    auto shifted = v;
    for (auto& x : shifted) x.array() += 0.25;
    EXPECT_EQ(pareto_front(shifted), front);
  }
}

TEST(Rollout, ZeroStepsAndUniformMap) {
  auto ctx = make_context(20, 1, 1);
  ctx.rewards.layers[0].setConstant(0.3);
  const world::RobotState pose{2.5, 10.5, 0.0};
  EXPECT_EQ(rollout(pose, 0, ctx)[0], 0.0);
  EXPECT_NEAR(rollout(pose, 5, ctx)[0], 1.5, 1e-12);
}

TEST(Rollout, StopsAtBoundary) {
  auto ctx = make_context(20, 1, 1);
  ctx.rewards.layers[0].setConstant(1.0);
  // One step of length 2 stays inside, the second leaves.
  const world::RobotState pose{16.5, 10.5, 0.0};
  EXPECT_EQ(rollout(pose, 5, ctx)[0], 1.0);
}

TEST(Backpropagate, AddsToEveryNodeOnPath) {
  SearchTree tree;
  for (int i = 0; i < 3; ++i) {
    SearchNode n;
    n.reward_sum = Vector::Zero(2);
    tree.nodes.push_back(n);
  }
  backpropagate(tree, {0, 2}, Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(tree[0].visit_count, 1);
  EXPECT_EQ(tree[1].visit_count, 0);
  EXPECT_EQ(tree[2].reward_sum, Eigen::Vector2d(1.0, 2.0));
}

TEST(Expand, RemovesActionAndAddsChild) {
  const auto ctx = make_context(20, 1, 1);
  SearchTree tree;
  add_node(tree, {10, 10, 0}, std::nullopt, -1, ctx);
  ASSERT_EQ(tree[0].untried_actions.size(), 5u);
  Rng rng = make_stream(3, "test");
  const int child = expand(tree, 0, rng, ctx);
  EXPECT_EQ(tree[0].untried_actions.size(), 4u);
  EXPECT_EQ(tree[0].children, std::vector<int>{child});
  const int a = *tree[child].incoming_action;
  EXPECT_EQ(std::count(tree[0].untried_actions.begin(), tree[0].untried_actions.end(), a), 0);
  const auto expected = world::dubins_step(tree[0].pose, ctx.motion.steering_set[a], ctx.motion);
  EXPECT_EQ(tree[child].pose.heading, expected.heading);
}

TEST(Search, VisitConservationBothModes) {
  for (const auto mode : {SelectionMode::kScalar, SelectionMode::kPareto}) {
    const int layers = mode == SelectionMode::kPareto ? 2 : 1;
    const auto ctx = make_context(30, layers, 4);
    SearchConfig cfg;
    cfg.objective_count = layers;
    Rng rng = make_stream(5, "search");
    const auto res = search({15, 15, 1.0}, ctx, cfg, mode, rng);
    EXPECT_EQ(res.tree[0].visit_count, 500);
    check_conservation(res.tree);
    EXPECT_FALSE(res.actions.empty());
  }
}

TEST(Search, TerminalRoot) {
  const auto ctx = make_context(10, 1, 1);
  SearchConfig cfg;
  Rng rng = make_stream(1, "search");
  // Facing the wall from right next to it: every action's endpoint is outside.
  const auto res = search({9.5, 5.0, 0.0}, ctx, cfg, SelectionMode::kScalar, rng);
  EXPECT_TRUE(res.terminal);
  EXPECT_TRUE(res.actions.empty());
}

TEST(Search, DeterministicGivenSeed) {
  const auto ctx = make_context(30, 2, 6);
  SearchConfig cfg;
  cfg.objective_count = 2;
  Rng a = make_stream(9, "search"), b = make_stream(9, "search");
  const auto ra = search({5, 5, 0.5}, ctx, cfg, SelectionMode::kPareto, a);
  const auto rb = search({5, 5, 0.5}, ctx, cfg, SelectionMode::kPareto, b);
  EXPECT_EQ(ra.actions, rb.actions);
  ASSERT_EQ(ra.tree.nodes.size(), rb.tree.nodes.size());
  for (std::size_t i = 0; i < ra.tree.nodes.size(); ++i) {
    EXPECT_EQ(ra.tree.nodes[i].visit_count, rb.tree.nodes[i].visit_count);
    EXPECT_EQ(ra.tree.nodes[i].reward_sum, rb.tree.nodes[i].reward_sum);
  }
}

TEST(Search, BestSequenceFollowsMostVisited) {
  const auto ctx = make_context(30, 1, 7);
  SearchConfig cfg;
  cfg.iterations = 200;
  Rng rng = make_stream(2, "search");
  const auto res = search({15, 15, 0.0}, ctx, cfg, SelectionMode::kScalar, rng);
  int id = 0;
  for (const int a : res.actions) {
    int best = -1;
    for (const int c : res.tree[id].children)
      if (best < 0 || res.tree[c].visit_count > res.tree[best].visit_count) best = c;
    for (const int c : res.tree[id].children)
      if (res.tree[c].visit_count == res.tree[best].visit_count)
        EXPECT_LE(a, *res.tree[c].incoming_action);
    int next = -1;
    for (const int c : res.tree[id].children)
      if (*res.tree[c].incoming_action == a) next = c;
    ASSERT_GE(next, 0);
    EXPECT_EQ(res.tree[next].visit_count, res.tree[best].visit_count);
    id = next;
  }
  EXPECT_TRUE(res.tree[id].children.empty());
}

TEST(SelectChild, ParetoFrontHoldsStdArgmaxWhenOutlierLayerIsZero) {
  auto ctx = make_context(30, 2, 8);
  ctx.rewards.layers[1].setZero();
  SearchConfig cfg;
  cfg.objective_count = 2;
  Rng rng = make_stream(3, "search");
  const auto res = search({15, 15, 0.0}, ctx, cfg, SelectionMode::kPareto, rng);
  int checked = 0;
  for (const auto& n : res.tree.nodes) {
    if (n.children.empty() || !n.fully_expanded()) continue;
    std::vector<Vector> bounds;
    for (const int c : n.children) bounds.push_back(pucb_vector(res.tree[c], n.visit_count, 2, cfg.exploration_c));
    std::size_t best = 0;
    for (std::size_t k = 1; k < bounds.size(); ++k)
      if (bounds[k][0] > bounds[best][0] || (bounds[k][0] == bounds[best][0] && bounds[k][1] > bounds[best][1]))
        best = k;
    const auto front = pareto_front(bounds);
    EXPECT_NE(std::find(front.begin(), front.end(), best), front.end());
    for (const auto k : front) EXPECT_GE(bounds[k][1], bounds[best][1]);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}
