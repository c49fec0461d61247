#ifndef ORIP_PARETO_MCTS_HPP
#define ORIP_PARETO_MCTS_HPP

// Monte Carlo tree search over Dubins steering sequences with vector rewards.
//
// Scalar mode (UCT) picks the child maximising
//   mean + C·sqrt(2 ln N_p / N_j)
// and Pareto mode (PUCT) adds
//   C·sqrt((4 ln N_p + ln D_r) / (2 N_j))
// to every component of the mean reward vector, then draws uniformly from the
// children whose vectors are not weakly dominated. Expansion picks an untried
// action uniformly, the rollout drives straight ahead, and every node on the
// selection path accumulates the simulated return.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "orip/common.hpp"
#include "orip/world_sim.hpp"

namespace orip::mcts {

enum class SelectionMode { kScalar, kPareto };

struct SearchConfig {
  double exploration_c = 1.0;
  int iterations = 500;
  int rollout_steps = 5;
  int objective_count = 1;  // D_r

  void validate() const {
    if (!(exploration_c > 0.0)) throw InvalidParameter("search: exploration constant must be positive");
    if (iterations < 1) throw InvalidParameter("search: iterations must be at least 1");
    if (rollout_steps < 0) throw InvalidParameter("search: rollout_steps must be non-negative");
    if (objective_count < 1 || objective_count > 2)
      throw InvalidParameter("search: objective_count must be 1 or 2");
  }
};

/// Co-registered reward layers looked up by nearest cell.
struct RewardField {
  world::GridGeometry geometry;
  std::vector<Matrix> layers;

  [[nodiscard]] Eigen::Index dims() const { return static_cast<Eigen::Index>(layers.size()); }

  [[nodiscard]] Vector at(double x1, double x2) const {
    const auto cell = geometry.world_to_cell(x1, x2);
    Vector out(dims());
    for (Eigen::Index k = 0; k < dims(); ++k) out[k] = layers[static_cast<std::size_t>(k)](cell.row, cell.col);
    return out;
  }
};

/// Everything the search needs to know about the world.
struct SearchContext {
  world::Workspace workspace;
  world::MotionConfig motion;
  RewardField rewards;
};

struct SearchNode {
  world::RobotState pose;
  std::optional<int> incoming_action;
  int parent = -1;
  int visit_count = 0;
  Vector reward_sum;
  std::vector<int> children;
  std::vector<int> untried_actions;
  int simulations_started = 0;  // simulations that began at this node

  [[nodiscard]] bool terminal() const { return children.empty() && untried_actions.empty(); }
  [[nodiscard]] bool fully_expanded() const { return untried_actions.empty(); }
  [[nodiscard]] Vector mean_reward() const { return reward_sum / static_cast<double>(visit_count); }
};

struct SearchTree {
  std::vector<SearchNode> nodes;

  SearchNode& operator[](int i) { return nodes[static_cast<std::size_t>(i)]; }
  const SearchNode& operator[](int i) const { return nodes[static_cast<std::size_t>(i)]; }
};

inline double ucb_exploration(double exploration_c, int parent_visits, int visits) {
  return exploration_c * std::sqrt(2.0 * std::log(static_cast<double>(parent_visits)) / static_cast<double>(visits));
}

inline double pucb_exploration(double exploration_c, int parent_visits, int visits, int objective_count) {
  return exploration_c * std::sqrt((4.0 * std::log(static_cast<double>(parent_visits)) +
                                    std::log(static_cast<double>(objective_count))) /
                                   (2.0 * static_cast<double>(visits)));
}

inline double ucb_value(const SearchNode& node, int parent_visits, double exploration_c) {
  return node.reward_sum[0] / static_cast<double>(node.visit_count) +
         ucb_exploration(exploration_c, parent_visits, node.visit_count);
}

inline Vector pucb_vector(const SearchNode& node, int parent_visits, int objective_count, double exploration_c) {
  const double bonus = pucb_exploration(exploration_c, parent_visits, node.visit_count, objective_count);
  return (node.mean_reward().array() + bonus).matrix();
}

/// a ≥ b everywhere and a > b somewhere.
inline bool weakly_dominates(const Vector& a, const Vector& b) {
  bool strictly = false;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return false;
    if (a[k] > b[k]) strictly = true;
  }
  return strictly;
}

/// Indices (ascending) of vectors no other vector weakly dominates.
inline std::vector<std::size_t> pareto_front(const std::vector<Vector>& vectors) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < vectors.size() && !dominated; ++j)
      dominated = j != i && weakly_dominates(vectors[j], vectors[i]);
    if (!dominated) front.push_back(i);
  }
  return front;
}

/// Chooses among the children of a fully expanded node; returns a node id.
inline int select_child(const SearchTree& tree, int node_id, Rng& rng, SelectionMode mode,
                        const SearchConfig& cfg) {
  const auto& node = tree[node_id];
  if (node.children.empty()) throw InvalidParameter("search: select_child on a node without children");
  if (mode == SelectionMode::kScalar) {
    int best = node.children.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (const int c : node.children) {
      const double v = ucb_value(tree[c], node.visit_count, cfg.exploration_c);
      if (v > best_value) {
        best_value = v;
        best = c;
      }
    }
    return best;
  }
  std::vector<Vector> bounds;
  bounds.reserve(node.children.size());
  for (const int c : node.children)
    bounds.push_back(pucb_vector(tree[c], node.visit_count, cfg.objective_count, cfg.exploration_c));
  const auto front = pareto_front(bounds);
  return node.children[front[uniform_index(rng, front.size())]];
}

inline std::vector<int> feasible_actions(const world::RobotState& pose, const SearchContext& ctx) {
  std::vector<int> out;
  for (std::size_t a = 0; a < ctx.motion.steering_set.size(); ++a) {
    const auto next = world::dubins_step(pose, ctx.motion.steering_set[a], ctx.motion);
    if (ctx.workspace.is_free(next.x1, next.x2)) out.push_back(static_cast<int>(a));
  }
  return out;
}

inline int add_node(SearchTree& tree, const world::RobotState& pose, std::optional<int> action, int parent,
                    const SearchContext& ctx) {
  SearchNode n;
  n.pose = pose;
  n.incoming_action = action;
  n.parent = parent;
  n.reward_sum = Vector::Zero(ctx.rewards.dims());
  n.untried_actions = feasible_actions(pose, ctx);
  tree.nodes.push_back(std::move(n));
  return static_cast<int>(tree.nodes.size()) - 1;
}

/// Removes one uniformly drawn untried action and appends the resulting child.
inline int expand(SearchTree& tree, int node_id, Rng& rng, const SearchContext& ctx) {
  auto& untried = tree[node_id].untried_actions;
  if (untried.empty()) throw InvalidParameter("search: expand on a fully expanded node");
  const std::size_t k = uniform_index(rng, untried.size());
  const int action = untried[k];
  untried.erase(untried.begin() + static_cast<std::ptrdiff_t>(k));
  const auto pose = world::dubins_step(tree[node_id].pose, ctx.motion.steering_set[static_cast<std::size_t>(action)],
                                       ctx.motion);
  const int child = add_node(tree, pose, action, node_id, ctx);
  tree[node_id].children.push_back(child);
  return child;
}

/// Drives straight for `steps` steps, summing the reward of each visited cell.
/// Leaving the workspace contributes nothing and ends the rollout.
inline Vector rollout(const world::RobotState& pose, int steps, const SearchContext& ctx) {
  Vector total = Vector::Zero(ctx.rewards.dims());
  world::RobotState s = pose;
  for (int k = 0; k < steps; ++k) {
    s = world::dubins_step(s, 0.0, ctx.motion);
    if (!ctx.workspace.is_free(s.x1, s.x2)) break;
    total += ctx.rewards.at(s.x1, s.x2);
  }
  return total;
}

/// Return credited to a simulation that starts at `node_id`: the reward of the
/// node's own cell plus the straight-ahead rollout from it.
inline Vector simulation_return(const SearchTree& tree, int node_id, const SearchContext& ctx,
                                const SearchConfig& cfg) {
  const auto& pose = tree[node_id].pose;
  return ctx.rewards.at(pose.x1, pose.x2) + rollout(pose, cfg.rollout_steps, ctx);
}

inline void backpropagate(SearchTree& tree, const std::vector<int>& path, const Vector& reward) {
  for (const int id : path) {
    tree[id].reward_sum += reward;
    tree[id].visit_count += 1;
  }
}

struct SearchResult {
  std::vector<int> actions;  // steering indices, root first
  bool terminal = false;     // the root had no feasible action
  SearchTree tree;
};

/// Follows the most visited child from the root (ties to the lowest action).
inline std::vector<int> best_action_sequence(const SearchTree& tree) {
  std::vector<int> actions;
  int id = 0;
  while (!tree[id].children.empty()) {
    int best = -1;
    for (const int c : tree[id].children) {
      if (best < 0 || tree[c].visit_count > tree[best].visit_count ||
          (tree[c].visit_count == tree[best].visit_count && *tree[c].incoming_action < *tree[best].incoming_action))
        best = c;
    }
    actions.push_back(*tree[best].incoming_action);
    id = best;
  }
  return actions;
}

inline SearchResult search(const world::RobotState& root_pose, const SearchContext& ctx, const SearchConfig& cfg,
                           SelectionMode mode, Rng& rng) {
  cfg.validate();
  ctx.motion.validate();
  if (ctx.rewards.dims() != cfg.objective_count)
    throw InvalidParameter("search: reward layer count does not match objective_count");
  Rng selection_rng(rng());
  Rng expansion_rng(rng());

  SearchResult result;
  auto& tree = result.tree;
  tree.nodes.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  add_node(tree, root_pose, std::nullopt, -1, ctx);
  if (tree[0].terminal()) {
    result.terminal = true;
    return result;
  }

  std::vector<int> path;
  for (int it = 0; it < cfg.iterations; ++it) {
    path.assign(1, 0);
    int id = 0;
    while (tree[id].fully_expanded() && !tree[id].children.empty()) {
      id = select_child(tree, id, selection_rng, mode, cfg);
      path.push_back(id);
    }
    if (!tree[id].fully_expanded()) {
      id = expand(tree, id, expansion_rng, ctx);
      path.push_back(id);
    }
    tree[id].simulations_started += 1;
    backpropagate(tree, path, simulation_return(tree, id, ctx, cfg));
  }
  result.actions = best_action_sequence(tree);
  return result;
}

}  // namespace orip::mcts

#endif  // ORIP_PARETO_MCTS_HPP
