// Best-first kinodynamic search over a control-discretized tree with one
// label per state-space cell, in the spirit of generalized label correcting.

#ifndef HEURSOS_PLANNER_HPP
#define HEURSOS_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "heursos/semialg.hpp"
#include "heursos/verify.hpp"

namespace heursos {

using HeuristicFn = std::function<double(std::span<const double>)>;

struct PlannerConfig {
  std::vector<double> start;
  /// Control samples tried from every node.
  std::vector<std::vector<double>> controls;
  /// Duration of one edge and the RK4 steps it is split into.
  double step = 0.25;
  int substeps = 4;
  /// Cell widths of the domination partition, one per state axis.
  std::vector<double> cell_size;
  std::size_t max_iterations = 1000000;
  /// Goal region; when absent the first goal point of the problem is
  /// inflated to a cube of this half-width.
  std::optional<Box> goal_region;
  double goal_half_width = 0.1;
  bool record_trace = false;
};

struct SearchNode {
  std::vector<double> state;
  double cost = 0.0;
  double heuristic = 0.0;
  /// Index of the parent node, or npos for the root.
  std::size_t parent = npos;
  std::vector<double> control;
  double duration = 0.0;
  std::uint64_t cell = 0;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  double priority() const { return cost + heuristic; }
};

enum class SearchStatus { Solved, Exhausted, CapReached };

inline const char* to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::Solved: return "Solved";
    case SearchStatus::Exhausted: return "Exhausted";
    case SearchStatus::CapReached: return "CapReached";
  }
  return "?";
}

struct SearchResult {
  SearchStatus status = SearchStatus::Exhausted;
  /// states.size() == controls.size() + 1 on success.
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> controls;
  std::vector<double> durations;
  std::vector<double> edge_costs;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t generated = 0;
  /// Expanded states in expansion order (when requested).
  std::vector<std::vector<double>> trace;
};

namespace planner_detail {

inline void check_config(const BlackBoxProblem& p, const PlannerConfig& cfg) {
  if (cfg.start.size() != p.n) throw std::invalid_argument("plan: start dimension mismatch");
  if (cfg.cell_size.size() != p.n) throw std::invalid_argument("plan: cell_size dimension mismatch");
  for (double c : cfg.cell_size) {
    if (!(c > 0.0)) throw std::invalid_argument("plan: cell sizes must be positive");
  }
  if (!(cfg.step > 0.0) || cfg.substeps < 1) throw std::invalid_argument("plan: step and substeps must be positive");
  if (cfg.max_iterations < 1) throw std::invalid_argument("plan: iteration cap must be at least 1");
  if (cfg.controls.empty()) throw std::invalid_argument("plan: empty control set");
  for (const auto& u : cfg.controls) {
    if (u.size() != p.m) throw std::invalid_argument("plan: control dimension mismatch");
    if (!p.in_omega(u)) throw std::invalid_argument("plan: control sample outside Omega");
  }
}

inline Box goal_region(const BlackBoxProblem& p, const PlannerConfig& cfg) {
  if (cfg.goal_region) {
    if (cfg.goal_region->dim() != p.n) throw std::invalid_argument("plan: goal region dimension mismatch");
    return *cfg.goal_region;
  }
  if (p.goal_points.empty()) throw std::invalid_argument("plan: no goal region and no goal point to inflate");
  Box b{p.goal_points.front(), p.goal_points.front()};
  for (std::size_t i = 0; i < p.n; ++i) {
    b.lo[i] -= cfg.goal_half_width;
    b.hi[i] += cfg.goal_half_width;
  }
  return b;
}

// One RK4 step of (x, cost) under constant control.
inline void rk4(const BlackBoxProblem& p, std::vector<double>& x, double& cost, std::span<const double> u, double h) {
  const std::size_t n = x.size();
  auto deriv = [&](const std::vector<double>& z, std::vector<double>& dz) {
    dz = p.f(z, u);
    if (dz.size() != n) throw std::runtime_error("plan: dynamics returned wrong dimension");
    dz.push_back(p.g(z, u));
    for (double v : dz) {
      if (!std::isfinite(v)) throw std::runtime_error("plan: non-finite dynamics");
    }
  };
  std::vector<double> k1, k2, k3, k4, tmp(n);
  deriv(x, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  deriv(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  deriv(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  deriv(tmp, k4);
  for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  cost += h / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
}

class CellIndex {
 public:
  CellIndex(const Box& bounds, std::vector<double> size) : lo_(bounds.lo), size_(std::move(size)) {
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      const double c = std::ceil((bounds.hi[i] - bounds.lo[i]) / size_[i]) + 1.0;
      if (c > 2e6) throw std::invalid_argument("plan: too many cells per axis");
      counts_.push_back(static_cast<std::uint64_t>(c));
    }
  }
  std::uint64_t operator()(std::span<const double> z) const {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      const double t = std::floor((z[i] - lo_[i]) / size_[i]);
      const std::uint64_t k = static_cast<std::uint64_t>(std::clamp(t, 0.0, static_cast<double>(counts_[i] - 1)));
      key = key * counts_[i] + k;
    }
    return key;
  }

 private:
  std::vector<double> lo_;
  std::vector<double> size_;
  std::vector<std::uint64_t> counts_;
};

struct QueueEntry {
  double priority;
  double cost;
  std::uint64_t order;
  std::size_t node;
  bool operator>(const QueueEntry& o) const {
    if (priority != o.priority) return priority > o.priority;
    if (cost != o.cost) return cost > o.cost;
    return order > o.order;
  }
};

}  // namespace planner_detail

/// Best-first search ordered by cost + H with ties broken by cost and then
/// insertion order. A new label is dropped when its cell already holds a
/// label of no greater cost.
inline SearchResult plan(const BlackBoxProblem& p, const HeuristicFn& H, const PlannerConfig& cfg) {
  using namespace planner_detail;
  check_config(p, cfg);
  const Box goal = goal_region(p, cfg);
  if (!p.in_xfree(cfg.start)) throw std::invalid_argument("plan: start state outside X_free");
  const CellIndex cell_of(p.x_bounds, cfg.cell_size);
  const double h = cfg.step / cfg.substeps;

  auto heuristic = [&](std::span<const double> z) {
    const double v = H(z);
    if (!std::isfinite(v)) throw std::runtime_error("plan: heuristic evaluation failed");
    return v;
  };

  SearchResult res;
  std::vector<SearchNode> nodes;
  std::unordered_map<std::uint64_t, double> best;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  std::uint64_t order = 0;

  SearchNode root;
  root.state = cfg.start;
  root.heuristic = heuristic(root.state);
  root.cell = cell_of(root.state);
  nodes.push_back(root);
  best[root.cell] = 0.0;
  open.push({root.priority(), 0.0, order++, 0});
  res.generated = 1;

  std::optional<std::size_t> solved;
  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    if (top.cost > best[nodes[top.node].cell]) continue;
    if (res.iterations >= cfg.max_iterations) {
      res.status = SearchStatus::CapReached;
      break;
    }
    ++res.iterations;
    const SearchNode cur = nodes[top.node];
    if (cfg.record_trace) res.trace.push_back(cur.state);
    if (goal.contains(cur.state)) {
      solved = top.node;
      break;
    }
    for (const auto& u : cfg.controls) {
      std::vector<double> x = cur.state;
      double cost = 0.0;
      bool ok = true;
      int taken = 0;
      for (int s = 0; s < cfg.substeps; ++s) {
        rk4(p, x, cost, u, h);
        ++taken;
        if (!p.x_bounds.contains(x) || !p.in_xfree(x)) {
          ok = false;
          break;
        }
        if (goal.contains(x)) break;
      }
      if (!ok) continue;
      SearchNode child;
      child.cost = cur.cost + cost;
      child.cell = cell_of(x);
      auto it = best.find(child.cell);
      if (it != best.end() && it->second <= child.cost) continue;
      best[child.cell] = child.cost;
      child.state = std::move(x);
      child.heuristic = heuristic(child.state);
      child.parent = top.node;
      child.control = u;
      child.duration = taken * h;
      nodes.push_back(std::move(child));
      open.push({nodes.back().priority(), nodes.back().cost, order++, nodes.size() - 1});
      ++res.generated;
    }
  }

  if (solved) {
    res.status = SearchStatus::Solved;
    res.cost = nodes[*solved].cost;
    std::vector<std::size_t> chain;
    for (std::size_t k = *solved; k != SearchNode::npos; k = nodes[k].parent) chain.push_back(k);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const SearchNode& nd = nodes[*it];
      res.states.push_back(nd.state);
      if (nd.parent != SearchNode::npos) {
        res.controls.push_back(nd.control);
        res.durations.push_back(nd.duration);
        res.edge_costs.push_back(nd.cost - nodes[nd.parent].cost);
      }
    }
  } else if (res.status != SearchStatus::CapReached) {
    res.status = SearchStatus::Exhausted;
  }
  return res;
}

inline SearchResult plan(const PolyProblem& p, const HeuristicFn& H, const PlannerConfig& cfg) {
  return plan(to_black_box(p), H, cfg);
}

struct PathCheck {
  bool ok = false;
  double recomputed_cost = 0.0;
  std::string reason;
};

/// Re-integrates a returned path from the start and checks every substep
/// against X_free, every control against Omega, the endpoint against the goal
/// region and the reported cost (within 1e-6).
inline PathCheck validate_path(const BlackBoxProblem& p, const PlannerConfig& cfg, const SearchResult& r) {
  PathCheck c;
  if (r.status != SearchStatus::Solved) {
    c.reason = "not solved";
    return c;
  }
  const Box goal = planner_detail::goal_region(p, cfg);
  const double h = cfg.step / cfg.substeps;
  std::vector<double> x = cfg.start;
  if (r.states.empty() || r.states.size() != r.controls.size() + 1) {
    c.reason = "malformed path";
    return c;
  }
  for (std::size_t e = 0; e < r.controls.size(); ++e) {
    if (!p.in_omega(r.controls[e])) {
      c.reason = "control outside Omega on edge " + std::to_string(e);
      return c;
    }
    const long steps = std::lround(r.durations[e] / h);
    if (steps < 1 || steps > cfg.substeps || std::abs(steps * h - r.durations[e]) > 1e-9) {
      c.reason = "edge duration is not a whole number of substeps";
      return c;
    }
    for (long s = 0; s < steps; ++s) {
      planner_detail::rk4(p, x, c.recomputed_cost, r.controls[e], h);
      if (!p.x_bounds.contains(x) || !p.in_xfree(x)) {
        c.reason = "substep leaves X_free on edge " + std::to_string(e);
        return c;
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - r.states[e + 1][i]) > 1e-9) {
        c.reason = "state mismatch after edge " + std::to_string(e);
        return c;
      }
    }
  }
  if (!goal.contains(x)) {
    c.reason = "endpoint outside the goal region";
    return c;
  }
  if (std::abs(c.recomputed_cost - r.cost) > 1e-6) {
    c.reason = "cost mismatch";
    return c;
  }
  c.ok = true;
  return c;
}

/// cost + H at each state of a returned path.
inline std::vector<double> path_priorities(const SearchResult& r, const HeuristicFn& H) {
  std::vector<double> out;
  double cost = 0.0;
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    out.push_back(cost + H(r.states[k]));
    if (k < r.edge_costs.size()) cost += r.edge_costs[k];
  }
  return out;
}

/// Euclidean distance to a goal box.
inline double distance_to_box(std::span<const double> z, const Box& b, std::size_t first = 0, std::size_t count = 0) {
  if (count == 0) count = z.size() - first;
  double s = 0.0;
  for (std::size_t i = first; i < first + count; ++i) {
    const double d = std::max({b.lo[i] - z[i], 0.0, z[i] - b.hi[i]});
    s += d * d;
  }
  return std::sqrt(s);
}

/// Distance to the goal box: admissible and consistent for x' = u, |u| <= 1,
/// g = 1.
inline HeuristicFn euclidean_box_heuristic(Box goal) {
  return [goal = std::move(goal)](std::span<const double> z) { return distance_to_box(z, goal); };
}

/// max{planar distance, heading distance} to the goal box for the unicycle
/// with unit speed and turn rate in [-1, 1].
inline HeuristicFn unicycle_box_heuristic(Box goal) {
  return [goal = std::move(goal)](std::span<const double> z) {
    return std::max(distance_to_box(z, goal, 0, 2), distance_to_box(z, goal, 2, 1));
  };
}

struct SpeedupReport {
  std::size_t informed_iters = 0;
  std::size_t uninformed_iters = 0;
  double informed_cost = 0.0;
  double uninformed_cost = 0.0;
  double reduction_fraction = 0.0;
  /// Largest single-edge cost on either returned path.
  double cost_quantum = 0.0;
  bool cost_mismatch = false;
  SearchResult informed;
  SearchResult uninformed;
};

/// Runs the search with H and with the zero heuristic under the same config.
inline SpeedupReport admissible_speedup_report(const BlackBoxProblem& p, const HeuristicFn& H, const PlannerConfig& cfg) {
  SpeedupReport r;
  r.informed = plan(p, H, cfg);
  r.uninformed = plan(p, [](std::span<const double>) { return 0.0; }, cfg);
  if (r.informed.status != SearchStatus::Solved || r.uninformed.status != SearchStatus::Solved) {
    throw std::runtime_error("admissible_speedup_report: both searches must solve");
  }
  r.informed_iters = r.informed.iterations;
  r.uninformed_iters = r.uninformed.iterations;
  r.informed_cost = r.informed.cost;
  r.uninformed_cost = r.uninformed.cost;
  r.reduction_fraction = 1.0 - static_cast<double>(r.informed_iters) / static_cast<double>(r.uninformed_iters);
  for (const SearchResult* s : {&r.informed, &r.uninformed}) {
    for (double c : s->edge_costs) r.cost_quantum = std::max(r.cost_quantum, c);
  }
  r.cost_mismatch = std::abs(r.informed_cost - r.uninformed_cost) > r.cost_quantum;
  return r;
}

}  // namespace heursos

#endif  // HEURSOS_PLANNER_HPP
