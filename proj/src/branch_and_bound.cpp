#include "ucnn/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

namespace ucnn::milp {

const char* to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::GapLimited: return "gap-limited";
    case MilpStatus::NoIncumbent: return "no-incumbent";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

struct BoundChange {
  int col;
  double lower;
  double upper;
};

struct Node {
  double bound;
  long seq;
  int depth;
  std::vector<BoundChange> changes;
  Basis basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // std::priority_queue pops the "largest"; invert for smallest bound.
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

double relative_gap(double incumbent, double bound) {
  if (!std::isfinite(incumbent)) return std::numeric_limits<double>::infinity();
  return std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

}  // namespace

MilpResult solve_milp(const MilpModel& model, const BnbParams& params) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  model.validate();
  MilpResult result;
  DualSimplex simplex(relax(model), params.lp);

  std::vector<int> integral;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.variable(j).is_integral()) integral.push_back(j);
  }
  auto apply = [&](const std::vector<BoundChange>& changes) {
    for (int j : integral) simplex.set_column_bounds(j, model.variable(j).lower, model.variable(j).upper);
    for (const auto& c : changes) simplex.set_column_bounds(c.col, c.lower, c.upper);
  };

  double incumbent = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  open.push(Node{-std::numeric_limits<double>::infinity(), seq++, 0, {}, {}});
  bool limited = false;
  // Smallest bound among nodes discarded by the incumbent test; together with
  // the open queue this is the proven lower bound.
  double pruned_floor = std::numeric_limits<double>::infinity();
  auto within_gap = [&](double value) {
    if (!std::isfinite(incumbent)) return false;
    return value >= incumbent - params.relative_gap * std::max(1.0, std::abs(incumbent));
  };
  auto global_bound = [&] {
    double lb = std::min(incumbent, pruned_floor);
    if (!open.empty()) lb = std::min(lb, open.top().bound);
    return lb;
  };
  auto record = [&] {
    if (params.keep_trace) result.trace.push_back({result.nodes, incumbent, global_bound()});
  };

  while (!open.empty()) {
    if (result.nodes >= params.node_limit || elapsed() > params.time_limit_s) {
      limited = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (within_gap(node.bound)) {
      pruned_floor = std::min(pruned_floor, node.bound);
      continue;
    }

    ++result.nodes;
    apply(node.changes);
    LpSolution lp = simplex.solve(node.basis.empty() ? nullptr : &node.basis);
    result.lp_iterations += lp.iterations;

    if (node.depth == 0) {
      if (lp.status == LpStatus::Unbounded) {
        result.status = MilpStatus::Unbounded;
        result.seconds = elapsed();
        return result;
      }
      if (lp.status == LpStatus::Optimal) result.root_bound = lp.objective;
    }
    if (lp.status != LpStatus::Optimal) {
      record();
      continue;
    }
    if (within_gap(lp.objective)) {
      pruned_floor = std::min(pruned_floor, lp.objective);
      record();
      continue;
    }

    int branch_col = -1;
    double best_frac = 0.0;
    double max_dev = 0.0;
    for (int j : integral) {
      const double v = lp.x[j];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      max_dev = std::max(max_dev, frac);
      if (frac > params.integrality_tol && frac > best_frac) {
        best_frac = frac;
        branch_col = j;
      }
    }

    if (branch_col < 0) {
      double obj = lp.objective;
      Eigen::VectorXd x = lp.x;
      if (max_dev > 1e-9) {
        // Snap integral columns and re-solve the continuous part.
        std::vector<BoundChange> fix = node.changes;
        for (int j : integral) {
          const double v = std::round(lp.x[j]);
          fix.push_back({j, v, v});
        }
        apply(fix);
        LpSolution polished = simplex.solve(&lp.basis);
        result.lp_iterations += polished.iterations;
        if (polished.status == LpStatus::Optimal) {
          obj = polished.objective;
          x = polished.x;
        }
      }
      for (int j : integral) x[j] = std::round(x[j]);
      if (obj < incumbent) {
        incumbent = obj;
        best_x = std::move(x);
      } else {
        pruned_floor = std::min(pruned_floor, obj);
      }
      record();
      continue;
    }

    ++result.branches;
    const double v = lp.x[branch_col];
    const double lo = simplex.column_lower(branch_col);
    const double hi = simplex.column_upper(branch_col);
    Node down{lp.objective, seq++, node.depth + 1, node.changes, lp.basis};
    down.changes.push_back({branch_col, lo, std::floor(v)});
    Node up{lp.objective, seq++, node.depth + 1, std::move(node.changes), std::move(lp.basis)};
    up.changes.push_back({branch_col, std::ceil(v), hi});
    open.push(std::move(down));
    open.push(std::move(up));
    record();
  }

  result.seconds = elapsed();
  if (!std::isfinite(incumbent)) {
    result.status = limited ? MilpStatus::NoIncumbent : MilpStatus::Infeasible;
    result.bound = global_bound();
    return result;
  }
  result.x = std::move(best_x);
  result.objective = incumbent;
  result.bound = global_bound();
  result.gap = relative_gap(incumbent, result.bound);
  result.status = !limited || result.gap <= params.relative_gap ? MilpStatus::Optimal
                                                                 : MilpStatus::GapLimited;
  return result;
}

}  // namespace ucnn::milp
