#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ucnn/lp_solver.hpp"
#include "ucnn/milp_model.hpp"

namespace ucnn::milp {

enum class MilpStatus : std::uint8_t {
  Optimal,
  GapLimited,   // limit reached with an incumbent
  NoIncumbent,  // limit reached before any integral point was found
  Infeasible,
  Unbounded,
};

const char* to_string(MilpStatus status);

enum class BranchRule : std::uint8_t { MostFractional };

struct BnbParams {
  double relative_gap = 1e-6;
  double integrality_tol = 1e-6;
  long node_limit = 1'000'000;
  double time_limit_s = 3600.0;
  BranchRule rule = BranchRule::MostFractional;
  LpOptions lp;
  /// Record the incumbent / bound pair after every node.
  bool keep_trace = false;
};

struct BnbTracePoint {
  long node;
  double incumbent;    // +inf until the first integral point
  double lower_bound;
};

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  Eigen::VectorXd x;        // empty unless an incumbent exists
  double objective = 0.0;   // incumbent objective
  double bound = 0.0;       // proven lower bound
  double gap = 0.0;         // (objective - bound) / max(1, |objective|)
  double root_bound = 0.0;  // objective of the root relaxation
  long nodes = 0;
  long branches = 0;
  long lp_iterations = 0;
  double seconds = 0.0;
  std::vector<BnbTracePoint> trace;

  bool has_solution() const { return x.size() > 0; }
};

/// Best-bound-first branch and bound. Each node re-solves the relaxation
/// with the dual simplex, warm-started from its parent's optimal basis.
/// Branching picks the most fractional integral column, lowest index on
/// ties. Integral nodes are polished by fixing the integral columns and
/// re-solving, so the returned point satisfies every row to LP tolerance.
/// Deterministic for a given model and parameters unless the time limit
/// fires.
MilpResult solve_milp(const MilpModel& model, const BnbParams& params = {});

}  // namespace ucnn::milp
