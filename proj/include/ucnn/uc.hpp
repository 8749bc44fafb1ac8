#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ucnn/branch_and_bound.hpp"
#include "ucnn/grid.hpp"
#include "ucnn/milp_model.hpp"
#include "ucnn/sampling.hpp"

namespace ucnn::uc {

struct UcOptions {
  int horizon = 24;  // leading hours of the input that are scheduled
  bool n1_enabled = false;
  /// Contingency line ids; when unset, every non-islanding in-service line.
  std::optional<std::vector<int>> contingencies;
  bool ramps = true;
  milp::BnbParams bnb;  // gap / integrality tolerances and limits
};

/// Column roles stored in VarTag::role.
enum class Role : std::int16_t {
  Commit,      // alpha[g, t]
  Start,       // start indicator[g, t]
  Output,      // P_g[g, t]
  Segment,     // cost-curve segment[g, k, t]
  StartExtra,  // startup cost above the hottest step[g, t]
  Theta,       // angle[block, bus, t]
  Shed,        // LS[bus, t]
  Curtail,     // WC[wind, t]
};

/// Column indices of a built model; -1 where a column does not exist.
struct Layout {
  int hours = 0;
  std::vector<int> blocks;  // contingency line ids per angle block, -1 for the base case
  Eigen::MatrixXi commit, start, output, start_extra;  // gens x hours
  std::vector<Eigen::MatrixXi> segment;                // per gen: segments x hours
  std::vector<Eigen::MatrixXi> theta;                  // per block: buses x hours
  Eigen::MatrixXi shed;                                // buses x hours
  Eigen::MatrixXi curtail;                             // wind x hours
};

struct UcModel {
  milp::MilpModel model;
  Layout layout;
};

/// Throws ValidationError when the base topology islands the network or
/// the input shapes disagree with the case.
UcModel build_milp(const grid::GridCase& grid, const sampling::UcInput& x, const UcOptions& opts = {});

struct CostBreakdown {
  double generation = 0.0;
  double startup = 0.0;
  double curtailment = 0.0;
  double shed = 0.0;

  double total() const { return generation + startup + curtailment + shed; }
};

enum class SolveStatus : std::uint8_t { Optimal, GapLimited, Infeasible, Failed };

const char* to_string(SolveStatus status);
SolveStatus status_from_string(const std::string& s);

struct UcSolution {
  Eigen::MatrixXd commitment;  // gens x hours, entries 0/1
  Eigen::MatrixXd output;      // gens x hours, MW
  Eigen::MatrixXd curtail;     // wind x hours, MW
  Eigen::MatrixXd shed;        // buses x hours, MW
  std::vector<int> blocks;     // as Layout::blocks
  std::vector<Eigen::MatrixXd> theta;  // per block: buses x hours, rad
  double cost = 0.0;
  CostBreakdown breakdown;
  SolveStatus status = SolveStatus::Failed;
  double gap = 0.0;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;
  long nodes = 0;

  int hours() const { return static_cast<int>(commitment.cols()); }
  bool feasible() const { return status == SolveStatus::Optimal || status == SolveStatus::GapLimited; }
};

nlohmann::json solution_to_json(const UcSolution& sol);
UcSolution solution_from_json(const nlohmann::json& doc);

/// Maps a raw column vector back onto the solution matrices. Commitments are
/// rounded to exact 0/1.
UcSolution decode(const UcModel& m, std::span<const double> values);

/// Builds and solves with the internal engine. The cost and breakdown are
/// recomputed from the decoded matrices.
UcSolution solve(const grid::GridCase& grid, const sampling::UcInput& x, const UcOptions& opts = {});

/// Recomputes the objective from the raw matrices. Throws ValidationError
/// when a unit produces while decommitted.
CostBreakdown evaluate_cost(const grid::GridCase& grid, const sampling::UcInput& x, const UcSolution& sol);

/// Hours a unit had been off before a start at `hour` (0-based), counting
/// the initial state.
int hours_off_before(const grid::GeneratorSpec& gen, const Eigen::MatrixXd& commitment, int unit, int hour);

enum class Family : std::uint8_t {
  Balance,
  FlowLimit,
  AngleLimit,
  ReferenceAngle,
  GenerationLimit,
  Curtailment,
  Shedding,
  MinUp,
  MinDown,
  Ramp,
  Integrality,
};

const char* to_string(Family f);

struct Violation {
  Family family;
  double amount = 0.0;  // MW, rad or hours
  int entity = -1;      // gen / bus / line / wind position
  int hour = -1;        // 0-based
  int block = -1;       // angle block
  std::string detail;
};

struct ViolationReport {
  double tolerance = 1e-6;
  double worst = 0.0;                  // largest violation of any family
  std::vector<Violation> violations;   // worst per family, only above tolerance

  bool empty() const { return violations.empty(); }
  const Violation* find(Family f) const;
};

ViolationReport validate_solution(const grid::GridCase& grid, const sampling::UcInput& x, const UcSolution& sol,
                                  const UcOptions& opts = {}, double tolerance = 1e-6);

/// Contingency line ids used for `x` under `opts` (empty without N-1).
std::vector<int> contingency_lines(const grid::GridCase& grid, const sampling::UcInput& x, const UcOptions& opts);

}  // namespace ucnn::uc
