#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "ucnn/milp_model.hpp"

namespace ucnn::milp {

enum class LpStatus : std::uint8_t { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

/// Simplex basis over the extended variable set: structural columns first,
/// then one logical per row (the row activity).
struct Basis {
  std::vector<int> head;
  std::vector<VarStatus> status;
  std::vector<double> weights;  // dual steepest-edge reference weights

  bool empty() const { return head.empty(); }
};

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 100;
  long max_iterations = 2'000'000;
  /// Estimated 1-norm condition number of a basis above which the solve is
  /// abandoned with NumericalError.
  double condition_limit = 1e14;
  /// Initial magnitude of the box placed on infinite bounds.
  double artificial_bound = 1e7;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;             // structural values
  Eigen::VectorXd row_activity;  // A x
  Eigen::VectorXd row_duals;
  Eigen::VectorXd reduced_costs;
  double objective = 0.0;
  long iterations = 0;
  Basis basis;
};

/// Bounded revised dual simplex on `row_lo <= A x <= row_hi`.
///
/// Infinite bounds are boxed at a large artificial magnitude that grows until
/// the answer no longer depends on it, so a single dual phase handles every
/// LP. Leaving rows are priced by dual steepest edge; the ratio test is the
/// two-pass Harris test. After a run of degenerate pivots the solver switches
/// to a smallest-index rule until the dual objective moves again.
///
/// The basis is kept as a sparse LU factorization with product-form updates,
/// refactorized every `refactor_interval` pivots.
class DualSimplex {
 public:
  explicit DualSimplex(LpData lp, LpOptions options = {});

  int rows() const { return m_; }
  int cols() const { return n_; }

  void set_column_bounds(int col, double lower, double upper);
  double column_lower(int col) const { return lo_[col]; }
  double column_upper(int col) const { return hi_[col]; }
  const LpData& data() const { return lp_; }

  /// Solves from `warm` when given and shape-compatible, else from the
  /// all-logical basis.
  LpSolution solve(const Basis* warm = nullptr);

 private:
  using SpMat = Eigen::SparseMatrix<double>;

  struct Eta {
    int row;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  void reset_working_bounds();
  void cold_start();
  bool load(const Basis& basis);
  void refactor();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void load_column(int j, Eigen::VectorXd& out) const;
  double dot_column(int j, const Eigen::VectorXd& v) const;
  void place_nonbasic(int j);
  void compute_primal();
  void compute_duals();
  bool restore_dual_feasibility();
  bool expand_artificial_box();
  bool release_idle_artificials();
  double infeasibility(int var) const;
  double estimate_condition() const;
  LpSolution run();
  LpSolution extract(LpStatus status, long iterations) const;

  LpData lp_;
  LpOptions opt_;
  int n_ = 0;
  int m_ = 0;
  Eigen::VectorXd lo_, hi_;    // true bounds, extended
  Eigen::VectorXd wlo_, whi_;  // working (boxed) bounds
  Eigen::VectorXd cost_;
  double box_ = 0.0;

  std::vector<int> head_;
  std::vector<int> pos_;
  std::vector<VarStatus> st_;
  Eigen::VectorXd x_, d_, w_;

  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;  // transpose() is non-const
  std::vector<Eta> etas_;
};

/// Solves the continuous relaxation. Integrality marks are ignored.
LpSolution solve_lp(const LpData& lp, const LpOptions& options = {});
LpSolution solve_lp(const MilpModel& model, const LpOptions& options = {});

/// Dense two-phase tableau simplex with Bland's rule. Slow but independent of
/// the revised code path; meant for small problems and cross-checks.
LpSolution solve_lp_dense(const LpData& lp);

/// Objective of the dual solution implied by `sol`'s row duals and reduced
/// costs. Equals the primal objective at an optimum.
double dual_objective(const LpData& lp, const LpSolution& sol);

}  // namespace ucnn::milp
