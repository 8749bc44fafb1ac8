#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace ucnn::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind : std::uint8_t { Continuous, Binary, Integer };

enum class Sense : std::uint8_t { LessEqual, GreaterEqual, Equal };

/// Opaque back-reference from a column to the entity it models. The
/// formulation layer assigns meaning to `role`; the engine never reads it.
struct VarTag {
  std::int16_t role = -1;
  std::int32_t entity = -1;
  std::int32_t sub = -1;
  std::int32_t hour = -1;

  friend bool operator==(const VarTag&, const VarTag&) = default;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
  VarTag tag;

  bool is_integral() const { return kind != VarKind::Continuous; }
};

struct Constraint {
  std::string name;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

using Term = std::pair<int, double>;

/// Solver-agnostic mixed-integer linear program: minimize c'x + offset
/// subject to sparse rows `a_i x (<=|>=|=) b_i` and column bounds.
class MilpModel {
 public:
  MilpModel() = default;
  explicit MilpModel(std::string name) : name_(std::move(name)) {}

  int add_variable(std::string name, VarKind kind, double lower, double upper,
                   double cost = 0.0, VarTag tag = {});

  /// Duplicate column indices in `terms` are summed.
  int add_constraint(std::string name, Sense sense, double rhs,
                     std::span<const Term> terms);
  int add_constraint(std::string name, Sense sense, double rhs,
                     std::initializer_list<Term> terms) {
    return add_constraint(std::move(name), sense, rhs,
                          std::span<const Term>(terms.begin(), terms.size()));
  }

  void set_cost(int col, double cost);
  void set_bounds(int col, double lower, double upper);
  void set_objective_offset(double offset) { offset_ = offset; }
  void set_name(std::string name) { name_ = std::move(name); }

  const std::string& name() const { return name_; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  int num_integral() const;
  std::size_t num_nonzeros() const { return nnz_; }

  const std::vector<Variable>& variables() const { return vars_; }
  const Variable& variable(int col) const { return vars_.at(col); }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const Constraint& constraint(int row) const { return rows_.at(row); }
  const std::vector<double>& costs() const { return cost_; }
  double objective_offset() const { return offset_; }

  /// Row-major term lists, one per constraint.
  const std::vector<std::vector<Term>>& row_terms() const { return row_terms_; }

  /// rows x cols, compressed column-major.
  Eigen::SparseMatrix<double> constraint_matrix() const;

  /// Index of the named column, or -1.
  int find_variable(const std::string& name) const;

  /// Throws ValidationError when a constraint references an undeclared
  /// column, a bound pair is inverted, or a coefficient is not finite.
  void validate() const;

  double objective_value(std::span<const double> x) const;

  /// Largest violation of any row or column bound at `x`.
  double max_violation(std::span<const double> x) const;

 private:
  std::string name_ = "MODEL";
  std::vector<Variable> vars_;
  std::vector<double> cost_;
  std::vector<Constraint> rows_;
  std::vector<std::vector<Term>> row_terms_;
  std::size_t nnz_ = 0;
  double offset_ = 0.0;
};

/// Continuous relaxation in the computational form used by the LP core:
/// minimize c'x s.t. row_lo <= A x <= row_hi, col_lo <= x <= col_hi.
struct LpData {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd cost;
  Eigen::VectorXd col_lo, col_hi;
  Eigen::VectorXd row_lo, row_hi;
  double offset = 0.0;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
};

LpData relax(const MilpModel& model);

}  // namespace ucnn::milp
