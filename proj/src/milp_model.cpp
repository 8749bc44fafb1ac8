#include "ucnn/milp_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ucnn/error.hpp"

namespace ucnn::milp {

int MilpModel::add_variable(std::string name, VarKind kind, double lower,
                            double upper, double cost, VarTag tag) {
  if (kind == VarKind::Binary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  vars_.push_back(Variable{std::move(name), kind, lower, upper, tag});
  cost_.push_back(cost);
  return static_cast<int>(vars_.size()) - 1;
}

int MilpModel::add_constraint(std::string name, Sense sense, double rhs,
                              std::span<const Term> terms) {
  std::vector<Term> merged(terms.begin(), terms.end());
  std::sort(merged.begin(), merged.end(),
            [](const Term& a, const Term& b) { return a.first < b.first; });
  std::vector<Term> row;
  row.reserve(merged.size());
  for (const auto& [col, coef] : merged) {
    if (!row.empty() && row.back().first == col) {
      row.back().second += coef;
    } else {
      row.emplace_back(col, coef);
    }
  }
  std::erase_if(row, [](const Term& t) { return t.second == 0.0; });
  nnz_ += row.size();
  rows_.push_back(Constraint{std::move(name), sense, rhs});
  row_terms_.push_back(std::move(row));
  return static_cast<int>(rows_.size()) - 1;
}

void MilpModel::set_cost(int col, double cost) { cost_.at(col) = cost; }

void MilpModel::set_bounds(int col, double lower, double upper) {
  auto& v = vars_.at(col);
  v.lower = lower;
  v.upper = upper;
}

int MilpModel::num_integral() const {
  return static_cast<int>(std::count_if(
      vars_.begin(), vars_.end(), [](const Variable& v) { return v.is_integral(); }));
}

Eigen::SparseMatrix<double> MilpModel::constraint_matrix() const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nnz_);
  for (int i = 0; i < num_constraints(); ++i) {
    for (const auto& [col, coef] : row_terms_[i]) trip.emplace_back(i, col, coef);
  }
  Eigen::SparseMatrix<double> a(num_constraints(), num_variables());
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

int MilpModel::find_variable(const std::string& name) const {
  for (int j = 0; j < num_variables(); ++j) {
    if (vars_[j].name == name) return j;
  }
  return -1;
}

void MilpModel::validate() const {
  const int n = num_variables();
  for (int j = 0; j < n; ++j) {
    const auto& v = vars_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      throw ValidationError("variable " + v.name + " has invalid bounds");
    }
    if (!std::isfinite(cost_[j])) {
      throw ValidationError("variable " + v.name + " has a non-finite cost");
    }
  }
  for (int i = 0; i < num_constraints(); ++i) {
    if (!std::isfinite(rows_[i].rhs)) {
      throw ValidationError("constraint " + rows_[i].name + " has a non-finite rhs");
    }
    for (const auto& [col, coef] : row_terms_[i]) {
      if (col < 0 || col >= n) {
        throw ValidationError("constraint " + rows_[i].name +
                              " references undeclared column " + std::to_string(col));
      }
      if (!std::isfinite(coef)) {
        throw ValidationError("constraint " + rows_[i].name + " has a non-finite coefficient");
      }
    }
  }
}

double MilpModel::objective_value(std::span<const double> x) const {
  double obj = offset_;
  for (int j = 0; j < num_variables(); ++j) obj += cost_[j] * x[j];
  return obj;
}

double MilpModel::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
  }
  for (int i = 0; i < num_constraints(); ++i) {
    double act = 0.0;
    for (const auto& [col, coef] : row_terms_[i]) act += coef * x[col];
    const double r = rows_[i].rhs;
    switch (rows_[i].sense) {
      case Sense::LessEqual: worst = std::max(worst, act - r); break;
      case Sense::GreaterEqual: worst = std::max(worst, r - act); break;
      case Sense::Equal: worst = std::max(worst, std::abs(act - r)); break;
    }
  }
  return worst;
}

LpData relax(const MilpModel& model) {
  LpData lp;
  const int n = model.num_variables();
  const int m = model.num_constraints();
  lp.A = model.constraint_matrix();
  lp.cost = Eigen::Map<const Eigen::VectorXd>(model.costs().data(), n);
  lp.col_lo.resize(n);
  lp.col_hi.resize(n);
  for (int j = 0; j < n; ++j) {
    lp.col_lo[j] = model.variable(j).lower;
    lp.col_hi[j] = model.variable(j).upper;
  }
  lp.row_lo.resize(m);
  lp.row_hi.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& c = model.constraint(i);
    lp.row_lo[i] = c.sense == Sense::LessEqual ? -kInf : c.rhs;
    lp.row_hi[i] = c.sense == Sense::GreaterEqual ? kInf : c.rhs;
  }
  lp.offset = model.objective_offset();
  return lp;
}

}  // namespace ucnn::milp
