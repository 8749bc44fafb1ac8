#include <cmath>
#include <limits>
#include <vector>

#include "ucnn/lp_solver.hpp"

namespace ucnn::milp {

namespace {

constexpr double kEps = 1e-9;

// x_j = offset + sign * z_pos - (free ? z_neg : 0)
struct ColumnMap {
  double offset = 0.0;
  double sign = 1.0;
  int pos = -1;
  int neg = -1;
};

struct Tableau {
  Eigen::MatrixXd t;  // rows 0..m-1 constraints, last column rhs
  std::vector<int> basic;

  int rows() const { return static_cast<int>(t.rows()); }
  int cols() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i < rows(); ++i) {
      if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
    }
    basic[r] = c;
  }
};

enum class PhaseResult { Optimal, Unbounded };

// Bland's rule on min cost'z over the tableau; `allowed` masks columns that
// may enter.
PhaseResult run_phase(Tableau& tab, const Eigen::VectorXd& cost,
                      const std::vector<char>& allowed, long& iterations) {
  const int m = tab.rows();
  const int n = tab.cols();
  while (true) {
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) cb[i] = cost[tab.basic[i]];
    int enter = -1;
    for (int j = 0; j < n && enter < 0; ++j) {
      if (!allowed[j]) continue;
      const double rc = cost[j] - cb.dot(tab.t.col(j));
      if (rc < -kEps) enter = j;
    }
    if (enter < 0) return PhaseResult::Optimal;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.t(i, enter);
      if (a <= kEps) continue;
      const double ratio = tab.t(i, n) / a;
      if (leave < 0 || ratio < best - kEps ||
          (std::abs(ratio - best) <= kEps && tab.basic[i] < tab.basic[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return PhaseResult::Unbounded;
    tab.pivot(leave, enter);
    ++iterations;
  }
}

}  // namespace

LpSolution solve_lp_dense(const LpData& lp) {
  const int n = lp.cols();
  const int m = lp.rows();
  LpSolution sol;

  // Column substitution to z >= 0.
  std::vector<ColumnMap> cmap(n);
  int nz = 0;
  std::vector<std::pair<int, double>> upper_rows;  // (z index, bound)
  for (int j = 0; j < n; ++j) {
    const double lo = lp.col_lo[j];
    const double hi = lp.col_hi[j];
    auto& c = cmap[j];
    if (std::isfinite(lo)) {
      c.offset = lo;
      c.pos = nz++;
      if (std::isfinite(hi)) upper_rows.emplace_back(c.pos, hi - lo);
    } else if (std::isfinite(hi)) {
      c.offset = hi;
      c.sign = -1.0;
      c.pos = nz++;
    } else {
      c.pos = nz++;
      c.neg = nz++;
    }
  }

  // Rows over z: coefficients, sense (-1 <=, 0 =, +1 >=), rhs.
  struct Row {
    Eigen::VectorXd a;
    int sense;
    double rhs;
  };
  std::vector<Row> rows;
  const Eigen::MatrixXd dense_a = Eigen::MatrixXd(lp.A);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nz);
    double shift = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = dense_a(i, j);
      if (v == 0.0) continue;
      shift += v * cmap[j].offset;
      a[cmap[j].pos] += v * cmap[j].sign;
      if (cmap[j].neg >= 0) a[cmap[j].neg] -= v;
    }
    const double lo = lp.row_lo[i];
    const double hi = lp.row_hi[i];
    if (lo == hi) {
      rows.push_back({a, 0, lo - shift});
    } else {
      if (std::isfinite(lo)) rows.push_back({a, 1, lo - shift});
      if (std::isfinite(hi)) rows.push_back({a, -1, hi - shift});
    }
  }
  for (const auto& [zi, bound] : upper_rows) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(nz);
    a[zi] = 1.0;
    rows.push_back({a, -1, bound});
  }

  const int mr = static_cast<int>(rows.size());
  int nslack = 0;
  for (const auto& r : rows) nslack += r.sense != 0 ? 1 : 0;
  const int ncols = nz + nslack + mr;  // structural, slack, artificial
  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(mr, ncols + 1);
  tab.basic.assign(mr, -1);
  int slack = nz;
  for (int i = 0; i < mr; ++i) {
    auto& r = rows[i];
    tab.t.row(i).head(nz) = r.a.transpose();
    int s = -1;
    if (r.sense != 0) {
      s = slack++;
      tab.t(i, s) = r.sense < 0 ? 1.0 : -1.0;
    }
    tab.t(i, ncols) = r.rhs;
    if (r.rhs < 0.0) tab.t.row(i) *= -1.0;
    const int art = nz + nslack + i;
    tab.t(i, art) = 1.0;
    tab.basic[i] = art;
  }

  long iterations = 0;
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(ncols);
  phase1.tail(mr).setOnes();
  std::vector<char> allowed(ncols, 1);
  run_phase(tab, phase1, allowed, iterations);
  double infeas = 0.0;
  for (int i = 0; i < mr; ++i) {
    if (tab.basic[i] >= nz + nslack) infeas += tab.t(i, ncols);
  }
  sol.iterations = iterations;
  if (infeas > 1e-7) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }
  // Drive zero-valued artificials out where possible.
  for (int i = 0; i < mr; ++i) {
    if (tab.basic[i] < nz + nslack) continue;
    for (int j = 0; j < nz + nslack; ++j) {
      if (std::abs(tab.t(i, j)) > kEps) {
        tab.pivot(i, j);
        break;
      }
    }
  }
  for (int j = nz + nslack; j < ncols; ++j) allowed[j] = 0;

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(ncols);
  for (int j = 0; j < n; ++j) {
    phase2[cmap[j].pos] += lp.cost[j] * cmap[j].sign;
    if (cmap[j].neg >= 0) phase2[cmap[j].neg] -= lp.cost[j];
  }
  if (run_phase(tab, phase2, allowed, iterations) == PhaseResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
    sol.iterations = iterations;
    return sol;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(ncols);
  for (int i = 0; i < mr; ++i) z[tab.basic[i]] = tab.t(i, ncols);
  sol.x.resize(n);
  for (int j = 0; j < n; ++j) {
    double v = cmap[j].offset + cmap[j].sign * z[cmap[j].pos];
    if (cmap[j].neg >= 0) v -= z[cmap[j].neg];
    sol.x[j] = v;
  }
  sol.row_activity = lp.A * sol.x;
  sol.objective = lp.cost.dot(sol.x) + lp.offset;
  sol.status = LpStatus::Optimal;
  sol.iterations = iterations;
  return sol;
}

}  // namespace ucnn::milp
