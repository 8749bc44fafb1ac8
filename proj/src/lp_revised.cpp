#include <algorithm>
#include <cmath>
#include <limits>

#include "ucnn/error.hpp"
#include "ucnn/lp_solver.hpp"

namespace ucnn::milp {

namespace {

constexpr int kDegenerateRunBeforeBland = 200;
constexpr double kBoxGrowth = 1e3;
constexpr double kBoxLimit = 1e13;

bool fixed(double lo, double hi) { return lo == hi; }

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

DualSimplex::DualSimplex(LpData lp, LpOptions options)
    : lp_(std::move(lp)), opt_(options), n_(lp_.cols()), m_(lp_.rows()) {
  lp_.A.makeCompressed();
  const int total = n_ + m_;
  lo_.resize(total);
  hi_.resize(total);
  cost_ = Eigen::VectorXd::Zero(total);
  lo_.head(n_) = lp_.col_lo;
  hi_.head(n_) = lp_.col_hi;
  lo_.tail(m_) = lp_.row_lo;
  hi_.tail(m_) = lp_.row_hi;
  cost_.head(n_) = lp_.cost;
}

void DualSimplex::set_column_bounds(int col, double lower, double upper) {
  lo_[col] = lower;
  hi_[col] = upper;
}

void DualSimplex::reset_working_bounds() {
  box_ = opt_.artificial_bound;
  const int total = n_ + m_;
  wlo_.resize(total);
  whi_.resize(total);
  for (int j = 0; j < total; ++j) {
    wlo_[j] = std::isfinite(lo_[j]) ? lo_[j] : -box_;
    whi_[j] = std::isfinite(hi_[j]) ? hi_[j] : box_;
  }
}

void DualSimplex::cold_start() {
  const int total = n_ + m_;
  head_.resize(m_);
  pos_.assign(total, -1);
  st_.assign(total, VarStatus::AtLower);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
    st_[n_ + i] = VarStatus::Basic;
  }
  for (int j = 0; j < n_; ++j) {
    const bool lo_inf = !std::isfinite(lo_[j]);
    const bool hi_inf = !std::isfinite(hi_[j]);
    if (cost_[j] > 0.0) {
      st_[j] = VarStatus::AtLower;
    } else if (cost_[j] < 0.0) {
      st_[j] = VarStatus::AtUpper;
    } else if (!lo_inf) {
      st_[j] = VarStatus::AtLower;
    } else if (!hi_inf) {
      st_[j] = VarStatus::AtUpper;
    } else {
      st_[j] = VarStatus::AtZero;
    }
  }
  w_ = Eigen::VectorXd::Ones(m_);
}

bool DualSimplex::load(const Basis& basis) {
  const int total = n_ + m_;
  if (static_cast<int>(basis.head.size()) != m_ ||
      static_cast<int>(basis.status.size()) != total) {
    return false;
  }
  head_ = basis.head;
  st_ = basis.status;
  pos_.assign(total, -1);
  for (int i = 0; i < m_; ++i) {
    const int j = head_[i];
    if (j < 0 || j >= total || pos_[j] >= 0 || st_[j] != VarStatus::Basic) return false;
    pos_[j] = i;
  }
  for (int j = 0; j < total; ++j) {
    if (pos_[j] < 0 && st_[j] == VarStatus::Basic) return false;
    // A free-at-zero status is only meaningful when zero is inside the box.
    if (st_[j] == VarStatus::AtZero && (std::isfinite(lo_[j]) || std::isfinite(hi_[j]))) {
      st_[j] = std::isfinite(lo_[j]) ? VarStatus::AtLower : VarStatus::AtUpper;
    }
  }
  if (static_cast<int>(basis.weights.size()) == m_) {
    w_ = Eigen::Map<const Eigen::VectorXd>(basis.weights.data(), m_);
  } else {
    w_ = Eigen::VectorXd::Ones(m_);
  }
  return true;
}

void DualSimplex::refactor() {
  etas_.clear();
  if (m_ == 0) return;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m_) * 4);
  for (int r = 0; r < m_; ++r) {
    const int j = head_[r];
    if (j < n_) {
      for (SpMat::InnerIterator it(lp_.A, j); it; ++it) trip.emplace_back(it.row(), r, it.value());
    } else {
      trip.emplace_back(j - n_, r, -1.0);
    }
  }
  SpMat basis(m_, m_);
  basis.setFromTriplets(trip.begin(), trip.end());
  basis.makeCompressed();
  lu_.analyzePattern(basis);
  lu_.factorize(basis);
  if (lu_.info() != Eigen::Success) {
    throw NumericalError("simplex basis is singular: " + lu_.lastErrorMessage());
  }
  const double cond = estimate_condition();
  if (!(cond <= opt_.condition_limit)) {
    throw NumericalError("simplex basis condition estimate " + std::to_string(cond) +
                         " exceeds limit");
  }
}

// Hager's 1-norm estimator of ||B^-1||_1, scaled by ||B||_1.
double DualSimplex::estimate_condition() const {
  double norm_b = 0.0;
  for (int r = 0; r < m_; ++r) {
    const int j = head_[r];
    double col = 0.0;
    if (j < n_) {
      for (SpMat::InnerIterator it(lp_.A, j); it; ++it) col += std::abs(it.value());
    } else {
      col = 1.0;
    }
    norm_b = std::max(norm_b, col);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Constant(m_, 1.0 / m_);
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    Eigen::VectorXd y = x;
    ftran(y);
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    est = y.lpNorm<1>();
    Eigen::VectorXd z = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    btran(z);
    int jmax = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&jmax);
    if (zmax <= z.dot(x)) break;
    x.setZero();
    x[jmax] = 1.0;
  }
  return est * norm_b;
}

void DualSimplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v).eval();
  for (const auto& eta : etas_) {
    const double vr = v[eta.row] / eta.pivot;
    if (vr != 0.0) {
      for (std::size_t k = 0; k < eta.index.size(); ++k) v[eta.index[k]] -= eta.value[k] * vr;
    }
    v[eta.row] = vr;
  }
}

void DualSimplex::btran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->row];
    for (std::size_t k = 0; k < it->index.size(); ++k) acc -= it->value[k] * v[it->index[k]];
    v[it->row] = acc / it->pivot;
  }
  v = lu_.transpose().solve(v).eval();
}

void DualSimplex::load_column(int j, Eigen::VectorXd& out) const {
  out.setZero(m_);
  if (j < n_) {
    for (SpMat::InnerIterator it(lp_.A, j); it; ++it) out[it.row()] = it.value();
  } else {
    out[j - n_] = -1.0;
  }
}

double DualSimplex::dot_column(int j, const Eigen::VectorXd& v) const {
  if (j >= n_) return -v[j - n_];
  double s = 0.0;
  for (SpMat::InnerIterator it(lp_.A, j); it; ++it) s += it.value() * v[it.row()];
  return s;
}

void DualSimplex::place_nonbasic(int j) {
  switch (st_[j]) {
    case VarStatus::AtLower: x_[j] = wlo_[j]; break;
    case VarStatus::AtUpper: x_[j] = whi_[j]; break;
    case VarStatus::AtZero: x_[j] = 0.0; break;
    case VarStatus::Basic: break;
  }
}

void DualSimplex::compute_primal() {
  const int total = n_ + m_;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < total; ++j) {
    if (st_[j] == VarStatus::Basic) continue;
    place_nonbasic(j);
    const double xj = x_[j];
    if (xj == 0.0) continue;
    if (j < n_) {
      for (SpMat::InnerIterator it(lp_.A, j); it; ++it) rhs[it.row()] -= it.value() * xj;
    } else {
      rhs[j - n_] += xj;
    }
  }
  ftran(rhs);
  for (int r = 0; r < m_; ++r) x_[head_[r]] = rhs[r];
}

void DualSimplex::compute_duals() {
  Eigen::VectorXd y(m_);
  for (int r = 0; r < m_; ++r) y[r] = cost_[head_[r]];
  btran(y);
  const int total = n_ + m_;
  for (int j = 0; j < total; ++j) {
    d_[j] = st_[j] == VarStatus::Basic ? 0.0 : cost_[j] - dot_column(j, y);
  }
}

// Flips boxed nonbasics whose reduced cost has the wrong sign. Returns true
// when any primal value moved.
bool DualSimplex::restore_dual_feasibility() {
  bool moved = false;
  const int total = n_ + m_;
  for (int j = 0; j < total; ++j) {
    const double dj = d_[j];
    switch (st_[j]) {
      case VarStatus::AtLower:
        if (dj < -opt_.dual_tol && !fixed(wlo_[j], whi_[j])) {
          st_[j] = VarStatus::AtUpper;
          moved = true;
        }
        break;
      case VarStatus::AtUpper:
        if (dj > opt_.dual_tol && !fixed(wlo_[j], whi_[j])) {
          st_[j] = VarStatus::AtLower;
          moved = true;
        }
        break;
      case VarStatus::AtZero:
        if (std::abs(dj) > opt_.dual_tol) {
          st_[j] = dj > 0.0 ? VarStatus::AtLower : VarStatus::AtUpper;
          moved = true;
        }
        break;
      case VarStatus::Basic: break;
    }
  }
  if (moved) compute_primal();
  return moved;
}

// Grows the artificial box; returns false once the box is at its limit.
bool DualSimplex::expand_artificial_box() {
  if (box_ >= kBoxLimit) return false;
  box_ *= kBoxGrowth;
  const int total = n_ + m_;
  for (int j = 0; j < total; ++j) {
    if (!std::isfinite(lo_[j])) wlo_[j] = -box_;
    if (!std::isfinite(hi_[j])) whi_[j] = box_;
  }
  compute_primal();
  return true;
}

// Nonbasics parked on an artificial bound with zero reduced cost do not
// affect the objective; move them to a genuine position. Returns true when
// anything moved.
bool DualSimplex::release_idle_artificials() {
  bool moved = false;
  const int total = n_ + m_;
  for (int j = 0; j < total; ++j) {
    if (st_[j] == VarStatus::AtLower && !std::isfinite(lo_[j]) &&
        std::abs(d_[j]) <= opt_.dual_tol) {
      st_[j] = std::isfinite(hi_[j]) ? VarStatus::AtUpper : VarStatus::AtZero;
      moved = true;
    } else if (st_[j] == VarStatus::AtUpper && !std::isfinite(hi_[j]) &&
               std::abs(d_[j]) <= opt_.dual_tol) {
      st_[j] = std::isfinite(lo_[j]) ? VarStatus::AtLower : VarStatus::AtZero;
      moved = true;
    }
  }
  if (moved) compute_primal();
  return moved;
}

double DualSimplex::infeasibility(int var) const {
  const double v = x_[var];
  const double lo = wlo_[var];
  const double hi = whi_[var];
  if (v < lo - opt_.primal_tol * (1.0 + std::abs(lo))) return v - lo;
  if (v > hi + opt_.primal_tol * (1.0 + std::abs(hi))) return v - hi;
  return 0.0;
}

LpSolution DualSimplex::solve(const Basis* warm) {
  reset_working_bounds();
  const int total = n_ + m_;
  x_ = Eigen::VectorXd::Zero(total);
  d_ = Eigen::VectorXd::Zero(total);
  if (warm != nullptr && !warm->empty() && load(*warm)) {
    try {
      refactor();
      return run();
    } catch (const NumericalError&) {
      // fall through to a cold start
    }
    reset_working_bounds();
    x_.setZero();
    d_.setZero();
  }
  cold_start();
  refactor();
  return run();
}

LpSolution DualSimplex::run() {
  const int total = n_ + m_;
  compute_primal();
  compute_duals();
  restore_dual_feasibility();

  Eigen::VectorXd rho(m_), aq(m_), tau(m_);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(total);
  std::vector<int> cand;
  cand.reserve(total);

  long iter = 0;
  int degenerate_run = 0;
  int clean_refactors = 0;
  bool bland = false;

  while (true) {
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      refactor();
      compute_primal();
      compute_duals();
      restore_dual_feasibility();
    }

    // Pricing: dual steepest edge, or smallest basic index in Bland mode.
    int r = -1;
    double best = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double inf = infeasibility(head_[i]);
      if (inf == 0.0) continue;
      if (bland) {
        if (r < 0 || head_[i] < head_[r]) r = i;
      } else {
        const double score = inf * inf / w_[i];
        if (score > best) {
          best = score;
          r = i;
        }
      }
    }

    if (r < 0) {
      // Primal feasible under the working box. Confirm on a fresh
      // factorization before accepting.
      if (!etas_.empty() && clean_refactors < 3) {
        ++clean_refactors;
        refactor();
        compute_primal();
        compute_duals();
        restore_dual_feasibility();
        continue;
      }
      clean_refactors = 0;
      if (release_idle_artificials()) continue;
      bool on_box = false;
      for (int j = 0; j < total && !on_box; ++j) {
        on_box = (st_[j] == VarStatus::AtLower && !std::isfinite(lo_[j])) ||
                 (st_[j] == VarStatus::AtUpper && !std::isfinite(hi_[j]));
      }
      if (!on_box) return extract(LpStatus::Optimal, iter);
      if (!expand_artificial_box()) return extract(LpStatus::Unbounded, iter);
      continue;
    }
    clean_refactors = 0;

    if (iter >= opt_.max_iterations) return extract(LpStatus::IterationLimit, iter);
    ++iter;

    const int p = head_[r];
    const double delta = infeasibility(p);
    const double sgn = delta > 0.0 ? 1.0 : -1.0;

    rho.setZero();
    rho[r] = 1.0;
    btran(rho);

    // Ratio test over the pivot row.
    cand.clear();
    for (int j = 0; j < total; ++j) {
      const VarStatus s = st_[j];
      if (s == VarStatus::Basic || fixed(wlo_[j], whi_[j])) continue;
      const double a = sgn * dot_column(j, rho);
      alpha[j] = a;
      if (std::abs(a) <= opt_.pivot_tol) continue;
      if ((s == VarStatus::AtLower && a > 0.0) || (s == VarStatus::AtUpper && a < 0.0) ||
          s == VarStatus::AtZero) {
        cand.push_back(j);
      }
    }

    int q = -1;
    if (!cand.empty()) {
      if (bland) {
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int j : cand) {
          const double num = std::max(0.0, alpha[j] > 0.0 ? d_[j] : -d_[j]);
          const double ratio = num / std::abs(alpha[j]);
          if (ratio < best_ratio - 1e-12) {
            best_ratio = ratio;
            q = j;
          }
        }
      } else {
        double bound = std::numeric_limits<double>::infinity();
        for (int j : cand) {
          const double num = alpha[j] > 0.0 ? d_[j] : -d_[j];
          bound = std::min(bound, (num + opt_.dual_tol) / std::abs(alpha[j]));
        }
        double best_pivot = 0.0;
        for (int j : cand) {
          const double num = alpha[j] > 0.0 ? d_[j] : -d_[j];
          if (num / std::abs(alpha[j]) <= bound && std::abs(alpha[j]) > best_pivot) {
            best_pivot = std::abs(alpha[j]);
            q = j;
          }
        }
      }
    }

    if (q < 0) {
      // Dual unbounded. Genuine unless a nonbasic resting on the artificial
      // box could have moved the row further.
      bool box_blocked = false;
      for (int j = 0; j < total && !box_blocked; ++j) {
        if (st_[j] == VarStatus::Basic || std::abs(alpha[j]) <= opt_.pivot_tol) continue;
        if (fixed(wlo_[j], whi_[j])) continue;
        box_blocked = (st_[j] == VarStatus::AtLower && !std::isfinite(lo_[j])) ||
                      (st_[j] == VarStatus::AtUpper && !std::isfinite(hi_[j]));
      }
      if (!std::isfinite(lo_[p]) || !std::isfinite(hi_[p])) {
        box_blocked = box_blocked || std::abs(x_[p]) >= box_ * (1 - 1e-12);
      }
      if (box_blocked && expand_artificial_box()) continue;
      if (!etas_.empty()) {
        refactor();
        compute_primal();
        compute_duals();
        restore_dual_feasibility();
        continue;
      }
      return extract(LpStatus::Infeasible, iter);
    }

    load_column(q, aq);
    ftran(aq);
    const double piv = aq[r];
    if (std::abs(piv - sgn * alpha[q]) > 1e-7 * (1.0 + std::abs(piv)) ||
        std::abs(piv) <= opt_.pivot_tol) {
      if (!etas_.empty()) {
        refactor();
        compute_primal();
        compute_duals();
        restore_dual_feasibility();
        continue;
      }
      if (std::abs(piv) <= opt_.pivot_tol) {
        throw NumericalError("pivot element vanished on a fresh factorization");
      }
    }

    // Dual update.
    const double num_q = alpha[q] > 0.0 ? d_[q] : -d_[q];
    const double theta_d = std::max(0.0, num_q) / std::abs(alpha[q]);
    if (theta_d != 0.0) {
      for (int j = 0; j < total; ++j) {
        if (st_[j] != VarStatus::Basic && !fixed(wlo_[j], whi_[j])) d_[j] -= theta_d * alpha[j];
      }
    }
    d_[q] = 0.0;
    d_[p] = -sgn * theta_d;

    // Steepest-edge weights.
    const double wr = rho.squaredNorm();
    tau = rho;
    ftran(tau);
    for (int i = 0; i < m_; ++i) {
      if (i == r || aq[i] == 0.0) continue;
      const double ratio = aq[i] / piv;
      w_[i] = std::max(w_[i] - 2.0 * ratio * tau[i] + ratio * ratio * wr, ratio * ratio);
      w_[i] = std::max(w_[i], 1e-8);
    }
    w_[r] = std::max(wr / (piv * piv), 1e-8);

    // Primal update.
    const double theta_p = delta / piv;
    for (int i = 0; i < m_; ++i) {
      if (aq[i] != 0.0) x_[head_[i]] -= theta_p * aq[i];
    }
    x_[q] += theta_p;
    if (delta > 0.0) {
      st_[p] = VarStatus::AtUpper;
      x_[p] = whi_[p];
    } else {
      st_[p] = VarStatus::AtLower;
      x_[p] = wlo_[p];
    }
    head_[r] = q;
    pos_[q] = r;
    pos_[p] = -1;
    st_[q] = VarStatus::Basic;

    Eta eta{r, piv, {}, {}};
    for (int i = 0; i < m_; ++i) {
      if (i != r && aq[i] != 0.0) {
        eta.index.push_back(i);
        eta.value.push_back(aq[i]);
      }
    }
    etas_.push_back(std::move(eta));

    const double progress = theta_d * std::abs(delta);
    if (progress <= 1e-12) {
      if (++degenerate_run >= kDegenerateRunBeforeBland) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
  }
}

LpSolution DualSimplex::extract(LpStatus status, long iterations) const {
  LpSolution sol;
  sol.status = status;
  sol.iterations = iterations;
  sol.x = x_.head(n_);
  sol.row_activity = x_.tail(m_);
  sol.reduced_costs = d_.head(n_);
  sol.row_duals = d_.tail(m_);
  sol.objective = lp_.cost.dot(sol.x) + lp_.offset;
  sol.basis.head = head_;
  sol.basis.status = st_;
  sol.basis.weights.assign(w_.data(), w_.data() + w_.size());
  if (status == LpStatus::Optimal) {
    // Logicals that are basic carry a zero dual by construction.
    Eigen::VectorXd y(m_);
    for (int r = 0; r < m_; ++r) y[r] = cost_[head_[r]];
    btran(y);
    sol.row_duals = y;
    for (int j = 0; j < n_; ++j) {
      sol.reduced_costs[j] = st_[j] == VarStatus::Basic ? 0.0 : cost_[j] - dot_column(j, y);
    }
  }
  return sol;
}

LpSolution solve_lp(const LpData& lp, const LpOptions& options) {
  DualSimplex simplex(lp, options);
  return simplex.solve();
}

LpSolution solve_lp(const MilpModel& model, const LpOptions& options) {
  model.validate();
  return solve_lp(relax(model), options);
}

double dual_objective(const LpData& lp, const LpSolution& sol) {
  double obj = lp.offset;
  // A multiplier pushing against an infinite bound makes the dual
  // infeasible; round-off sized ones are dropped.
  constexpr double kNegligible = 1e-12;
  auto term = [](double mult, double lo, double hi) {
    if (std::abs(mult) <= kNegligible) return 0.0;
    const double bound = mult > 0.0 ? lo : hi;
    return std::isfinite(bound) ? mult * bound : -std::numeric_limits<double>::infinity();
  };
  for (int i = 0; i < lp.rows(); ++i) obj += term(sol.row_duals[i], lp.row_lo[i], lp.row_hi[i]);
  for (int j = 0; j < lp.cols(); ++j) obj += term(sol.reduced_costs[j], lp.col_lo[j], lp.col_hi[j]);
  return obj;
}

}  // namespace ucnn::milp
