#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ucnn/branch_and_bound.hpp"
#include "ucnn/error.hpp"
#include "ucnn/lp_solver.hpp"
#include "ucnn/milp_model.hpp"
#include "ucnn/mps.hpp"

using namespace ucnn::milp;

namespace {

// Random feasible, bounded LP: rows built around a known interior point.
MilpModel random_lp(std::mt19937_64& rng, int n, int m, bool integral = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 3);
  MilpModel model;
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const double lo = std::floor(u(rng) * 3.0);
    const double hi = lo + 1.0 + std::floor((u(rng) + 1.0) * 3.0);
    const int kind = pick(rng);
    double l = lo, h = hi;
    if (kind == 0) l = -kInf;
    if (kind == 1 && !integral) h = kInf;
    if (kind == 0 && integral) l = lo;
    model.add_variable("x" + std::to_string(j), integral ? VarKind::Integer : VarKind::Continuous, l, h,
                       std::round(u(rng) * 10.0));
    x0[j] = std::round(0.5 * (lo + hi));
  }
  for (int i = 0; i < m; ++i) {
    std::vector<Term> terms;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      if (pick(rng) == 0) continue;
      const double a = std::round(u(rng) * 5.0);
      if (a == 0.0) continue;
      terms.emplace_back(j, a);
      act += a * x0[j];
    }
    const int s = pick(rng);
    if (s == 0) {
      model.add_constraint("r" + std::to_string(i), Sense::Equal, act, std::span<const Term>(terms));
    } else if (s == 1) {
      model.add_constraint("r" + std::to_string(i), Sense::GreaterEqual, act - 2.0, std::span<const Term>(terms));
    } else {
      model.add_constraint("r" + std::to_string(i), Sense::LessEqual, act + 2.0, std::span<const Term>(terms));
    }
  }
  // Bound the objective with a box on the free directions.
  std::vector<Term> all;
  for (int j = 0; j < n; ++j) all.emplace_back(j, 1.0);
  model.add_constraint("box_hi", Sense::LessEqual, 50.0, std::span<const Term>(all));
  model.add_constraint("box_lo", Sense::GreaterEqual, -50.0, std::span<const Term>(all));
  return model;
}

// Enumerates every integer point of a small bounded pure-integer model.
double enumerate_optimum(const MilpModel& model) {
  const int n = model.num_variables();
  std::vector<double> x(n);
  double best = kInf;
  std::function<void(int)> rec = [&](int j) {
    if (j == n) {
      if (model.max_violation(x) <= 1e-9) best = std::min(best, model.objective_value(x));
      return;
    }
    for (double v = model.variable(j).lower; v <= model.variable(j).upper; v += 1.0) {
      x[j] = v;
      rec(j + 1);
    }
  };
  rec(0);
  return best;
}

}  // namespace

TEST_CASE("single-variable LP hits its bound") {
  MilpModel m;
  m.add_variable("x", VarKind::Continuous, 1.0, 4.0, -2.0);
  auto sol = solve_lp(m);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(4.0));
  CHECK(sol.objective == doctest::Approx(-8.0));
}

TEST_CASE("degenerate transportation problem matches the hand solution") {
  // Supplies 10, 10; demands 10, 10; costs [[1,3],[2,1]]. Optimum ships the
  // diagonal for a cost of 20; the basis is degenerate.
  MilpModel m;
  const double c[2][2] = {{1, 3}, {2, 1}};
  int x[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) x[i][j] = m.add_variable("x", VarKind::Continuous, 0, kInf, c[i][j]);
  for (int i = 0; i < 2; ++i) m.add_constraint("s", Sense::LessEqual, 10, {{x[i][0], 1}, {x[i][1], 1}});
  for (int j = 0; j < 2; ++j) m.add_constraint("d", Sense::GreaterEqual, 10, {{x[0][j], 1}, {x[1][j], 1}});
  auto sol = solve_lp(m);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(20.0));
  CHECK(sol.x[x[0][0]] == doctest::Approx(10.0));
  CHECK(sol.x[x[1][1]] == doctest::Approx(10.0));
  CHECK(dual_objective(relax(m), sol) == doctest::Approx(20.0));
}

TEST_CASE("contradictory rows are infeasible") {
  MilpModel m;
  const int a = m.add_variable("a", VarKind::Continuous, 0, kInf, 1);
  const int b = m.add_variable("b", VarKind::Continuous, 0, kInf, 1);
  m.add_constraint("lo", Sense::GreaterEqual, 5, {{a, 1}, {b, 1}});
  m.add_constraint("hi", Sense::LessEqual, 3, {{a, 1}, {b, 1}});
  CHECK(solve_lp(m).status == LpStatus::Infeasible);
  CHECK(solve_lp_dense(relax(m)).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded LP is reported") {
  MilpModel m;
  const int a = m.add_variable("a", VarKind::Continuous, 0, kInf, -1);
  const int b = m.add_variable("b", VarKind::Continuous, 0, kInf, 0);
  m.add_constraint("r", Sense::GreaterEqual, 1, {{a, 1}, {b, -1}});
  CHECK(solve_lp(m).status == LpStatus::Unbounded);
}

TEST_CASE("revised and dense simplex agree on random LPs") {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto model = random_lp(rng, 6 + trial % 7, 4 + trial % 6);
    const LpData lp = relax(model);
    const auto dense = solve_lp_dense(lp);
    const auto sparse = solve_lp(lp);
    INFO("trial " << trial);
    REQUIRE(dense.status == sparse.status);
    if (dense.status != LpStatus::Optimal) continue;
    ++checked;
    CHECK(sparse.objective == doctest::Approx(dense.objective).epsilon(1e-7));
    std::vector<double> x(sparse.x.data(), sparse.x.data() + sparse.x.size());
    CHECK(model.max_violation(x) <= 1e-7);
    // Strong duality at the optimum; weak duality always.
    CHECK(dual_objective(lp, sparse) == doctest::Approx(sparse.objective).epsilon(1e-7));
  }
  CHECK(checked >= 30);
}

TEST_CASE("warm start from the optimal basis takes no pivots") {
  std::mt19937_64 rng(11);
  const auto model = random_lp(rng, 10, 8);
  DualSimplex simplex(relax(model));
  auto first = simplex.solve();
  REQUIRE(first.status == LpStatus::Optimal);
  auto again = simplex.solve(&first.basis);
  CHECK(again.status == LpStatus::Optimal);
  CHECK(again.iterations == 0);
  CHECK(again.objective == doctest::Approx(first.objective));
}

TEST_CASE("integral root needs no branching") {
  MilpModel m;
  const int a = m.add_variable("a", VarKind::Binary, 0, 1, -1);
  const int b = m.add_variable("b", VarKind::Binary, 0, 1, -1);
  m.add_constraint("r", Sense::LessEqual, 1, {{a, 1}, {b, 1}});
  auto r = solve_milp(m);
  REQUIRE(r.status == MilpStatus::Optimal);
  CHECK(r.branches == 0);
  CHECK(r.objective == doctest::Approx(-1.0));
}

TEST_CASE("toy knapsack with hand-enumerated optimum 11") {
  // Weights 4, 3, 2; values 6, 5, 3; capacity 7. Feasible subsets: {0,1}=11,
  // {0,2}=9, {1,2}=8, singletons <= 6; all three weigh 9.
  MilpModel m;
  m.add_variable("a", VarKind::Binary, 0, 1, -6);
  m.add_variable("b", VarKind::Binary, 0, 1, -5);
  m.add_variable("c", VarKind::Binary, 0, 1, -3);
  m.add_constraint("cap", Sense::LessEqual, 7, {{0, 4.0}, {1, 3.0}, {2, 2.0}});
  const auto r = solve_milp(m);
  REQUIRE(r.status == MilpStatus::Optimal);
  CHECK(-r.objective == doctest::Approx(11.0));
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[1] == doctest::Approx(1.0));
  CHECK(r.x[2] == doctest::Approx(0.0));
}

TEST_CASE("knapsack optimum") {
  // Capacity 9.
  MilpModel m;
  const double w[] = {5, 4, 3, 2};
  const double v[] = {6, 7, 4, 1};
  std::vector<Term> row;
  for (int j = 0; j < 4; ++j) {
    m.add_variable("k" + std::to_string(j), VarKind::Binary, 0, 1, -v[j]);
    row.emplace_back(j, w[j]);
  }
  m.add_constraint("cap", Sense::LessEqual, 9, std::span<const Term>(row));
  BnbParams p;
  p.keep_trace = true;
  auto r = solve_milp(m, p);
  REQUIRE(r.status == MilpStatus::Optimal);
  // Brute force: {0,1}=13 (w9), {1,2,3}=12 (w9), {0,2}=10, ... -> 13.
  CHECK(r.objective == doctest::Approx(-13.0));
  CHECK(r.gap <= 1e-6);
  CHECK(enumerate_optimum(m) == doctest::Approx(-13.0));
  // Bound never decreases; incumbent never increases.
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].incumbent <= r.trace[i - 1].incumbent);
    CHECK(r.trace[i].lower_bound >= r.trace[i - 1].lower_bound - 1e-9);
  }
}

TEST_CASE("branch and bound matches enumeration on random integer programs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    auto model = random_lp(rng, 5, 4, true);
    const double brute = enumerate_optimum(model);
    auto r = solve_milp(model);
    INFO("trial " << trial);
    if (!std::isfinite(brute)) {
      CHECK(r.status == MilpStatus::Infeasible);
      continue;
    }
    REQUIRE(r.status == MilpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(brute).epsilon(1e-7));
    std::vector<double> x(r.x.data(), r.x.data() + r.x.size());
    CHECK(model.max_violation(x) <= 1e-7);
    CHECK(r.bound <= r.objective + 1e-9);
  }
}

TEST_CASE("infeasible integer program") {
  MilpModel m;
  const int a = m.add_variable("a", VarKind::Integer, 0, 10, 1);
  m.add_constraint("r1", Sense::GreaterEqual, 1.2, {{a, 2}});
  m.add_constraint("r2", Sense::LessEqual, 1.8, {{a, 2}});
  CHECK(solve_milp(m).status == MilpStatus::Infeasible);
}

TEST_CASE("node limit yields an honest status") {
  std::mt19937_64 rng(5);
  auto model = random_lp(rng, 8, 6, true);
  BnbParams p;
  p.node_limit = 1;
  auto r = solve_milp(model, p);
  CHECK((r.status == MilpStatus::NoIncumbent || r.status == MilpStatus::GapLimited ||
         r.status == MilpStatus::Optimal || r.status == MilpStatus::Infeasible));
  if (r.has_solution()) CHECK(r.bound <= r.objective + 1e-9);
}

TEST_CASE("MPS round trip preserves the model") {
  std::mt19937_64 rng(3);
  auto model = random_lp(rng, 7, 5, false);
  model.add_variable("bin", VarKind::Binary, 0, 1, 2.5);
  model.add_variable("fixed", VarKind::Continuous, 1.25, 1.25, 0.0);
  model.add_variable("int", VarKind::Integer, -3, 4, 1.0);
  model.set_objective_offset(12.5);
  std::stringstream ss;
  write_mps(model, ss);
  auto back = read_mps(ss);
  REQUIRE(back.num_variables() == model.num_variables());
  REQUIRE(back.num_constraints() == model.num_constraints());
  CHECK(back.objective_offset() == doctest::Approx(12.5));
  for (int j = 0; j < model.num_variables(); ++j) {
    CHECK(back.variable(j).kind == model.variable(j).kind);
    CHECK(back.variable(j).lower == model.variable(j).lower);
    CHECK(back.variable(j).upper == model.variable(j).upper);
    CHECK(back.costs()[j] == model.costs()[j]);
  }
  CHECK(solve_milp(back).objective == doctest::Approx(solve_milp(model).objective));
}

TEST_CASE("MPS single-variable document") {
  std::istringstream in(
      "NAME          ONE\n"
      "ROWS\n"
      " N  COST\n"
      " L  LIM\n"
      "COLUMNS\n"
      "    X         COST      -1.0   LIM       1.0\n"
      "RHS\n"
      "    RHS       LIM       3.5\n"
      "BOUNDS\n"
      " UP BND       X         10\n"
      "ENDATA\n");
  auto m = read_mps(in);
  REQUIRE(m.num_variables() == 1);
  CHECK(solve_lp(m).objective == doctest::Approx(-3.5));
}

TEST_CASE("MPS reader rejects RANGES and garbage") {
  std::istringstream ranges("NAME X\nROWS\n N  COST\nRANGES\nENDATA\n");
  CHECK_THROWS_AS(read_mps(ranges), ucnn::SchemaError);
  std::istringstream bad("NAME X\nROWS\n N  COST\n L  R\nCOLUMNS\n    X  R  abc\nENDATA\n");
  CHECK_THROWS_AS(read_mps(bad), ucnn::SchemaError);
}

TEST_CASE("solution import") {
  MilpModel m;
  m.add_variable("u", VarKind::Binary, 0, 1);
  m.add_variable("p", VarKind::Continuous, 0, 10);
  std::istringstream ok("# comment\nu 1\n");
  auto x = import_solution(ok, m);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == 0.0);
  std::istringstream positional("C0000000 1\nC0000001 2.5\n");
  CHECK(import_solution(positional, m)[1] == 2.5);
  std::istringstream missing("p 3\n");
  CHECK_THROWS_AS(import_solution(missing, m), ucnn::SchemaError);
  std::istringstream unknown("u 1\nq 2\n");
  CHECK_THROWS_AS(import_solution(unknown, m), ucnn::SchemaError);
}
