#include "ucnn/uc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "ucnn/error.hpp"
#include "ucnn/network.hpp"

namespace ucnn::uc {

using grid::GeneratorSpec;
using grid::GridCase;
using milp::Sense;
using milp::Term;
using milp::VarKind;
using milp::VarTag;
using sampling::UcInput;

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::GapLimited: return "gap-limited";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Failed: return "failed";
  }
  return "failed";
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::Optimal;
  if (s == "gap-limited") return SolveStatus::GapLimited;
  if (s == "infeasible") return SolveStatus::Infeasible;
  if (s == "failed") return SolveStatus::Failed;
  throw SchemaError("unknown solve status '" + s + "'");
}

const char* to_string(Family f) {
  switch (f) {
    case Family::Balance: return "balance";
    case Family::FlowLimit: return "flow-limit";
    case Family::AngleLimit: return "angle-limit";
    case Family::ReferenceAngle: return "reference-angle";
    case Family::GenerationLimit: return "generation-limit";
    case Family::Curtailment: return "curtailment";
    case Family::Shedding: return "shedding";
    case Family::MinUp: return "min-up";
    case Family::MinDown: return "min-down";
    case Family::Ramp: return "ramp";
    case Family::Integrality: return "integrality";
  }
  return "unknown";
}

namespace {

// Commitment before the horizon (hour < 0). A unit that started the day off
// for H hours was on before that.
double alpha_before(const GeneratorSpec& g, int hour) {
  if (g.initially_on) return 1.0;
  return hour >= -g.initial_hours ? 0.0 : 1.0;
}

void check_shapes(const GridCase& grid, const UcInput& x, int hours) {
  if (hours < 1) throw PreconditionError("horizon must be at least one hour");
  if (x.demand.rows() < hours || x.wind.rows() < hours) {
    throw ValidationError("input covers fewer hours than the horizon");
  }
  if (x.demand.cols() != grid.num_buses()) throw ValidationError("demand columns do not match the bus count");
  if (x.wind.cols() != grid.num_wind()) throw ValidationError("wind columns do not match the wind unit count");
  if (static_cast<int>(x.top.size()) != grid.num_lines()) {
    throw ValidationError("topology length does not match the line count");
  }
}

std::string tag(const char* role, int a, int t) {
  return std::string(role) + "_" + std::to_string(a + 1) + "_t" + std::to_string(t + 1);
}

std::string tag(const char* role, int a, int b, int t) {
  return std::string(role) + "_" + std::to_string(a + 1) + "_" + std::to_string(b + 1) + "_t" + std::to_string(t + 1);
}

}  // namespace

std::vector<int> contingency_lines(const GridCase& grid, const UcInput& x, const UcOptions& opts) {
  if (!opts.n1_enabled) return {};
  const auto set = grid::enumerate_contingencies(grid, x.top);
  if (!opts.contingencies) return set.lines;
  std::vector<int> out;
  for (int id : *opts.contingencies) {
    if (std::find(set.lines.begin(), set.lines.end(), id) != set.lines.end()) out.push_back(id);
  }
  return out;
}

UcModel build_milp(const GridCase& grid, const UcInput& x, const UcOptions& opts) {
  const int T = opts.horizon;
  check_shapes(grid, x, T);
  if (grid::count_components(grid, x.top) > 1) {
    throw ValidationError("base topology islands the network; no balance is possible");
  }

  const int ng = grid.num_generators();
  const int nb = grid.num_buses();
  const int nw = grid.num_wind();
  UcModel out;
  auto& m = out.model;
  auto& L = out.layout;
  m.set_name("UC");
  L.hours = T;
  L.commit = Eigen::MatrixXi::Constant(ng, T, -1);
  L.start = L.commit;
  L.output = L.commit;
  L.start_extra = L.commit;
  L.segment.resize(ng);
  auto role = [](Role r, int entity, int sub, int hour) {
    return VarTag{static_cast<std::int16_t>(r), entity, sub, hour};
  };

  // ---- generators ----
  for (int g = 0; g < ng; ++g) {
    const auto& gen = grid.generators[g];
    const auto& curve = gen.cost_curve;
    const int nseg = static_cast<int>(curve.size()) - 1;
    const double su_base = gen.startup.front().cost;
    const double su_top = gen.startup.back().cost;
    L.segment[g] = Eigen::MatrixXi::Constant(nseg, T, -1);

    for (int t = 0; t < T; ++t) {
      double lo = 0.0, hi = 1.0;
      if (gen.initially_on && t < gen.min_up - gen.initial_hours) lo = 1.0;
      if (!gen.initially_on && t < gen.min_down - gen.initial_hours) hi = 0.0;
      L.commit(g, t) = m.add_variable(tag("alpha", g, t), VarKind::Binary, lo, hi, curve.front().cost,
                                      role(Role::Commit, g, -1, t));
    }
    for (int t = 0; t < T; ++t) {
      double hi = 1.0;
      // Start right after an on hour is impossible; an initially-on unit also
      // cannot restart before its minimum down time has passed.
      if (t == 0 && alpha_before(gen, -1) > 0.5) hi = 0.0;
      if (gen.initially_on && t < gen.min_down) hi = 0.0;
      L.start(g, t) = m.add_variable(tag("start", g, t), VarKind::Binary, 0.0, hi, su_base,
                                     role(Role::Start, g, -1, t));
    }
    for (int t = 0; t < T; ++t) {
      L.output(g, t) = m.add_variable(tag("p", g, t), VarKind::Continuous, 0.0, gen.p_max, 0.0,
                                      role(Role::Output, g, -1, t));
      for (int k = 0; k < nseg; ++k) {
        const double width = curve[k + 1].mw - curve[k].mw;
        const double slope = (curve[k + 1].cost - curve[k].cost) / width;
        L.segment[g](k, t) = m.add_variable(tag("seg", g, k, t), VarKind::Continuous, 0.0, width, slope,
                                            role(Role::Segment, g, k, t));
      }
      if (su_top > su_base) {
        L.start_extra(g, t) = m.add_variable(tag("suc", g, t), VarKind::Continuous, 0.0, su_top - su_base, 1.0,
                                             role(Role::StartExtra, g, -1, t));
      }
    }

    for (int t = 0; t < T; ++t) {
      const int a = L.commit(g, t);
      const int s = L.start(g, t);
      // start = alpha_t (1 - alpha_{t-1}), exact for binaries.
      if (t == 0) {
        const double prev = alpha_before(gen, -1);
        m.add_constraint(tag("st_on", g, t), Sense::GreaterEqual, -prev, {{s, 1.0}, {a, -1.0}});
        m.add_constraint(tag("st_up", g, t), Sense::LessEqual, 0.0, {{s, 1.0}, {a, -1.0}});
      } else {
        const int ap = L.commit(g, t - 1);
        m.add_constraint(tag("st_on", g, t), Sense::GreaterEqual, 0.0, {{s, 1.0}, {a, -1.0}, {ap, 1.0}});
        m.add_constraint(tag("st_up", g, t), Sense::LessEqual, 0.0, {{s, 1.0}, {a, -1.0}});
        m.add_constraint(tag("st_prev", g, t), Sense::LessEqual, 1.0, {{s, 1.0}, {ap, 1.0}});
      }

      // P = p_min alpha + sum(segments), segment_k <= width_k alpha.
      std::vector<Term> def{{L.output(g, t), 1.0}, {a, -gen.p_min}};
      for (int k = 0; k < nseg; ++k) {
        const int sv = L.segment[g](k, t);
        def.emplace_back(sv, -1.0);
        m.add_constraint(tag("seg_on", g, k, t), Sense::LessEqual, 0.0,
                         {{sv, 1.0}, {a, -(curve[k + 1].mw - curve[k].mw)}});
      }
      m.add_constraint(tag("pdef", g, t), Sense::Equal, 0.0, def);

      // Startup steps: extra >= (c_k - c_1)(start_t - sum_{n=1..h_k} alpha_{t-n}).
      if (L.start_extra(g, t) >= 0) {
        for (std::size_t k = 1; k < gen.startup.size(); ++k) {
          const double delta = gen.startup[k].cost - su_base;
          if (delta <= 0.0) continue;
          double pre = 0.0;
          std::vector<Term> row{{L.start_extra(g, t), 1.0}, {s, -delta}};
          for (int n = 1; n <= gen.startup[k].hours_off; ++n) {
            if (t - n >= 0) {
              row.emplace_back(L.commit(g, t - n), delta);
            } else {
              pre += alpha_before(gen, t - n);
            }
          }
          if (pre > 0.5) continue;  // the unit was on inside the window
          m.add_constraint(tag("su", g, static_cast<int>(k), t), Sense::GreaterEqual, 0.0, row);
        }
      }

      // Minimum up time: a start inside the last UT hours keeps the unit on.
      if (gen.min_up > 1) {
        std::vector<Term> row{{a, -1.0}};
        for (int tau = std::max(0, t - gen.min_up + 1); tau <= t; ++tau) row.emplace_back(L.start(g, tau), 1.0);
        m.add_constraint(tag("minup", g, t), Sense::LessEqual, 0.0, row);
      }
    }

    // Minimum down time: on at hour s forbids starts in (s, s + DT].
    if (gen.min_down > 1) {
      for (int s = 0; s + 1 < T; ++s) {
        std::vector<Term> row{{L.commit(g, s), 1.0}};
        for (int tau = s + 1; tau <= std::min(s + gen.min_down, T - 1); ++tau) row.emplace_back(L.start(g, tau), 1.0);
        m.add_constraint(tag("mindn", g, s), Sense::LessEqual, 1.0, row);
      }
    }

    // Ramps with start-up / shut-down allowances of max(ramp, p_min).
    if (opts.ramps) {
      const double p0 = gen.initial_output.value_or(0.0);
      const bool has_p0 = gen.initial_output.has_value();
      if (gen.ramp_up < gen.p_max) {
        const double su_ramp = std::max(gen.ramp_up, gen.p_min);
        for (int t = 0; t < T; ++t) {
          if (t == 0) {
            if (!has_p0) continue;
            m.add_constraint(tag("rup", g, t), Sense::LessEqual, p0 + gen.ramp_up * alpha_before(gen, -1),
                             {{L.output(g, t), 1.0}, {L.start(g, t), -su_ramp}});
          } else {
            m.add_constraint(tag("rup", g, t), Sense::LessEqual, 0.0,
                             {{L.output(g, t), 1.0},
                              {L.output(g, t - 1), -1.0},
                              {L.commit(g, t - 1), -gen.ramp_up},
                              {L.start(g, t), -su_ramp}});
          }
        }
      }
      if (gen.ramp_down < gen.p_max) {
        const double sd_ramp = std::max(gen.ramp_down, gen.p_min);
        for (int t = 0; t < T; ++t) {
          // P_{t-1} - P_t <= RD alpha_t + SD (alpha_{t-1} - alpha_t + start_t)
          if (t == 0) {
            if (!has_p0) continue;
            m.add_constraint(tag("rdn", g, t), Sense::LessEqual, -p0 + sd_ramp * alpha_before(gen, -1),
                             {{L.output(g, t), -1.0},
                              {L.commit(g, t), sd_ramp - gen.ramp_down},
                              {L.start(g, t), -sd_ramp}});
          } else {
            m.add_constraint(tag("rdn", g, t), Sense::LessEqual, 0.0,
                             {{L.output(g, t - 1), 1.0},
                              {L.output(g, t), -1.0},
                              {L.commit(g, t), sd_ramp - gen.ramp_down},
                              {L.commit(g, t - 1), -sd_ramp},
                              {L.start(g, t), -sd_ramp}});
          }
        }
      }
    }
  }

  // ---- shedding and curtailment, shared by every block ----
  L.shed = Eigen::MatrixXi::Constant(nb, T, -1);
  L.curtail = Eigen::MatrixXi::Constant(nw, T, -1);
  for (int t = 0; t < T; ++t) {
    for (int b = 0; b < nb; ++b) {
      L.shed(b, t) = m.add_variable(tag("ls", b, t), VarKind::Continuous, 0.0, x.demand(t, b), grid.voll,
                                    role(Role::Shed, b, -1, t));
    }
    for (int w = 0; w < nw; ++w) {
      L.curtail(w, t) = m.add_variable(tag("wc", w, t), VarKind::Continuous, 0.0, x.wind(t, w),
                                       grid.wind_curtailment_price, role(Role::Curtail, w, -1, t));
    }
  }

  // ---- network blocks: base case plus one per contingency ----
  L.blocks.push_back(-1);
  for (int id : contingency_lines(grid, x, opts)) L.blocks.push_back(id);
  const double pi = std::numbers::pi;
  for (int c = 0; c < static_cast<int>(L.blocks.size()); ++c) {
    const auto net = grid::build_effective_network(
        grid, x.top, L.blocks[c] < 0 ? std::nullopt : std::optional<int>(L.blocks[c]));
    Eigen::MatrixXi th = Eigen::MatrixXi::Constant(nb, T, -1);
    for (int t = 0; t < T; ++t) {
      for (int b = 0; b < nb; ++b) {
        const auto& bus = grid.buses[b];
        const double lo = bus.reference ? bus.ref_angle : -pi;
        const double hi = bus.reference ? bus.ref_angle : pi;
        th(b, t) = m.add_variable(tag("th", c, b, t), VarKind::Continuous, lo, hi, 0.0, role(Role::Theta, b, c, t));
      }
    }
    // Row terms per bus from the sparse matrices.
    std::vector<std::vector<Term>> bus_terms(nb);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> bbus = net.bbus;
    const Eigen::SparseMatrix<double, Eigen::RowMajor> bf = net.bf;
    for (int t = 0; t < T; ++t) {
      for (int b = 0; b < nb; ++b) {
        std::vector<Term> row;
        for (decltype(bbus)::InnerIterator it(bbus, b); it; ++it) row.emplace_back(th(it.col(), t), it.value());
        row.emplace_back(L.shed(b, t), -1.0);
        double rhs = -x.demand(t, b) - grid.buses[b].shunt_mw - net.pbus_shift[b];
        for (int w = 0; w < nw; ++w) {
          if (grid.bus_index(grid.wind[w].bus) != b) continue;
          row.emplace_back(L.curtail(w, t), 1.0);
          rhs += x.wind(t, w);
        }
        for (int g = 0; g < ng; ++g) {
          if (grid.bus_index(grid.generators[g].bus) == b) row.emplace_back(L.output(g, t), -1.0);
        }
        m.add_constraint(tag("bal", c, b, t), Sense::Equal, rhs, row);
      }
      for (int k : net.surviving) {
        std::vector<Term> fwd, rev;
        for (decltype(bf)::InnerIterator it(bf, k); it; ++it) {
          fwd.emplace_back(th(it.col(), t), it.value());
          rev.emplace_back(th(it.col(), t), -it.value());
        }
        const double lim = grid.lines[k].flow_limit;
        m.add_constraint(tag("ff", c, k, t), Sense::LessEqual, lim - net.pf_shift[k], fwd);
        m.add_constraint(tag("ft", c, k, t), Sense::LessEqual, lim + net.pf_shift[k], rev);
      }
    }
    L.theta.push_back(std::move(th));
  }
  return out;
}

UcSolution decode(const UcModel& um, std::span<const double> v) {
  const auto& L = um.layout;
  const int T = L.hours;
  UcSolution sol;
  auto take = [&](const Eigen::MatrixXi& idx) {
    Eigen::MatrixXd out(idx.rows(), idx.cols());
    for (Eigen::Index i = 0; i < idx.rows(); ++i)
      for (Eigen::Index t = 0; t < idx.cols(); ++t) out(i, t) = v[idx(i, t)];
    return out;
  };
  sol.commitment = take(L.commit).array().round().matrix();
  sol.output = take(L.output);
  sol.curtail = take(L.curtail);
  sol.shed = take(L.shed);
  sol.blocks = L.blocks;
  for (const auto& th : L.theta) sol.theta.push_back(take(th));
  // Clean solver noise: decommitted units produce exactly zero.
  for (Eigen::Index g = 0; g < sol.output.rows(); ++g)
    for (int t = 0; t < T; ++t)
      if (sol.commitment(g, t) == 0.0) sol.output(g, t) = 0.0;
  return sol;
}

int hours_off_before(const GeneratorSpec& gen, const Eigen::MatrixXd& commitment, int unit, int hour) {
  int off = 0;
  for (int t = hour - 1; t >= 0; --t) {
    if (commitment(unit, t) > 0.5) return off;
    ++off;
  }
  return gen.initially_on ? off : off + gen.initial_hours;
}

CostBreakdown evaluate_cost(const GridCase& grid, const UcInput& x, const UcSolution& sol) {
  (void)x;
  CostBreakdown c;
  const int T = sol.hours();
  for (int g = 0; g < grid.num_generators(); ++g) {
    const auto& gen = grid.generators[g];
    for (int t = 0; t < T; ++t) {
      const double a = sol.commitment(g, t);
      const double p = sol.output(g, t);
      if (a < 0.5) {
        if (p > 1e-6) {
          throw ValidationError("generator " + std::to_string(g + 1) + " produces " + std::to_string(p) +
                                " MW while off at hour " + std::to_string(t + 1));
        }
        continue;
      }
      c.generation += gen.production_cost(p);
      const double prev = t == 0 ? alpha_before(gen, -1) : sol.commitment(g, t - 1);
      if (prev < 0.5) c.startup += gen.startup_cost(hours_off_before(gen, sol.commitment, g, t));
    }
  }
  c.curtailment = sol.curtail.sum() * grid.wind_curtailment_price;
  c.shed = sol.shed.sum() * grid.voll;
  return c;
}

UcSolution solve(const GridCase& grid, const UcInput& x, const UcOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  UcModel um = build_milp(grid, x, opts);
  const auto t1 = clock::now();
  milp::MilpResult r;
  UcSolution sol;
  try {
    r = milp::solve_milp(um.model, opts.bnb);
  } catch (const NumericalError&) {
    sol.status = SolveStatus::Failed;
    sol.build_seconds = std::chrono::duration<double>(t1 - t0).count();
    sol.solve_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    return sol;
  }
  const auto t2 = clock::now();
  if (r.has_solution()) {
    sol = decode(um, std::span<const double>(r.x.data(), static_cast<std::size_t>(r.x.size())));
    sol.status = r.status == milp::MilpStatus::Optimal ? SolveStatus::Optimal : SolveStatus::GapLimited;
    sol.breakdown = evaluate_cost(grid, x, sol);
    sol.cost = sol.breakdown.total();
    sol.gap = r.gap;
  } else {
    sol.status = r.status == milp::MilpStatus::Infeasible ? SolveStatus::Infeasible : SolveStatus::Failed;
  }
  sol.nodes = r.nodes;
  sol.build_seconds = std::chrono::duration<double>(t1 - t0).count();
  sol.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  return sol;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& rows, Eigen::Index cols_if_empty = 0) {
  if (!rows.is_array()) throw SchemaError("solution record: matrix must be an array of rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : cols_if_empty;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != c) {
      throw SchemaError("solution record: ragged matrix");
    }
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json solution_to_json(const UcSolution& sol) {
  nlohmann::json doc;
  doc["status"] = to_string(sol.status);
  doc["cost"] = sol.cost;
  doc["breakdown"] = {{"generation", sol.breakdown.generation},
                      {"startup", sol.breakdown.startup},
                      {"curtailment", sol.breakdown.curtailment},
                      {"shed", sol.breakdown.shed}};
  doc["gap"] = sol.gap;
  doc["nodes"] = sol.nodes;
  doc["hours"] = sol.hours();
  doc["commitment"] = matrix_json(sol.commitment);
  doc["output"] = matrix_json(sol.output);
  doc["curtail"] = matrix_json(sol.curtail);
  doc["shed"] = matrix_json(sol.shed);
  doc["blocks"] = sol.blocks;
  nlohmann::json th = nlohmann::json::array();
  for (const auto& m : sol.theta) th.push_back(matrix_json(m));
  doc["theta"] = std::move(th);
  return doc;
}

UcSolution solution_from_json(const nlohmann::json& doc) {
  UcSolution sol;
  try {
    sol.status = status_from_string(doc.at("status").get<std::string>());
    sol.cost = doc.at("cost").get<double>();
    const auto& b = doc.at("breakdown");
    sol.breakdown = {b.at("generation").get<double>(), b.at("startup").get<double>(),
                     b.at("curtailment").get<double>(), b.at("shed").get<double>()};
    sol.gap = doc.at("gap").get<double>();
    sol.nodes = doc.at("nodes").get<long>();
    const auto hours = doc.at("hours").get<Eigen::Index>();
    sol.commitment = matrix_from(doc.at("commitment"), hours);
    sol.output = matrix_from(doc.at("output"), hours);
    sol.curtail = matrix_from(doc.at("curtail"), hours);
    sol.shed = matrix_from(doc.at("shed"), hours);
    sol.blocks = doc.at("blocks").get<std::vector<int>>();
    for (const auto& m : doc.at("theta")) sol.theta.push_back(matrix_from(m, hours));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("solution record: ") + e.what());
  }
  return sol;
}

const Violation* ViolationReport::find(Family f) const {
  for (const auto& v : violations) {
    if (v.family == f) return &v;
  }
  return nullptr;
}

ViolationReport validate_solution(const GridCase& grid, const UcInput& x, const UcSolution& sol,
                                  const UcOptions& opts, double tolerance) {
  ViolationReport rep;
  rep.tolerance = tolerance;
  std::vector<Violation> worst;
  auto note = [&](Family f, double amount, int entity, int hour, int block, std::string detail = {}) {
    rep.worst = std::max(rep.worst, amount);
    for (auto& w : worst) {
      if (w.family != f) continue;
      if (amount > w.amount) w = {f, amount, entity, hour, block, std::move(detail)};
      return;
    }
    worst.push_back({f, amount, entity, hour, block, std::move(detail)});
  };

  const int T = sol.hours();
  const int ng = grid.num_generators();
  const int nb = grid.num_buses();
  const int nw = grid.num_wind();
  const double pi = std::numbers::pi;

  for (int g = 0; g < ng; ++g) {
    const auto& gen = grid.generators[g];
    for (int t = 0; t < T; ++t) {
      const double a = sol.commitment(g, t);
      const double p = sol.output(g, t);
      note(Family::Integrality, std::abs(a - std::round(a)), g, t, -1);
      if (a > 0.5) {
        note(Family::GenerationLimit, std::max({0.0, gen.p_min - p, p - gen.p_max}), g, t, -1);
      } else {
        note(Family::GenerationLimit, std::abs(p), g, t, -1);
      }
    }
    // Runs of equal status; the first run includes the initial state.
    if (T > 0 && (sol.commitment(g, 0) > 0.5) != gen.initially_on) {
      const int need = gen.initially_on ? gen.min_up : gen.min_down;
      if (gen.initial_hours < need) {
        note(gen.initially_on ? Family::MinUp : Family::MinDown, static_cast<double>(need - gen.initial_hours), g,
             0, -1, "generator " + std::to_string(g + 1) + " hour 1");
      }
    }
    int t = 0;
    while (t < T) {
      const bool on = sol.commitment(g, t) > 0.5;
      int end = t;
      while (end + 1 < T && (sol.commitment(g, end + 1) > 0.5) == on) ++end;
      int len = end - t + 1;
      if (t == 0 && on == gen.initially_on) len += gen.initial_hours;
      const bool truncated = end == T - 1;
      const int need = on ? gen.min_up : gen.min_down;
      if (!truncated && len < need) {
        note(on ? Family::MinUp : Family::MinDown, static_cast<double>(need - len), g, t, -1,
             "generator " + std::to_string(g + 1) + " hour " + std::to_string(t + 1));
      }
      t = end + 1;
    }
    if (opts.ramps) {
      for (int t2 = 0; t2 < T; ++t2) {
        double prev_p, prev_a;
        if (t2 == 0) {
          if (!gen.initial_output) continue;
          prev_p = *gen.initial_output;
          prev_a = alpha_before(gen, -1);
        } else {
          prev_p = sol.output(g, t2 - 1);
          prev_a = sol.commitment(g, t2 - 1);
        }
        const double a = sol.commitment(g, t2);
        const double p = sol.output(g, t2);
        double up_lim, dn_lim;
        if (prev_a > 0.5 && a > 0.5) {
          up_lim = gen.ramp_up;
          dn_lim = gen.ramp_down;
        } else if (a > 0.5) {
          up_lim = std::max(gen.ramp_up, gen.p_min);
          dn_lim = std::numeric_limits<double>::infinity();
        } else if (prev_a > 0.5) {
          up_lim = std::numeric_limits<double>::infinity();
          dn_lim = std::max(gen.ramp_down, gen.p_min);
        } else {
          continue;
        }
        note(Family::Ramp, std::max({0.0, p - prev_p - up_lim, prev_p - p - dn_lim}), g, t2, -1);
      }
    }
  }

  for (int t = 0; t < T; ++t) {
    for (int w = 0; w < nw; ++w) {
      const double wc = sol.curtail(w, t);
      note(Family::Curtailment, std::max({0.0, -wc, wc - x.wind(t, w)}), w, t, -1);
    }
    for (int b = 0; b < nb; ++b) {
      const double ls = sol.shed(b, t);
      note(Family::Shedding, std::max({0.0, -ls, ls - x.demand(t, b)}), b, t, -1);
    }
  }

  for (std::size_t c = 0; c < sol.blocks.size(); ++c) {
    const auto net = grid::build_effective_network(
        grid, x.top, sol.blocks[c] < 0 ? std::nullopt : std::optional<int>(sol.blocks[c]));
    const Eigen::MatrixXd& th = sol.theta[c];
    const Eigen::MatrixXd inj = net.bbus * th;  // buses x hours
    const Eigen::MatrixXd flow = net.bf * th;   // lines x hours
    const Eigen::MatrixXd gen_bus = net.cg * sol.output;
    const Eigen::MatrixXd wind_bus = net.cw * (x.wind.topRows(T).transpose() - sol.curtail);
    for (int t = 0; t < T; ++t) {
      for (int b = 0; b < nb; ++b) {
        const double supply = gen_bus(b, t) + wind_bus(b, t) - (x.demand(t, b) - sol.shed(b, t)) -
                              grid.buses[b].shunt_mw;
        note(Family::Balance, std::abs(inj(b, t) + net.pbus_shift[b] - supply), b, t, static_cast<int>(c));
        const double ang = th(b, t);
        note(Family::AngleLimit, std::max(0.0, std::abs(ang) - pi), b, t, static_cast<int>(c));
        if (grid.buses[b].reference) {
          note(Family::ReferenceAngle, std::abs(ang - grid.buses[b].ref_angle), b, t, static_cast<int>(c));
        }
      }
      for (int k : net.surviving) {
        const double f = flow(k, t) + net.pf_shift[k];
        note(Family::FlowLimit, std::max(0.0, std::abs(f) - grid.lines[k].flow_limit), k, t, static_cast<int>(c));
      }
    }
  }

  for (auto& w : worst) {
    if (w.amount > tolerance) rep.violations.push_back(std::move(w));
  }
  return rep;
}

}  // namespace ucnn::uc
