#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ucnn/grid.hpp"
#include "ucnn/sampling.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return UCNN_DATA_DIR; }

inline ucnn::grid::GridCase desk() { return ucnn::grid::load_case(data_dir() / "desk6" / "case.json"); }
inline ucnn::sampling::SamplerConfig desk_sampler() {
  return ucnn::sampling::load_sampler_config(data_dir() / "desk6" / "sampler.json");
}

inline ucnn::grid::LineSpec line(int id, int from, int to, double b, double limit = 100.0) {
  ucnn::grid::LineSpec l;
  l.id = id;
  l.from = from;
  l.to = to;
  l.susceptance = b;
  l.flow_limit = limit;
  return l;
}

inline ucnn::grid::GeneratorSpec generator(const std::string& name, int bus, double pmin, double pmax,
                                           double price, double su = 0.0) {
  ucnn::grid::GeneratorSpec g;
  g.name = name;
  g.bus = bus;
  g.p_min = pmin;
  g.p_max = pmax;
  g.cost_curve = {{pmin, price * pmin}, {pmax, price * pmax}};
  g.startup = {{1, su}};
  return g;
}

/// Buses 1..n, bus 1 the reference, no lines or units.
inline ucnn::grid::GridCase buses(int n) {
  ucnn::grid::GridCase c;
  c.name = "fixture";
  c.voll = 1000.0;
  c.wind_curtailment_price = 50.0;
  for (int i = 1; i <= n; ++i) {
    ucnn::grid::BusSpec b;
    b.id = i;
    b.reference = i == 1;
    c.buses.push_back(b);
  }
  return c;
}

/// Triangle 1-2-3 with susceptances 10, 20, 5 and one unit at bus 1.
inline ucnn::grid::GridCase ring3() {
  auto c = buses(3);
  c.lines = {line(1, 1, 2, 10.0), line(2, 2, 3, 20.0), line(3, 3, 1, 5.0)};
  c.generators = {generator("G1", 1, 0.0, 500.0, 20.0)};
  return c;
}

/// Chain 1-2-...-n.
inline ucnn::grid::GridCase path(int n) {
  auto c = buses(n);
  for (int i = 1; i < n; ++i) c.lines.push_back(line(i, i, i + 1, 10.0));
  c.generators = {generator("G1", 1, 0.0, 500.0, 20.0)};
  return c;
}

/// An input with flat demand `d` on every bus and no wind.
inline ucnn::sampling::UcInput flat_input(const ucnn::grid::GridCase& c, int hours, double d) {
  ucnn::sampling::UcInput x;
  x.demand = Eigen::MatrixXd::Constant(hours, c.num_buses(), d);
  x.wind = Eigen::MatrixXd::Zero(hours, c.num_wind());
  x.top = ucnn::grid::all_in_service(c);
  return x;
}

}  // namespace fixtures
