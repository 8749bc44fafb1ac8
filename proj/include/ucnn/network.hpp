#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ucnn/error.hpp"
#include "ucnn/grid.hpp"

namespace ucnn::grid {

/// DC network for one topology and contingency. Matrices are in MW per rad
/// (susceptance times base MVA), offsets in MW:
///   bus injections  = bbus * theta + pbus_shift
///   from-end flows  = bf   * theta + pf_shift
/// Rows of `bf` for lines that are out of service (or the contingency line)
/// are empty; those lines carry no limit.
template <typename Scalar>
struct EffectiveNetworkT {
  using SparseMatrix = Eigen::SparseMatrix<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SparseMatrix bbus;  // n_b x n_b
  Vector pbus_shift;  // n_b
  SparseMatrix bf;    // n_l x n_b
  Vector pf_shift;    // n_l
  SparseMatrix cg;    // n_b x n_g, generator-to-bus incidence
  SparseMatrix cw;    // n_b x n_w, wind-to-bus incidence
  std::vector<int> surviving;  // positions of lines that carry flow
  std::optional<int> contingency;  // position of the dropped line
  bool islanded = false;
};

using EffectiveNetwork = EffectiveNetworkT<double>;

/// Builds the DC matrices from the in-service lines of `top`, minus the
/// contingency line (given by id). Throws PreconditionError when the
/// contingency line is not in service.
template <typename Scalar = double>
EffectiveNetworkT<Scalar> build_effective_network(const GridCase& grid, const TopologyVector& top,
                                                  std::optional<int> contingency_line = std::nullopt) {
  using Triplet = Eigen::Triplet<Scalar>;
  const int nb = grid.num_buses();
  const int nl = grid.num_lines();
  if (static_cast<int>(top.size()) != nl) throw PreconditionError("topology length does not match the line count");

  EffectiveNetworkT<Scalar> net;
  int skip = -1;
  if (contingency_line) {
    skip = grid.line_index(*contingency_line);
    if (skip < 0) throw PreconditionError("contingency names unknown line " + std::to_string(*contingency_line));
    if (!top[skip]) {
      throw PreconditionError("contingency line " + std::to_string(*contingency_line) + " is already out of service");
    }
    net.contingency = skip;
  }

  std::vector<Triplet> bus_t, flow_t;
  net.pf_shift = EffectiveNetworkT<Scalar>::Vector::Zero(nl);
  net.pbus_shift = EffectiveNetworkT<Scalar>::Vector::Zero(nb);
  for (int k = 0; k < nl; ++k) {
    if (!top[k] || k == skip) continue;
    const auto& line = grid.lines[k];
    const int f = grid.bus_index(line.from);
    const int t = grid.bus_index(line.to);
    const Scalar b = static_cast<Scalar>(line.susceptance) * static_cast<Scalar>(grid.base_mva);
    net.surviving.push_back(k);
    flow_t.emplace_back(k, f, b);
    flow_t.emplace_back(k, t, -b);
    bus_t.emplace_back(f, f, b);
    bus_t.emplace_back(t, t, b);
    bus_t.emplace_back(f, t, -b);
    bus_t.emplace_back(t, f, -b);
    const Scalar shift = b * static_cast<Scalar>(line.shift);
    net.pf_shift[k] = shift;
    net.pbus_shift[f] += shift;
    net.pbus_shift[t] -= shift;
  }
  net.bf.resize(nl, nb);
  net.bf.setFromTriplets(flow_t.begin(), flow_t.end());
  net.bbus.resize(nb, nb);
  net.bbus.setFromTriplets(bus_t.begin(), bus_t.end());
  net.bbus.prune(Scalar(0));

  std::vector<Triplet> g_t;
  for (int i = 0; i < grid.num_generators(); ++i) g_t.emplace_back(grid.bus_index(grid.generators[i].bus), i, Scalar(1));
  net.cg.resize(nb, grid.num_generators());
  net.cg.setFromTriplets(g_t.begin(), g_t.end());
  std::vector<Triplet> w_t;
  for (int i = 0; i < grid.num_wind(); ++i) w_t.emplace_back(grid.bus_index(grid.wind[i].bus), i, Scalar(1));
  net.cw.resize(nb, grid.num_wind());
  net.cw.setFromTriplets(w_t.begin(), w_t.end());

  net.islanded = count_components(grid, top, skip) > 1;
  return net;
}

}  // namespace ucnn::grid
