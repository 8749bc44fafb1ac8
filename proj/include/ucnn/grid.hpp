#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ucnn::grid {

inline constexpr int kCaseSchemaVersion = 1;

/// Lines in zone 0 are interconnections shared by every zone.
inline constexpr int kInterconnectionZone = 0;

struct BusSpec {
  int id = 0;
  double shunt_mw = 0.0;  // real power drawn by shunt elements
  bool reference = false;
  double ref_angle = 0.0;  // rad, used when `reference`
};

struct LineSpec {
  int id = 0;
  int from = 0;  // bus ids
  int to = 0;
  double susceptance = 0.0;  // p.u.
  double flow_limit = 0.0;   // MW
  double shift = 0.0;        // rad
  bool outage_candidate = false;
  int zone = kInterconnectionZone;
};

struct CostPoint {
  double mw = 0.0;
  double cost = 0.0;  // $/h
};

/// SU(t_off) = cost of the last step whose `hours_off` does not exceed t_off.
struct StartupStep {
  int hours_off = 0;
  double cost = 0.0;
};

struct GeneratorSpec {
  std::string name;
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = std::numeric_limits<double>::infinity();    // MW/h
  double ramp_down = std::numeric_limits<double>::infinity();  // MW/h
  int min_up = 1;
  int min_down = 1;
  bool initially_on = false;
  int initial_hours = 1;                 // hours spent in the initial state
  std::optional<double> initial_output;  // MW; ramps at hour 1 need it
  std::vector<CostPoint> cost_curve;     // convex, from p_min to p_max
  std::vector<StartupStep> startup;      // non-decreasing in hours_off

  double startup_cost(int hours_off) const;
  /// f_P(p) for p in [p_min, p_max]; linear extrapolation outside.
  double production_cost(double p) const;
};

struct WindSpec {
  std::string name;
  int bus = 0;
  double capacity = 0.0;  // MW
};

struct GridCase {
  std::string name;
  double base_mva = 100.0;
  double wind_curtailment_price = 0.0;  // $/MWh
  double voll = 0.0;                    // $/MWh
  std::vector<BusSpec> buses;
  std::vector<LineSpec> lines;
  std::vector<GeneratorSpec> generators;
  std::vector<WindSpec> wind;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
  int num_wind() const { return static_cast<int>(wind.size()); }

  /// Position of a bus / line id, or -1.
  int bus_index(int id) const;
  int line_index(int id) const;
};

/// 1 = in service, 0 = out; one entry per line in case order.
using TopologyVector = std::vector<std::uint8_t>;

TopologyVector all_in_service(const GridCase& grid);

/// Throws ValidationError naming the offending entity.
void validate(const GridCase& grid);

GridCase case_from_json(const nlohmann::json& doc);
nlohmann::json case_to_json(const GridCase& grid);

/// Reads and validates a case file. SchemaError for missing or mistyped
/// fields, ValidationError for broken invariants.
GridCase load_case(const std::filesystem::path& source);

/// Hex FNV-1a hash of the canonical JSON serialization. Whitespace and key
/// order of the source file do not affect it.
std::string fingerprint(const GridCase& grid);

struct ContingencySet {
  std::vector<int> lines;      // line ids safe to drop one at a time
  std::vector<int> islanding;  // in-service line ids whose loss splits the grid
};

/// In-service lines whose single removal keeps the network connected. Bridges
/// are found with one DFS, parallel lines handled.
ContingencySet enumerate_contingencies(const GridCase& grid, const TopologyVector& top);

/// Number of connected components of the in-service graph, optionally with
/// one more line removed (by position).
int count_components(const GridCase& grid, const TopologyVector& top, int skip_line = -1);

}  // namespace ucnn::grid
