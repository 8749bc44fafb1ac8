#include "ucnn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <unordered_map>

#include "ucnn/error.hpp"
#include "ucnn/hash.hpp"

namespace ucnn::grid {

using nlohmann::json;

double GeneratorSpec::startup_cost(int hours_off) const {
  double c = 0.0;
  for (const auto& s : startup) {
    if (s.hours_off <= hours_off) c = s.cost;
  }
  return c;
}

double GeneratorSpec::production_cost(double p) const {
  if (cost_curve.size() == 1) return cost_curve.front().cost;
  std::size_t k = 1;
  while (k + 1 < cost_curve.size() && p > cost_curve[k].mw) ++k;
  const auto& a = cost_curve[k - 1];
  const auto& b = cost_curve[k];
  return a.cost + (b.cost - a.cost) / (b.mw - a.mw) * (p - a.mw);
}

int GridCase::bus_index(int id) const {
  for (int i = 0; i < num_buses(); ++i) {
    if (buses[i].id == id) return i;
  }
  return -1;
}

int GridCase::line_index(int id) const {
  for (int i = 0; i < num_lines(); ++i) {
    if (lines[i].id == id) return i;
  }
  return -1;
}

TopologyVector all_in_service(const GridCase& grid) { return TopologyVector(grid.lines.size(), 1); }

namespace {

std::string gen_label(const GridCase& g, int i) {
  return "generator " + std::to_string(i + 1) + " '" + g.generators[i].name + "'";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void validate(const GridCase& g) {
  require(std::isfinite(g.base_mva) && g.base_mva > 0.0, "base_mva must be positive");
  require(std::isfinite(g.voll) && g.voll >= 0.0, "VOLL must be non-negative");
  require(std::isfinite(g.wind_curtailment_price) && g.wind_curtailment_price >= 0.0,
          "wind curtailment price must be non-negative");
  require(!g.buses.empty(), "case has no buses");

  std::set<int> bus_ids;
  bool has_ref = false;
  for (const auto& b : g.buses) {
    require(bus_ids.insert(b.id).second, "duplicate bus id " + std::to_string(b.id));
    require(std::isfinite(b.shunt_mw), "bus " + std::to_string(b.id) + ": shunt must be finite");
    has_ref = has_ref || b.reference;
  }
  require(has_ref, "case has no reference bus");

  std::set<int> line_ids;
  for (const auto& l : g.lines) {
    const std::string who = "line " + std::to_string(l.id);
    require(line_ids.insert(l.id).second, "duplicate " + who);
    require(bus_ids.count(l.from) == 1, who + " references missing bus " + std::to_string(l.from));
    require(bus_ids.count(l.to) == 1, who + " references missing bus " + std::to_string(l.to));
    require(l.from != l.to, who + " connects a bus to itself");
    require(std::isfinite(l.susceptance) && l.susceptance > 0.0, who + ": susceptance must be positive");
    require(std::isfinite(l.flow_limit) && l.flow_limit > 0.0, who + ": flow limit must be positive");
    require(std::isfinite(l.shift), who + ": shift must be finite");
    require(l.zone >= 0, who + ": zone must be non-negative");
  }

  for (int i = 0; i < g.num_generators(); ++i) {
    const auto& gen = g.generators[i];
    const std::string who = gen_label(g, i);
    require(bus_ids.count(gen.bus) == 1, who + " references missing bus " + std::to_string(gen.bus));
    require(gen.p_min >= 0.0 && gen.p_min <= gen.p_max && std::isfinite(gen.p_max),
            who + ": requires 0 <= p_min <= p_max");
    require(gen.ramp_up > 0.0 && gen.ramp_down > 0.0, who + ": ramp limits must be positive");
    require(gen.min_up >= 1 && gen.min_down >= 1, who + ": min up/down times must be >= 1");
    require(gen.initial_hours >= 1, who + ": initial state duration must be >= 1");
    if (gen.initial_output) {
      const double p0 = *gen.initial_output;
      if (gen.initially_on) {
        require(p0 >= gen.p_min - 1e-9 && p0 <= gen.p_max + 1e-9, who + ": initial output outside [p_min, p_max]");
      } else {
        require(p0 == 0.0, who + ": initial output must be 0 when initially off");
      }
    }
    const auto& cc = gen.cost_curve;
    require(!cc.empty(), who + ": empty cost curve");
    require(cc.size() >= 2 || gen.p_min == gen.p_max, who + ": cost curve needs two breakpoints");
    require(cc.front().mw == gen.p_min && cc.back().mw == gen.p_max,
            who + ": cost curve must span [p_min, p_max]");
    double prev_slope = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cc.size(); ++k) {
      require(std::isfinite(cc[k].cost), who + ": cost curve values must be finite");
      if (k == 0) continue;
      require(cc[k].mw > cc[k - 1].mw, who + ": cost curve breakpoints must strictly increase");
      const double slope = (cc[k].cost - cc[k - 1].cost) / (cc[k].mw - cc[k - 1].mw);
      require(slope >= prev_slope - 1e-9, who + ": cost curve must be convex");
      prev_slope = slope;
    }
    require(!gen.startup.empty(), who + ": empty startup schedule");
    for (std::size_t k = 0; k < gen.startup.size(); ++k) {
      require(gen.startup[k].cost >= 0.0 && std::isfinite(gen.startup[k].cost),
              who + ": startup costs must be non-negative");
      if (k == 0) {
        require(gen.startup[k].hours_off <= 1, who + ": first startup step must cover 1 hour off");
        continue;
      }
      require(gen.startup[k].hours_off > gen.startup[k - 1].hours_off,
              who + ": startup steps must have increasing hours_off");
      require(gen.startup[k].cost >= gen.startup[k - 1].cost, who + ": startup cost must be non-decreasing");
    }
  }

  for (int i = 0; i < g.num_wind(); ++i) {
    const auto& w = g.wind[i];
    const std::string who = "wind " + std::to_string(i + 1) + " '" + w.name + "'";
    require(bus_ids.count(w.bus) == 1, who + " references missing bus " + std::to_string(w.bus));
    require(std::isfinite(w.capacity) && w.capacity > 0.0, who + ": capacity must be positive");
  }
}

namespace {

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return field<T>(obj, key, where);
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  const json& a = obj.at(key);
  if (!a.is_array()) throw SchemaError(where + ": field '" + key + "' must be an array");
  return a;
}

double limit_or_inf(const json& obj, const char* key, const std::string& where) {
  return field_or<double>(obj, key, std::numeric_limits<double>::infinity(), where);
}

json limit_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

GridCase case_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("case: document must be an object");
  const int version = field<int>(doc, "schema_version", "case");
  if (version != kCaseSchemaVersion) {
    throw SchemaError("case: unsupported schema_version " + std::to_string(version));
  }
  GridCase g;
  g.name = field_or<std::string>(doc, "name", "", "case");
  g.base_mva = field<double>(doc, "base_mva", "case");
  if (!doc.contains("prices")) throw SchemaError("case: missing field 'prices'");
  const json& prices = doc.at("prices");
  g.wind_curtailment_price = field<double>(prices, "wind_curtailment", "prices");
  g.voll = field<double>(prices, "voll", "prices");

  for (const auto& b : array_field(doc, "buses", "case")) {
    const std::string where = "bus";
    BusSpec s;
    s.id = field<int>(b, "id", where);
    s.shunt_mw = field_or<double>(b, "shunt_mw", 0.0, where);
    s.reference = field_or<bool>(b, "reference", false, where);
    s.ref_angle = field_or<double>(b, "ref_angle", 0.0, where);
    g.buses.push_back(s);
  }
  for (const auto& l : array_field(doc, "lines", "case")) {
    const std::string where = "line";
    LineSpec s;
    s.id = field<int>(l, "id", where);
    s.from = field<int>(l, "from", where);
    s.to = field<int>(l, "to", where);
    s.susceptance = field<double>(l, "susceptance", where);
    s.flow_limit = field<double>(l, "flow_limit", where);
    s.shift = field_or<double>(l, "shift", 0.0, where);
    s.outage_candidate = field_or<bool>(l, "outage_candidate", false, where);
    s.zone = field_or<int>(l, "zone", kInterconnectionZone, where);
    g.lines.push_back(s);
  }
  for (const auto& j : array_field(doc, "generators", "case")) {
    const std::string where = "generator";
    GeneratorSpec s;
    s.name = field_or<std::string>(j, "name", "", where);
    s.bus = field<int>(j, "bus", where);
    s.p_min = field<double>(j, "p_min", where);
    s.p_max = field<double>(j, "p_max", where);
    s.ramp_up = limit_or_inf(j, "ramp_up", where);
    s.ramp_down = limit_or_inf(j, "ramp_down", where);
    s.min_up = field_or<int>(j, "min_up", 1, where);
    s.min_down = field_or<int>(j, "min_down", 1, where);
    if (!j.contains("initial_status")) throw SchemaError(where + ": missing field 'initial_status'");
    const json& init = j.at("initial_status");
    s.initially_on = field<bool>(init, "on", "initial_status");
    s.initial_hours = field<int>(init, "hours", "initial_status");
    if (init.contains("output") && !init.at("output").is_null()) {
      s.initial_output = field<double>(init, "output", "initial_status");
    }
    for (const auto& p : array_field(j, "cost_curve", where)) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw SchemaError(where + ": cost_curve entries must be [MW, $/h] pairs");
      }
      s.cost_curve.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    for (const auto& st : array_field(j, "startup", where)) {
      s.startup.push_back({field<int>(st, "hours_off", "startup"), field<double>(st, "cost", "startup")});
    }
    g.generators.push_back(std::move(s));
  }
  if (doc.contains("wind")) {
    for (const auto& w : array_field(doc, "wind", "case")) {
      WindSpec s;
      s.name = field_or<std::string>(w, "name", "", "wind");
      s.bus = field<int>(w, "bus", "wind");
      s.capacity = field<double>(w, "capacity", "wind");
      g.wind.push_back(std::move(s));
    }
  }
  validate(g);
  return g;
}

json case_to_json(const GridCase& g) {
  json doc;
  doc["schema_version"] = kCaseSchemaVersion;
  doc["name"] = g.name;
  doc["base_mva"] = g.base_mva;
  doc["prices"] = {{"wind_curtailment", g.wind_curtailment_price}, {"voll", g.voll}};
  json buses = json::array();
  for (const auto& b : g.buses) {
    buses.push_back({{"id", b.id}, {"shunt_mw", b.shunt_mw}, {"reference", b.reference}, {"ref_angle", b.ref_angle}});
  }
  doc["buses"] = std::move(buses);
  json lines = json::array();
  for (const auto& l : g.lines) {
    lines.push_back({{"id", l.id},
                     {"from", l.from},
                     {"to", l.to},
                     {"susceptance", l.susceptance},
                     {"flow_limit", l.flow_limit},
                     {"shift", l.shift},
                     {"outage_candidate", l.outage_candidate},
                     {"zone", l.zone}});
  }
  doc["lines"] = std::move(lines);
  json gens = json::array();
  for (const auto& s : g.generators) {
    json curve = json::array();
    for (const auto& p : s.cost_curve) curve.push_back({p.mw, p.cost});
    json su = json::array();
    for (const auto& st : s.startup) su.push_back({{"hours_off", st.hours_off}, {"cost", st.cost}});
    json init = {{"on", s.initially_on}, {"hours", s.initial_hours}};
    init["output"] = s.initial_output ? json(*s.initial_output) : json(nullptr);
    gens.push_back({{"name", s.name},
                    {"bus", s.bus},
                    {"p_min", s.p_min},
                    {"p_max", s.p_max},
                    {"ramp_up", limit_to_json(s.ramp_up)},
                    {"ramp_down", limit_to_json(s.ramp_down)},
                    {"min_up", s.min_up},
                    {"min_down", s.min_down},
                    {"initial_status", init},
                    {"cost_curve", curve},
                    {"startup", su}});
  }
  doc["generators"] = std::move(gens);
  json wind = json::array();
  for (const auto& w : g.wind) wind.push_back({{"name", w.name}, {"bus", w.bus}, {"capacity", w.capacity}});
  doc["wind"] = std::move(wind);
  return doc;
}

GridCase load_case(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw MissingArtifactError("cannot open case file " + source.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("case file " + source.string() + " is not valid JSON: " + e.what());
  }
  return case_from_json(doc);
}

std::string fingerprint(const GridCase& grid) { return hex64(fnv1a64(case_to_json(grid).dump())); }

int count_components(const GridCase& g, const TopologyVector& top, int skip_line) {
  const int nb = g.num_buses();
  std::vector<int> parent(nb);
  for (int i = 0; i < nb; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  int components = nb;
  for (int k = 0; k < g.num_lines(); ++k) {
    if (!top[k] || k == skip_line) continue;
    const int a = find(g.bus_index(g.lines[k].from));
    const int b = find(g.bus_index(g.lines[k].to));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components;
}

ContingencySet enumerate_contingencies(const GridCase& g, const TopologyVector& top) {
  if (top.size() != g.lines.size()) throw PreconditionError("topology length does not match the line count");
  const int nb = g.num_buses();
  // Adjacency as (neighbor, line position) so parallel lines are distinct edges.
  std::vector<std::vector<std::pair<int, int>>> adj(nb);
  for (int k = 0; k < g.num_lines(); ++k) {
    if (!top[k]) continue;
    const int a = g.bus_index(g.lines[k].from);
    const int b = g.bus_index(g.lines[k].to);
    adj[a].emplace_back(b, k);
    adj[b].emplace_back(a, k);
  }
  std::vector<int> disc(nb, -1), low(nb, 0);
  std::vector<char> bridge(g.lines.size(), 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int via) {
    disc[u] = low[u] = timer++;
    for (const auto& [v, k] : adj[u]) {
      if (k == via) continue;
      if (disc[v] < 0) {
        dfs(v, k);
        low[u] = std::min(low[u], low[v]);
        if (low[v] > disc[u]) bridge[k] = 1;
      } else {
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  for (int u = 0; u < nb; ++u) {
    if (disc[u] < 0) dfs(u, -1);
  }
  ContingencySet out;
  for (int k = 0; k < g.num_lines(); ++k) {
    if (!top[k]) continue;
    (bridge[k] ? out.islanding : out.lines).push_back(g.lines[k].id);
  }
  return out;
}

}  // namespace ucnn::grid
