#include "ucnn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "ucnn/error.hpp"

namespace ucnn::sampling {

using nlohmann::json;

bool OutageGroups::empty() const {
  if (!interconnection.empty()) return false;
  for (const auto& [zone, ids] : zones) {
    if (!ids.empty()) return false;
  }
  return true;
}

OutageGroups outages_from_case(const grid::GridCase& grid, bool zone_exclusive) {
  OutageGroups g;
  g.zone_exclusive = zone_exclusive;
  for (const auto& l : grid.lines) {
    if (!l.outage_candidate) continue;
    if (l.zone == grid::kInterconnectionZone) {
      g.interconnection.push_back(l.id);
    } else {
      g.zones[l.zone].push_back(l.id);
    }
  }
  return g;
}

void SamplerConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("sampler config: " + what);
  };
  require(demand_profile.rows() >= 1, "demand profile needs at least one hour");
  require(wind_profile.rows() == demand_profile.rows(), "wind and demand profiles must cover the same hours");
  require(demand_profile.allFinite() && (demand_profile.array() >= 0.0).all(), "demand profile must be non-negative");
  require(wind_profile.allFinite() && (wind_profile.array() >= 0.0).all(), "wind profile must be non-negative");
  for (int m = 0; m < 12; ++m) {
    require(demand_monthly[m] >= 0.0 && demand_monthly[m] <= 1.0, "demand monthly multipliers must lie in [0, 1]");
    require(wind_monthly[m] >= 0.0 && wind_monthly[m] <= 1.0, "wind monthly multipliers must lie in [0, 1]");
  }
  require(demand_sigma >= 0.0 && demand_sigma < 1.0, "demand sigma fraction must lie in [0, 1)");
  require(wind_sigma >= 0.0 && wind_sigma < 1.0, "wind sigma fraction must lie in [0, 1)");
  if (fixed_month) require(*fixed_month >= 1 && *fixed_month <= 12, "fixed month must lie in 1..12");
  std::set<int> seen;
  auto add = [&](int id) { require(seen.insert(id).second, "line " + std::to_string(id) + " listed twice"); };
  for (const auto& [zone, ids] : outages.zones) {
    require(zone != grid::kInterconnectionZone, "zone 0 is reserved for interconnections");
    for (int id : ids) add(id);
  }
  for (int id : outages.interconnection) add(id);
}

void SamplerConfig::check_against(const grid::GridCase& grid) const {
  validate();
  if (demand_profile.cols() != grid.num_buses()) {
    throw ValidationError("sampler config: demand profile has " + std::to_string(demand_profile.cols()) +
                          " columns, case has " + std::to_string(grid.num_buses()) + " buses");
  }
  if (wind_profile.cols() != grid.num_wind()) {
    throw ValidationError("sampler config: wind profile has " + std::to_string(wind_profile.cols()) +
                          " columns, case has " + std::to_string(grid.num_wind()) + " wind units");
  }
  auto known = [&](int id) {
    if (grid.line_index(id) < 0) throw ValidationError("sampler config: unknown outage line " + std::to_string(id));
  };
  for (const auto& [zone, ids] : outages.zones) std::for_each(ids.begin(), ids.end(), known);
  std::for_each(outages.interconnection.begin(), outages.interconnection.end(), known);
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw SchemaError(std::string("sampler config: '") + what + "' must be a non-empty array of rows");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != c) {
      throw SchemaError(std::string("sampler config: '") + what + "' rows must have equal length");
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      if (!rows[i][j].is_number()) throw SchemaError(std::string("sampler config: '") + what + "' must be numeric");
      m(i, j) = rows[i][j].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::array<double, 12> monthly_from_json(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array() || doc.at(key).size() != 12) {
    throw SchemaError(std::string("sampler config: '") + key + "' must list 12 monthly multipliers");
  }
  std::array<double, 12> out{};
  for (int m = 0; m < 12; ++m) {
    if (!doc.at(key)[m].is_number()) throw SchemaError(std::string("sampler config: '") + key + "' must be numeric");
    out[m] = doc.at(key)[m].get<double>();
  }
  return out;
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("sampler config: field '") + key + "' has the wrong type");
  }
}

// splitmix64 finalizer; spreads (seed, id, component) into unrelated states.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng make_stream(std::uint64_t seed, std::uint64_t id, std::uint64_t component) {
  std::seed_seq seq{mix(seed), mix(id ^ 0x5bd1e995ULL), mix(component + 0x2545f491ULL)};
  return Rng(seq);
}

// Draws N(mean, (sigma * mean)^2) entrywise; zero variance returns the mean.
Eigen::MatrixXd draw(const Eigen::MatrixXd& mean, double sigma, Rng& rng) {
  Eigen::MatrixXd out(mean.rows(), mean.cols());
  std::normal_distribution<double> z(0.0, 1.0);
  // Hour-major order so the stream layout matches the feature layout.
  for (Eigen::Index t = 0; t < mean.rows(); ++t) {
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      const double mu = mean(t, j);
      const double sd = sigma * mu;
      out(t, j) = sd > 0.0 ? mu + sd * z(rng) : mu;
    }
  }
  return out;
}

}  // namespace

SamplerConfig sampler_config_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("sampler config: document must be an object");
  const int version = get_or<int>(doc, "schema_version", -1);
  if (version != kSamplerSchemaVersion) {
    throw SchemaError("sampler config: unsupported schema_version " + std::to_string(version));
  }
  SamplerConfig cfg;
  if (!doc.contains("demand_profile")) throw SchemaError("sampler config: missing field 'demand_profile'");
  if (!doc.contains("wind_profile")) throw SchemaError("sampler config: missing field 'wind_profile'");
  cfg.demand_profile = matrix_from_json(doc.at("demand_profile"), "demand_profile");
  const json& wp = doc.at("wind_profile");
  if (wp.is_array() && !wp.empty() && wp[0].is_array() && wp[0].empty()) {
    cfg.wind_profile = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(wp.size()), 0);
  } else {
    cfg.wind_profile = matrix_from_json(wp, "wind_profile");
  }
  cfg.demand_monthly = monthly_from_json(doc, "demand_monthly");
  cfg.wind_monthly = monthly_from_json(doc, "wind_monthly");
  cfg.demand_sigma = get_or<double>(doc, "demand_sigma", 0.02);
  cfg.wind_sigma = get_or<double>(doc, "wind_sigma", 0.15);
  if (doc.contains("fixed_month") && !doc.at("fixed_month").is_null()) {
    cfg.fixed_month = get_or<int>(doc, "fixed_month", 0);
  }
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
  if (doc.contains("outages")) {
    const json& o = doc.at("outages");
    cfg.outages.zone_exclusive = get_or<bool>(o, "zone_exclusive", true);
    if (o.contains("zones")) {
      if (!o.at("zones").is_object()) throw SchemaError("sampler config: 'outages.zones' must be an object");
      for (const auto& [key, ids] : o.at("zones").items()) {
        int zone = 0;
        try {
          zone = std::stoi(key);
        } catch (const std::exception&) {
          throw SchemaError("sampler config: zone key '" + key + "' is not an integer");
        }
        try {
          cfg.outages.zones[zone] = ids.get<std::vector<int>>();
        } catch (const json::exception&) {
          throw SchemaError("sampler config: zone '" + key + "' must list line ids");
        }
      }
    }
    cfg.outages.interconnection = get_or<std::vector<int>>(o, "interconnection", {});
  }
  cfg.validate();
  return cfg;
}

json sampler_config_to_json(const SamplerConfig& cfg) {
  json doc;
  doc["schema_version"] = kSamplerSchemaVersion;
  doc["demand_profile"] = matrix_to_json(cfg.demand_profile);
  doc["wind_profile"] = matrix_to_json(cfg.wind_profile);
  doc["demand_monthly"] = cfg.demand_monthly;
  doc["wind_monthly"] = cfg.wind_monthly;
  doc["demand_sigma"] = cfg.demand_sigma;
  doc["wind_sigma"] = cfg.wind_sigma;
  doc["fixed_month"] = cfg.fixed_month ? json(*cfg.fixed_month) : json(nullptr);
  doc["seed"] = cfg.seed;
  json zones = json::object();
  for (const auto& [zone, ids] : cfg.outages.zones) zones[std::to_string(zone)] = ids;
  doc["outages"] = {{"zones", zones},
                    {"interconnection", cfg.outages.interconnection},
                    {"zone_exclusive", cfg.outages.zone_exclusive}};
  return doc;
}

SamplerConfig load_sampler_config(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw MissingArtifactError("cannot open sampler config " + source.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("sampler config " + source.string() + " is not valid JSON: " + e.what());
  }
  return sampler_config_from_json(doc);
}

json input_to_json(const UcInput& x) {
  json doc;
  doc["id"] = x.id;
  doc["seed"] = x.seed;
  doc["month"] = x.month;
  doc["demand"] = matrix_to_json(x.demand);
  doc["wind"] = matrix_to_json(x.wind);
  doc["top"] = x.top;
  return doc;
}

UcInput input_from_json(const json& doc) {
  UcInput x;
  try {
    x.id = doc.at("id").get<std::uint64_t>();
    x.seed = doc.at("seed").get<std::uint64_t>();
    x.month = doc.at("month").get<int>();
    x.top = doc.at("top").get<grid::TopologyVector>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scenario record: ") + e.what());
  }
  x.demand = matrix_from_json(doc.at("demand"), "demand");
  const json& w = doc.at("wind");
  if (w.is_array() && !w.empty() && w[0].is_array() && w[0].empty()) {
    x.wind = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w.size()), 0);
  } else {
    x.wind = matrix_from_json(w, "wind");
  }
  return x;
}

Substreams::Substreams(std::uint64_t seed, std::uint64_t id)
    : month(make_stream(seed, id, 1)),
      wind(make_stream(seed, id, 2)),
      demand(make_stream(seed, id, 3)),
      topology(make_stream(seed, id, 4)) {}

int sample_month(const SamplerConfig& cfg, Rng& rng) {
  if (cfg.fixed_month) return *cfg.fixed_month;
  return std::uniform_int_distribution<int>(1, 12)(rng);
}

Eigen::MatrixXd sample_wind(const SamplerConfig& cfg, const grid::GridCase& grid, int month, Rng& rng) {
  const Eigen::MatrixXd mean = cfg.wind_profile * cfg.wind_monthly.at(month - 1);
  Eigen::MatrixXd w = draw(mean, cfg.wind_sigma, rng);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    w.col(j) = w.col(j).cwiseMax(0.0).cwiseMin(grid.wind.at(j).capacity);
  }
  return w;
}

Eigen::MatrixXd sample_demand(const SamplerConfig& cfg, int month, Rng& rng) {
  const Eigen::MatrixXd mean = cfg.demand_profile * cfg.demand_monthly.at(month - 1);
  return draw(mean, cfg.demand_sigma, rng).cwiseMax(0.0);
}

grid::TopologyVector sample_topology(const SamplerConfig& cfg, const grid::GridCase& grid, Rng& rng) {
  grid::TopologyVector top = grid::all_in_service(grid);
  const auto& o = cfg.outages;
  if (o.empty()) return top;
  std::vector<int> candidates;
  if (o.zone_exclusive && !o.zones.empty()) {
    std::vector<const std::vector<int>*> zones;
    for (const auto& [zone, ids] : o.zones) zones.push_back(&ids);
    const auto pick = std::uniform_int_distribution<std::size_t>(0, zones.size() - 1)(rng);
    candidates = *zones[pick];
  } else {
    for (const auto& [zone, ids] : o.zones) candidates.insert(candidates.end(), ids.begin(), ids.end());
  }
  candidates.insert(candidates.end(), o.interconnection.begin(), o.interconnection.end());
  // A fair coin per candidate is a uniform draw over the subsets.
  std::bernoulli_distribution coin(0.5);
  for (int id : candidates) {
    if (coin(rng)) top.at(grid.line_index(id)) = 0;
  }
  return top;
}

UcInput sample_scenario(const SamplerConfig& cfg, const grid::GridCase& grid, std::uint64_t seed, std::uint64_t id) {
  Substreams s(seed, id);
  UcInput x;
  x.id = id;
  x.seed = seed;
  x.month = sample_month(cfg, s.month);
  x.wind = sample_wind(cfg, grid, x.month, s.wind);
  x.demand = sample_demand(cfg, x.month, s.demand);
  x.top = sample_topology(cfg, grid, s.topology);
  return x;
}

ScenarioSampler::ScenarioSampler(SamplerConfig cfg, const grid::GridCase& grid, std::uint64_t seed,
                                 std::uint64_t first_id)
    : cfg_(std::move(cfg)), grid_(&grid), seed_(seed), next_id_(first_id) {
  cfg_.check_against(grid);
}

UcInput ScenarioSampler::next() { return sample_scenario(cfg_, *grid_, seed_, next_id_++); }

}  // namespace ucnn::sampling
