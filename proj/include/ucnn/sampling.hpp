#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ucnn/grid.hpp"

namespace ucnn::sampling {

inline constexpr int kSamplerSchemaVersion = 1;

struct OutageGroups {
  std::map<int, std::vector<int>> zones;  // zone id -> candidate line ids
  std::vector<int> interconnection;       // shared candidates, drawn with any zone
  bool zone_exclusive = true;

  bool empty() const;
};

/// Candidate lines flagged in the case, grouped by their zone (zone 0 is
/// the shared interconnection group).
OutageGroups outages_from_case(const grid::GridCase& grid, bool zone_exclusive = true);

struct SamplerConfig {
  Eigen::MatrixXd demand_profile;  // hours x buses, MW
  Eigen::MatrixXd wind_profile;    // hours x wind units, MW
  std::array<double, 12> demand_monthly{};
  std::array<double, 12> wind_monthly{};
  double demand_sigma = 0.02;
  double wind_sigma = 0.15;
  OutageGroups outages;
  std::optional<int> fixed_month;  // degenerate month support, 1..12
  std::uint64_t seed = 0;

  int hours() const { return static_cast<int>(demand_profile.rows()); }
  /// Throws ValidationError.
  void validate() const;
  /// Throws ValidationError when shapes or candidate ids disagree with `grid`.
  void check_against(const grid::GridCase& grid) const;
};

SamplerConfig sampler_config_from_json(const nlohmann::json& doc);
nlohmann::json sampler_config_to_json(const SamplerConfig& cfg);
SamplerConfig load_sampler_config(const std::filesystem::path& source);

/// One day of conditions.
struct UcInput {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;  // provenance: the stream seed that produced it
  int month = 1;
  Eigen::MatrixXd demand;  // hours x buses, MW
  Eigen::MatrixXd wind;    // hours x wind units, MW
  grid::TopologyVector top;

  int hours() const { return static_cast<int>(demand.rows()); }
};

nlohmann::json input_to_json(const UcInput& x);
UcInput input_from_json(const nlohmann::json& doc);

using Rng = std::mt19937_64;

/// Independent per-component generators for one (seed, sample id). Month,
/// wind, demand and topology never share state, so conditional independence
/// holds by construction and any sample can be regenerated on its own.
struct Substreams {
  Rng month, wind, demand, topology;

  Substreams(std::uint64_t seed, std::uint64_t id);
};

int sample_month(const SamplerConfig& cfg, Rng& rng);
/// Normal draws around profile x monthly factor, clamped to [0, capacity].
Eigen::MatrixXd sample_wind(const SamplerConfig& cfg, const grid::GridCase& grid, int month, Rng& rng);
/// Normal draws around profile x monthly factor, clamped below at 0.
Eigen::MatrixXd sample_demand(const SamplerConfig& cfg, int month, Rng& rng);
grid::TopologyVector sample_topology(const SamplerConfig& cfg, const grid::GridCase& grid, Rng& rng);

/// Sample `id` of the stream seeded by `seed`.
UcInput sample_scenario(const SamplerConfig& cfg, const grid::GridCase& grid, std::uint64_t seed,
                        std::uint64_t id);

/// Sequential front end over sample_scenario.
class ScenarioSampler {
 public:
  ScenarioSampler(SamplerConfig cfg, const grid::GridCase& grid, std::uint64_t seed, std::uint64_t first_id = 0);

  UcInput next();

 private:
  SamplerConfig cfg_;
  const grid::GridCase* grid_;
  std::uint64_t seed_;
  std::uint64_t next_id_;
};

}  // namespace ucnn::sampling
