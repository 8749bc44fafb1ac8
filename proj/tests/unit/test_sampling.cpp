#include <doctest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "ucnn/error.hpp"

using namespace ucnn;
using namespace ucnn::sampling;

namespace {

// One bus, one wind unit, flat profiles, every month multiplier 1.
std::pair<grid::GridCase, SamplerConfig> single(double wind_mean, double capacity, double sigma) {
  auto c = fixtures::buses(1);
  c.generators = {fixtures::generator("G", 1, 0.0, 10.0, 1.0)};
  c.wind = {{"W", 1, capacity}};
  SamplerConfig cfg;
  cfg.demand_profile = Eigen::MatrixXd::Constant(24, 1, 50.0);
  cfg.wind_profile = Eigen::MatrixXd::Constant(24, 1, wind_mean);
  cfg.demand_monthly.fill(1.0);
  cfg.wind_monthly.fill(1.0);
  cfg.wind_sigma = sigma;
  cfg.demand_sigma = 0.0;
  return {c, cfg};
}

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mean of N(mu, s^2) clamped to [0, cap].
double censored_mean(double mu, double s, double cap) {
  const double a = (0.0 - mu) / s, b = (cap - mu) / s;
  return mu * (Phi(b) - Phi(a)) + s * (phi(a) - phi(b)) + cap * (1.0 - Phi(b));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("desk sampler config is consistent with the desk case") {
  const auto c = fixtures::desk();
  const auto cfg = fixtures::desk_sampler();
  CHECK_NOTHROW(cfg.check_against(c));
  CHECK(cfg.hours() == 24);
  CHECK(cfg.demand_sigma == 0.02);
  CHECK(cfg.wind_sigma == 0.15);
  const auto back = sampler_config_from_json(sampler_config_to_json(cfg));
  CHECK(sampler_config_to_json(back) == sampler_config_to_json(cfg));
}

TEST_CASE("sampler config validation") {
  const auto c = fixtures::desk();
  auto cfg = fixtures::desk_sampler();
  SUBCASE("multiplier above 1") {
    cfg.wind_monthly[3] = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("sigma of 1") {
    cfg.demand_sigma = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("negative profile") {
    cfg.demand_profile(3, 2) = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("shape mismatch against the case") {
    cfg.wind_profile = Eigen::MatrixXd::Zero(24, 3);
    CHECK_THROWS_AS(cfg.check_against(c), ValidationError);
  }
  SUBCASE("unknown outage line") {
    cfg.outages.interconnection.push_back(77);
    CHECK_THROWS_AS(cfg.check_against(c), ValidationError);
  }
  SUBCASE("line in two groups") {
    cfg.outages.interconnection.push_back(2);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
}

TEST_CASE("months are uniform over 120000 seeded draws") {
  const auto cfg = fixtures::desk_sampler();
  Rng rng(99);
  std::array<int, 12> counts{};
  const int n = 120000;
  for (int i = 0; i < n; ++i) {
    const int m = sample_month(cfg, rng);
    REQUIRE(m >= 1);
    REQUIRE(m <= 12);
    ++counts[m - 1];
  }
  double chi2 = 0.0;
  for (int k : counts) {
    CHECK(std::abs(k / double(n) - 1.0 / 12.0) < 0.01);
    chi2 += (k - n / 12.0) * (k - n / 12.0) / (n / 12.0);
  }
  // 99th percentile of chi-square with 11 degrees of freedom.
  CHECK(chi2 < 24.725);
}

TEST_CASE("fixed month and seeded determinism") {
  auto cfg = fixtures::desk_sampler();
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(sample_month(cfg, a) == sample_month(cfg, b));
  cfg.fixed_month = 7;
  for (int i = 0; i < 100; ++i) CHECK(sample_month(cfg, a) == 7);
}

TEST_CASE("zero sigma reproduces the mean profiles exactly") {
  const auto c = fixtures::desk();
  auto cfg = fixtures::desk_sampler();
  cfg.demand_sigma = 0.0;
  cfg.wind_sigma = 0.0;
  Rng rng(1);
  for (int m = 1; m <= 12; ++m) {
    const auto d = sample_demand(cfg, m, rng);
    const auto w = sample_wind(cfg, c, m, rng);
    CHECK(d == cfg.demand_profile * cfg.demand_monthly[m - 1]);
    Eigen::MatrixXd expect = cfg.wind_profile * cfg.wind_monthly[m - 1];
    for (int j = 0; j < c.num_wind(); ++j) expect.col(j) = expect.col(j).cwiseMin(c.wind[j].capacity);
    CHECK(w == expect);
  }
  cfg.fixed_month = 4;
  const auto x = sample_scenario(cfg, c, 11, 0), y = sample_scenario(cfg, c, 12, 5);
  CHECK(x.demand == y.demand);
  CHECK(x.wind == y.wind);
}

TEST_CASE("mean above capacity clamps to capacity at zero sigma") {
  auto [c, cfg] = single(150.0, 100.0, 0.0);
  Rng rng(3);
  CHECK((sample_wind(cfg, c, 1, rng).array() == 100.0).all());
}

TEST_CASE("clamped wind matches the censored-normal mean") {
  // Mean 100 MW, sd 15 MW, capacity 110 MW: clamping at capacity is active
  // about a quarter of the time.
  auto [c, cfg] = single(100.0, 110.0, 0.15);
  Rng rng(2016);
  double sum = 0.0;
  long n = 0;
  while (n < 100000) {
    const auto w = sample_wind(cfg, c, 1, rng);
    sum += w.sum();
    n += w.size();
  }
  const double oracle = censored_mean(100.0, 15.0, 110.0);
  CHECK(oracle == doctest::Approx(97.7332053).epsilon(1e-8));  // scipy: 97.73320529266218
  CHECK(std::abs(sum / n - oracle) < 0.5);
}

TEST_CASE("bounds hold over 10^6 draws with a wide spread") {
  const auto c = fixtures::desk();
  auto cfg = fixtures::desk_sampler();
  cfg.wind_sigma = 0.9;
  cfg.demand_sigma = 0.9;
  Rng rng(8);
  long wind_draws = 0, demand_draws = 0, at_zero = 0, at_cap = 0;
  bool ok = true;
  while (wind_draws < 1000000) {
    const int m = sample_month(cfg, rng);
    const auto w = sample_wind(cfg, c, m, rng);
    for (int j = 0; j < w.cols(); ++j) {
      ok = ok && (w.col(j).array() >= 0.0).all() && (w.col(j).array() <= c.wind[j].capacity).all();
      at_zero += (w.col(j).array() == 0.0).count();
      at_cap += (w.col(j).array() == c.wind[j].capacity).count();
    }
    wind_draws += w.size();
  }
  while (demand_draws < 1000000) {
    const auto d = sample_demand(cfg, sample_month(cfg, rng), rng);
    ok = ok && (d.array() >= 0.0).all();
    demand_draws += d.size();
  }
  CHECK(ok);
  // Both clamps actually engaged.
  CHECK(at_zero > 0);
  CHECK(at_cap > 0);
}

TEST_CASE("topology sampling") {
  auto c = fixtures::desk();
  auto cfg = fixtures::desk_sampler();
  Rng rng(4);

  SUBCASE("no candidates -> always all in service") {
    cfg.outages = {};
    for (int i = 0; i < 100; ++i) CHECK(sample_topology(cfg, c, rng) == grid::all_in_service(c));
  }
  SUBCASE("3 candidates without exclusivity: 8 subsets within 2 points of 1/8") {
    cfg.outages.zone_exclusive = false;
    std::map<int, int> freq;
    const int n = 80000;
    const int pos[3] = {c.line_index(2), c.line_index(5), c.line_index(7)};
    for (int i = 0; i < n; ++i) {
      const auto t = sample_topology(cfg, c, rng);
      int key = 0;
      for (int k = 0; k < 3; ++k) key |= (t[pos[k]] ? 0 : 1) << k;
      for (int k = 0; k < c.num_lines(); ++k)
        if (k != pos[0] && k != pos[1] && k != pos[2]) REQUIRE(t[k] == 1);
      ++freq[key];
    }
    CHECK(freq.size() == 8);
    for (const auto& [key, count] : freq) CHECK(std::abs(count / double(n) - 0.125) < 0.02);
  }
  SUBCASE("exclusivity keeps outages to one zone, interconnection may join") {
    bool with_interconnection = false;
    for (int i = 0; i < 20000; ++i) {
      const auto t = sample_topology(cfg, c, rng);
      const bool z1 = !t[c.line_index(2)], z2 = !t[c.line_index(5)];
      CHECK_FALSE((z1 && z2));
      with_interconnection = with_interconnection || ((z1 || z2) && !t[c.line_index(7)]);
    }
    CHECK(with_interconnection);
  }
}

TEST_CASE("scenarios are reproducible and randomly accessible") {
  const auto c = fixtures::desk();
  const auto cfg = fixtures::desk_sampler();
  ScenarioSampler s(cfg, c, 77, 10);
  for (std::uint64_t id = 10; id < 20; ++id) {
    const auto a = s.next();
    const auto b = sample_scenario(cfg, c, 77, id);
    CHECK(a.id == id);
    CHECK(a.seed == 77);
    CHECK(a.month == b.month);
    CHECK(a.demand == b.demand);
    CHECK(a.wind == b.wind);
    CHECK(a.top == b.top);
  }
  const auto x = sample_scenario(cfg, c, 1, 0), y = sample_scenario(cfg, c, 2, 0);
  CHECK(x.demand != y.demand);

  const auto j = input_from_json(input_to_json(x));
  CHECK(j.demand == x.demand);
  CHECK(j.wind == x.wind);
  CHECK(j.top == x.top);
  CHECK(j.month == x.month);
}

TEST_CASE("topology bits are uncorrelated with demand over 10^4 samples") {
  const auto c = fixtures::desk();
  const auto cfg = fixtures::desk_sampler();
  std::vector<double> total, first, bit2, bit5, bit7;
  for (std::uint64_t id = 0; id < 10000; ++id) {
    const auto x = sample_scenario(cfg, c, 31337, id);
    total.push_back(x.demand.sum());
    first.push_back(x.demand(12, 1));
    bit2.push_back(x.top[c.line_index(2)]);
    bit5.push_back(x.top[c.line_index(5)]);
    bit7.push_back(x.top[c.line_index(7)]);
  }
  for (const auto* bits : {&bit2, &bit5, &bit7}) {
    CHECK(std::abs(pearson(*bits, total)) < 0.03);
    CHECK(std::abs(pearson(*bits, first)) < 0.03);
  }
}
