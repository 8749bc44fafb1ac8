#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "fixtures.hpp"
#include "ucnn/error.hpp"
#include "ucnn/proxy.hpp"

using namespace ucnn;
using namespace ucnn::proxy;

namespace {

// One bus, one wind unit, two (self-loop) lines: featurize does not validate.
grid::GridCase one_bus_two_lines() {
  auto c = fixtures::buses(1);
  c.lines = {fixtures::line(1, 1, 1, 5.0), fixtures::line(2, 1, 1, 5.0)};
  c.generators = {fixtures::generator("G", 1, 0.0, 10.0, 1.0)};
  c.wind = {{"W", 1, 50.0}};
  return c;
}

Record record(std::uint64_t id, Eigen::VectorXd f, double cost = 0.0) {
  Record r;
  r.id = id;
  r.features = std::move(f);
  r.cost = cost;
  return r;
}

// Mixed continuous / binary points, like real features.
std::vector<Record> random_records(std::mt19937_64& rng, int n, int dim, int bits, std::uint64_t first_id = 0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Record> out;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd f(dim);
    for (int d = 0; d < dim - bits; ++d) f[d] = std::round(normal(rng) * 4.0) / 4.0;  // coarse grid: ties
    for (int d = dim - bits; d < dim; ++d) f[d] = static_cast<double>(rng() % 2);
    out.push_back(record(first_id + i, f, 1000.0 + i));
  }
  return out;
}

Eigen::VectorXd weights(int dim, int bits) {
  Eigen::VectorXd xi = Eigen::VectorXd::Ones(dim);
  xi.tail(bits).setConstant(kTopologyWeight);
  return xi;
}

// Brute force with the textbook formula sqrt(sum xi^2 (a - b)^2), ties to the
// lowest id.
std::uint64_t oracle(const std::vector<Record>& recs, const Eigen::VectorXd& q, const Eigen::VectorXd& xi) {
  std::uint64_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) s += xi[i] * xi[i] * (q[i] - r.features[i]) * (q[i] - r.features[i]);
    const double d = std::sqrt(s);
    if (d < best_d || (d == best_d && r.id < best)) {
      best_d = d;
      best = r.id;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("featurize: length, content and hour-major order") {
  const auto c = one_bus_two_lines();
  CHECK(feature_length(c, 24) == 24 + 24 + 2);
  auto x = fixtures::flat_input(c, 24, 0.0);
  const auto phi = featurize(c, x);
  REQUIRE(phi.size() == 50);
  CHECK(phi.head(48).isZero());
  CHECK(phi[48] == 1.0);
  CHECK(phi[49] == 1.0);

  const auto d = fixtures::desk();
  const auto y = sampling::sample_scenario(fixtures::desk_sampler(), d, 1, 1);
  const auto f = featurize(d, y);
  REQUIRE(f.size() == 24 * 6 + 24 * 2 + 7);
  for (int t = 0; t < 24; ++t) {
    for (int b = 0; b < 6; ++b) CHECK(f[t * 6 + b] == y.demand(t, b));
    for (int w = 0; w < 2; ++w) CHECK(f[144 + t * 2 + w] == y.wind(t, w));
  }
  for (int k = 0; k < 7; ++k) CHECK(f[192 + k] == y.top[k]);

  auto bad = y;
  bad.top.pop_back();
  CHECK_THROWS_AS(featurize(d, bad), PreconditionError);
}

TEST_CASE("featurize follows the case's bus order") {
  auto a = fixtures::buses(2);
  a.generators = {fixtures::generator("G", 1, 0.0, 10.0, 1.0)};
  auto b = a;
  std::swap(b.buses[0], b.buses[1]);
  auto xa = fixtures::flat_input(a, 3, 0.0);
  xa.demand << 1, 2, 3, 4, 5, 6;
  auto xb = xa;
  xb.demand.col(0) = xa.demand.col(1);
  xb.demand.col(1) = xa.demand.col(0);
  const auto fa = featurize(a, xa), fb = featurize(b, xb);
  for (int t = 0; t < 3; ++t) {
    CHECK(fa[2 * t] == fb[2 * t + 1]);
    CHECK(fa[2 * t + 1] == fb[2 * t]);
  }
}

TEST_CASE("weighted distance examples") {
  const auto d = fixtures::desk();
  const auto xi = default_weights(d, 24);
  CHECK(xi.head(192).isOnes());
  CHECK((xi.tail(7).array() == 100.0).all());
  const auto a = featurize(d, sampling::sample_scenario(fixtures::desk_sampler(), d, 1, 1));
  CHECK(distance(a, a, xi) == 0.0);
  auto b = a;
  b[194] = 1.0 - b[194];
  CHECK(distance(a, b, xi) == 100.0);
  b[7] += 3.0;
  CHECK(distance(a, b, xi) == doctest::Approx(std::sqrt(9.0 + 10000.0)).epsilon(1e-15));
  CHECK(distance(a, b, xi) == doctest::Approx(100.045).epsilon(1e-5));
  CHECK_THROWS_AS(distance(a, Eigen::VectorXd(a.head(10)), xi), PreconditionError);
}

TEST_CASE("metric properties on random triples") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 10.0);
  const int dim = 20;
  const auto xi = weights(dim, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd a(dim), b(dim), c(dim);
    for (int i = 0; i < dim; ++i) a[i] = n(rng), b[i] = n(rng), c[i] = n(rng);
    const double ab = distance(a, b, xi), ba = distance(b, a, xi);
    CHECK(ab == ba);
    CHECK(ab > 0.0);
    CHECK(distance(a, a, xi) == 0.0);
    CHECK(distance(a, c, xi) <= ab + distance(b, c, xi) + 1e-9);
  }
}

TEST_CASE("index construction and preconditions") {
  const Eigen::VectorXd xi = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(ProxyIndex::build({}, xi, "fp"), PreconditionError);
  CHECK_THROWS_AS(ProxyIndex(Eigen::VectorXd::Zero(3), "fp"), PreconditionError);
  CHECK_THROWS_AS(ProxyIndex::build({record(1, Eigen::Vector3d(0, 0, 0)), record(1, Eigen::Vector3d(1, 0, 0))}, xi,
                                    "fp"),
                  PreconditionError);
  CHECK_THROWS_AS(ProxyIndex::build({record(1, Eigen::Vector2d(0, 0))}, xi, "fp"), PreconditionError);
  auto foreign = record(2, Eigen::Vector3d(0, 0, 0));
  foreign.fingerprint = "other";
  CHECK_THROWS_AS(ProxyIndex::build({record(1, Eigen::Vector3d(0, 0, 0)), foreign}, xi, "fp"), FingerprintError);

  ProxyIndex idx(xi, "fp");
  CHECK_THROWS_AS(idx.nearest(Eigen::Vector3d(0, 0, 0)), PreconditionError);
  idx.add_sample(record(4, Eigen::Vector3d(1, 2, 3)));
  CHECK_THROWS_AS(idx.add_sample(record(4, Eigen::Vector3d(0, 0, 0))), PreconditionError);
  CHECK_THROWS_AS(idx.add_sample(record(5, Eigen::Vector2d(0, 0))), PreconditionError);
  CHECK(idx.size() == 1);
}

TEST_CASE("nearest-neighbour examples") {
  const Eigen::VectorXd xi = Eigen::VectorXd::Ones(2);
  for (auto backend : {Backend::Linear, Backend::KdTree}) {
    CAPTURE(to_string(backend));
    // Singleton: every query returns the one record.
    auto one = ProxyIndex::build({record(9, Eigen::Vector2d(1, 1))}, xi, "fp", backend);
    CHECK(one.records()[one.nearest(Eigen::Vector2d(-50, 3)).position].id == 9);
    // Distances 5 and 7.
    auto two = ProxyIndex::build({record(1, Eigen::Vector2d(7, 0)), record(2, Eigen::Vector2d(3, 4))}, xi, "fp",
                                 backend);
    const auto nb = two.nearest(Eigen::Vector2d(0, 0));
    CHECK(two.records()[nb.position].id == 2);
    CHECK(nb.squared == 25.0);
    // Duplicate vectors: the lower id wins whatever the insertion order.
    auto dup = ProxyIndex::build({record(8, Eigen::Vector2d(2, 2)), record(3, Eigen::Vector2d(2, 2)),
                                  record(5, Eigen::Vector2d(2, 2))},
                                 xi, "fp", backend);
    CHECK(dup.records()[dup.nearest(Eigen::Vector2d(2, 2)).position].id == 3);
    CHECK(dup.records()[dup.nearest(Eigen::Vector2d(0, 1)).position].id == 3);
  }
}

TEST_CASE("kd-tree agrees with the linear scan") {
  std::mt19937_64 rng(99);
  for (int dim : {3, 12, 60}) {
    const int bits = dim / 4;
    auto recs = random_records(rng, 1000, dim, bits);
    std::shuffle(recs.begin(), recs.end(), rng);
    const auto xi = weights(dim, bits);
    const auto lin = ProxyIndex::build(recs, xi, "fp", Backend::Linear);
    const auto kd = ProxyIndex::build(recs, xi, "fp", Backend::KdTree);
    const auto queries = random_records(rng, 200, dim, bits, 5000);
    for (int q = 0; q < 200; ++q) {
      // Half the queries sit exactly on stored points to exercise ties.
      const auto& f = q % 2 ? queries[q].features : recs[q].features;
      const auto a = lin.nearest(f), b = kd.nearest(f);
      CHECK(lin.records()[a.position].id == kd.records()[b.position].id);
      CHECK(a.squared == b.squared);
      CHECK(lin.records()[a.position].id == oracle(recs, f, xi));
    }
  }
}

TEST_CASE("incremental inserts match a batch build") {
  std::mt19937_64 rng(3);
  const int dim = 10, bits = 3;
  const auto recs = random_records(rng, 1000, dim, bits);
  const auto xi = weights(dim, bits);
  const auto queries = random_records(rng, 200, dim, bits, 9000);
  for (auto backend : {Backend::Linear, Backend::KdTree}) {
    const auto batch = ProxyIndex::build(recs, xi, "fp", backend);
    ProxyIndex inc(xi, "fp", backend);
    std::vector<double> prev(queries.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      inc.add_sample(recs[i]);
      // Self-retrieval right after insertion.
      const auto self = inc.nearest(recs[i].features);
      CHECK(self.squared == 0.0);
      if (i % 97 == 0) {
        for (std::size_t q = 0; q < queries.size(); ++q) {
          const double d = inc.nearest(queries[q].features).squared;
          CHECK(d <= prev[q]);  // a superset never moves the neighbour away
          prev[q] = d;
        }
      }
    }
    for (const auto& q : queries) {
      CHECK(inc.records()[inc.nearest(q.features).position].id ==
            batch.records()[batch.nearest(q.features).position].id);
    }
  }
}

TEST_CASE("scaling every weight leaves the neighbour unchanged") {
  std::mt19937_64 rng(17);
  const int dim = 8, bits = 2;
  // Tied points: a power-of-two scale is exact, so ties survive it.
  const auto recs = random_records(rng, 300, dim, bits);
  const auto xi = weights(dim, bits);
  const auto a = ProxyIndex::build(recs, xi, "fp"), b = ProxyIndex::build(recs, xi * 4.0, "fp");
  for (const auto& q : random_records(rng, 100, dim, bits, 10000)) {
    CHECK(a.nearest(q.features).position == b.nearest(q.features).position);
  }
  // Untied continuous points under an inexact scale.
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Record> cont;
  for (int i = 0; i < 300; ++i) {
    Eigen::VectorXd f(dim);
    for (int d = 0; d < dim; ++d) f[d] = n(rng);
    cont.push_back(record(i, f));
  }
  const auto c = ProxyIndex::build(cont, xi, "fp"), e = ProxyIndex::build(cont, xi * 3.7, "fp");
  for (int q = 0; q < 100; ++q) {
    Eigen::VectorXd f(dim);
    for (int d = 0; d < dim; ++d) f[d] = n(rng);
    CHECK(c.nearest(f).position == e.nearest(f).position);
  }
}

TEST_CASE("predictions on the desk case") {
  const auto c = fixtures::desk();
  const auto cfg = fixtures::desk_sampler();
  std::vector<Record> recs;
  for (std::uint64_t id = 0; id < 300; ++id) {
    const auto x = sampling::sample_scenario(cfg, c, 42, id);
    Record r = record(id, featurize(c, x), 1e5 + 0.1 * static_cast<double>(id) + 1.0 / 3.0);
    r.month = x.month;
    recs.push_back(r);
  }
  const auto xi = default_weights(c, 24);
  const auto fp = index_fingerprint(c);
  for (auto backend : {Backend::Linear, Backend::KdTree}) {
    const auto idx = ProxyIndex::build(recs, xi, fp, backend);
    for (std::uint64_t id = 0; id < 300; id += 7) {
      const auto p = idx.predict(c, sampling::sample_scenario(cfg, c, 42, id));
      CHECK(p.neighbor == id);
      CHECK(p.distance == 0.0);
      CHECK(p.cost == recs[id].cost);  // bit-exact
    }
    for (std::uint64_t id = 1000; id < 1200; ++id) {
      const auto x = sampling::sample_scenario(cfg, c, 42, id);
      const auto p = idx.predict(c, x);
      const auto want = oracle(recs, featurize(c, x), xi);
      CHECK(p.neighbor == want);
      CHECK(p.cost == recs[want].cost);
      CHECK(p.distance >= 0.0);
    }
    // Queries never touch stored labels.
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(idx.records()[i].cost == recs[i].cost);
  }
  auto other = c;
  other.voll += 1.0;
  const auto idx = ProxyIndex::build(recs, xi, fp);
  CHECK_THROWS_AS(idx.predict(other, sampling::sample_scenario(cfg, c, 42, 0)), FingerprintError);
  CHECK(index_fingerprint(other) != fp);
}

TEST_CASE("index archives round trip") {
  std::mt19937_64 rng(8);
  const auto dir = std::filesystem::temp_directory_path() / "ucnn_proxy_test";
  std::filesystem::remove_all(dir);
  const int dim = 6, bits = 2;
  auto recs = random_records(rng, 50, dim, bits);
  recs[3].month = 7;
  recs[3].seed = 99;
  const auto idx = ProxyIndex::build(recs, weights(dim, bits), "fp", Backend::KdTree);
  idx.save(dir);
  const auto back = ProxyIndex::load(dir);
  CHECK(back.size() == 50);
  CHECK(back.backend() == Backend::KdTree);
  CHECK(back.fingerprint() == "fp");
  CHECK(back.weights() == idx.weights());
  CHECK(back.records()[3].month == 7);
  CHECK(back.records()[3].seed == 99);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back.records()[i].features == recs[i].features);
    CHECK(back.records()[i].cost == recs[i].cost);
  }
  for (const auto& q : random_records(rng, 30, dim, bits, 100)) {
    CHECK(back.nearest(q.features).position == idx.nearest(q.features).position);
  }
  CHECK_THROWS_AS(ProxyIndex::load(dir / "absent"), MissingArtifactError);
  {
    auto meta = nlohmann::json::parse(std::ifstream(dir / "meta.json"));
    meta["convention"] = "column-major";
    std::ofstream(dir / "meta.json") << meta.dump();
  }
  CHECK_THROWS_AS(ProxyIndex::load(dir), FingerprintError);
  std::filesystem::remove_all(dir);
}
